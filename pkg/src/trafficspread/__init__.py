"""Energy-aware traffic spreading for small-cell downlinks.

Synthesizes optimal and heuristic dispatching policies (which user's BS
queue carries each new file request) under a delay/rerouting-energy
tradeoff, and evaluates them in a slotted-time stochastic simulator.

Modules:
    channel    -- discretized Rayleigh-fading channel models
    scheduler  -- BS scheduling policies and average service rates
    mdp        -- the dispatching MDP, relative value iteration, structure checks
    heuristic  -- N-user dispatching via cached two-user solutions
    sim        -- the simulator, baselines and the delay lower bound
    cluster    -- large-cell clustering and BS time-share estimation
    config     -- scenario files (YAML) -> ScenarioConfig
    cli        -- command-line front end
"""

__version__ = "0.1.0"

from .channel import (
    ChannelConfig,
    ChannelModel,
    FadingProcess,
    discretize,
    mean_snr,
    next_state,
    on_off_model,
    rate_from_snr,
)
from .cluster import ClusterState, estimate_alpha, form_clusters, scaled_rates
from .heuristic import DpCache, ReducedProblem, cache_key, dispatch, least_workload_user
from .mdp import (
    CostModel,
    DeltaReport,
    MdpProblem,
    MdpSolution,
    SwitchingCurves,
    bellman_backup,
    extract_switching_curves,
    solve,
    verify_delta_monotonicity,
)
from .scheduler import SchedulerPolicy, ServiceRateTable, average_rates, build_table, select
from .sim import (
    InstabilityError,
    ScenarioConfig,
    SimReport,
    StoppingRule,
    UserSpec,
    jsq_dispatch,
    lower_bound_schedule,
    measure_tradeoff,
    run,
)

__all__ = [
    "ChannelConfig", "ChannelModel", "FadingProcess", "discretize", "mean_snr",
    "next_state", "on_off_model", "rate_from_snr",
    "SchedulerPolicy", "ServiceRateTable", "average_rates", "build_table", "select",
    "CostModel", "MdpProblem", "MdpSolution", "SwitchingCurves", "DeltaReport",
    "bellman_backup", "extract_switching_curves", "solve", "verify_delta_monotonicity",
    "DpCache", "ReducedProblem", "cache_key", "dispatch", "least_workload_user",
    "ClusterState", "estimate_alpha", "form_clusters", "scaled_rates",
    "ScenarioConfig", "SimReport", "StoppingRule", "UserSpec", "InstabilityError",
    "jsq_dispatch", "lower_bound_schedule", "measure_tradeoff", "run",
    "__version__",
]
