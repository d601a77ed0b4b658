"""Slotted-time stochastic simulator with confidence-controlled stopping.

Poisson file requests arrive at exact timestamps; a dispatcher picks the
carrying queue at each arrival (charging rerouting energy when the carrier
differs from the owner); every slot the BS scheduler serves one queue at the
instantaneous channel rate.  Estimates come from batch means over a single
long run: the run is cut into batches of consecutive mini-batches, the first
tenth of each batch is discarded as transient, and the run extends until the
delay and power half-widths meet the configured relative target.

Dispatchers: ``none`` (always direct), ``jsq`` (least remaining work),
``optimal`` (solved dispatch policy), ``heuristic`` (two-user aggregation),
``lower-bound`` (policy dispatch plus the BS-side recoup schedule).  Cluster
scenarios run each cluster's dispatch policy on BS-time-share-scaled rates,
re-estimated online.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from . import _kernel as K
from .channel import ChannelConfig, ChannelModel, FadingProcess, discretize
from .cluster import ClusterState, scaled_rates
from .heuristic import DpCache, decision_table, dispatch
from .mdp import CostModel, MdpProblem, padded_truncation, solve
from .scheduler import SchedulerPolicy, build_table

DISPATCHERS = ("none", "jsq", "optimal", "heuristic", "lower-bound")

# decision tables beyond this size are computed lazily per arrival instead
PRECOMPUTE_TABLE_LIMIT = 200_000


class InstabilityError(RuntimeError):
    """Queues grow without bound for the offered load."""

    def __init__(self, offered: str):
        super().__init__(f"queues are not stabilizing: {offered}")
        self.offered = offered


@dataclass(frozen=True)
class UserSpec:
    distance_m: float
    arrival_rate: float
    mean_file_bytes: float = 1e6

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ValueError("distance_m must be positive")
        if self.arrival_rate < 0:
            raise ValueError("arrival_rate must be non-negative (0 = pure relay)")
        if self.mean_file_bytes <= 0:
            raise ValueError("mean_file_bytes must be positive")


@dataclass(frozen=True)
class StoppingRule:
    relative_half_width: float = 0.02
    confidence: float = 0.95
    # near-zero rerouting power cannot meet a relative target; an absolute
    # floor on its half-width keeps heavy-weight runs finite
    power_floor_w: float = 1e-3
    warmup_fraction: float = 0.1
    mini_slots: int = 50_000
    initial_minibatches: int = 120
    growth: float = 0.6
    max_slots: int = 1_500_000_000
    target_batches: int = 40
    min_group: int = 10


@dataclass
class ScenarioConfig:
    users: list[UserSpec]
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    scheduler: SchedulerPolicy = field(default_factory=SchedulerPolicy)
    dispatcher: str = "none"
    costs: CostModel | None = None
    fading: FadingProcess = field(default_factory=FadingProcess)
    local_link_congested: bool = False
    seed: int = 0
    stopping: StoppingRule = field(default_factory=StoppingRule)
    truncation: int = 40
    heuristic_truncation: int = 30
    clusters: list[list[int]] | None = None
    alpha_window_slots: int = 100_000
    alpha_resolve_threshold: float = 0.05

    def __post_init__(self):
        if not self.users:
            raise ValueError("at least one user required")
        if self.dispatcher not in DISPATCHERS:
            raise ValueError(f"dispatcher must be one of {DISPATCHERS}")
        if sum(u.arrival_rate for u in self.users) <= 0:
            raise ValueError("total arrival rate must be positive")
        n = len(self.users)
        if self.costs is None:
            self.costs = CostModel.uniform(n, eta=0.0, phi_j=1.0, weight=0.0)
        if self.costs.n_users != n:
            raise ValueError("cost matrices do not match the user count")
        if self.clusters is not None:
            flat = sorted(u for c in self.clusters for u in c)
            if flat != list(range(n)):
                raise ValueError("clusters must partition the users")

    @property
    def n_users(self) -> int:
        return len(self.users)

    def cluster_list(self) -> list[list[int]]:
        if self.clusters is None:
            return [list(range(self.n_users))]
        return [sorted(c) for c in self.clusters]


@dataclass
class SimReport:
    mean_delay_s: float
    delay_half_width_s: float
    rerouting_power_w: float
    power_half_width_w: float
    reroute_rates: np.ndarray
    total_reroute_energy_j: float
    measured_time_s: float
    mean_queue_len: float
    littles_law_delay_s: float
    slots: int
    batches: int
    minibatches: int
    completions: int
    arrivals: int
    arrivals_by_owner: np.ndarray
    completions_by_owner: np.ndarray
    in_system_by_owner: np.ndarray
    utilization: float
    met_target: bool
    confidence: float
    relative_target: float
    seed: int
    dispatcher: str
    alpha: np.ndarray | None = None

    def as_record(self) -> dict:
        """Flat JSON-serializable view (consumed by the CLI)."""
        rec = {
            "dispatcher": self.dispatcher,
            "seed": self.seed,
            "mean_delay_s": self.mean_delay_s,
            "delay_half_width_s": self.delay_half_width_s,
            "rerouting_power_w": self.rerouting_power_w,
            "power_half_width_w": self.power_half_width_w,
            "total_reroute_energy_j": self.total_reroute_energy_j,
            "measured_time_s": self.measured_time_s,
            "mean_queue_len": self.mean_queue_len,
            "littles_law_delay_s": self.littles_law_delay_s,
            "slots": self.slots,
            "batches": self.batches,
            "minibatches": self.minibatches,
            "completions": self.completions,
            "arrivals": self.arrivals,
            "utilization": self.utilization,
            "met_target": self.met_target,
            "confidence": self.confidence,
            "relative_target": self.relative_target,
            "reroute_rates": self.reroute_rates.tolist(),
            "arrivals_by_owner": self.arrivals_by_owner.tolist(),
            "completions_by_owner": self.completions_by_owner.tolist(),
            "in_system_by_owner": self.in_system_by_owner.tolist(),
        }
        if self.alpha is not None:
            rec["alpha"] = self.alpha.tolist()
        return rec


# --- reference dispatch / scheduling rules (mirrored inside the kernel) --------

def jsq_dispatch(workloads, owner: int) -> int:
    """Target queue for an arrival: least remaining work in seconds; ties
    prefer the owner, then the lowest index."""
    workloads = np.asarray(workloads, dtype=float)
    best = workloads[owner]
    tgt = owner
    for u in range(len(workloads)):
        if u != owner and workloads[u] < best:
            best = workloads[u]
            tgt = u
    return tgt


@dataclass
class LowerBoundState:
    """Running ledger of data the BS re-routed on its own initiative."""

    theta_bs: float = 0.0


def lower_bound_schedule(rates, q_counts, head_owners, state: LowerBoundState):
    """BS-side recoup rule, applied before the base scheduler each slot.

    Returns (queue_to_serve, carrying_user, case) or None to fall through.
    Case 1 serves a queue whose head file belongs to the best-rate user j
    (credit: caller decrements theta_bs by the drained bits); case 2 serves
    any queue with a foreign head; case 3, allowed only while theta_bs < 0,
    serves the longest queue (caller increments theta_bs).  In every case
    the transmission rides user j's channel, which is what recoups the
    opportunistic slot.
    """
    rates = np.asarray(rates, dtype=float)
    q_counts = np.asarray(q_counts, dtype=int)
    head_owners = np.asarray(head_owners, dtype=int)
    j = int(np.argmax(rates))
    if q_counts[j] > 0:
        return None
    for u in range(len(q_counts)):
        if q_counts[u] > 0 and head_owners[u] == j:
            return u, j, 1
    for u in range(len(q_counts)):
        if q_counts[u] > 0 and head_owners[u] != u:
            return u, j, 2
    if state.theta_bs < 0 and q_counts.max() > 0:
        return int(np.argmax(q_counts)), j, 3
    return None


# --- policy construction --------------------------------------------------------

def _cluster_cost_model(costs: CostModel, members: list[int]) -> CostModel:
    idx = np.ix_(members, members)
    return CostModel(eta=costs.eta[idx], phi=costs.phi[idx], weights=costs.weights[idx])


def _cluster_rate_table(config: ScenarioConfig, models: list[ChannelModel],
                        members: list[int], alpha_l: float, use_box: int,
                        queue_aware_ok: bool = True):
    sub_models = [models[u] for u in members]
    theta = np.array([config.users[u].mean_file_bytes * 8.0 for u in members])
    policy = config.scheduler
    if policy.queue_aware and queue_aware_ok:
        sub_policy = policy
        if policy.log_rule_a is not None:
            sub_policy = replace(policy, log_rule_a=policy.weights_a(config.n_users)[members])
        table = build_table(sub_policy, sub_models, truncation=padded_truncation(use_box),
                            mean_file_bits=theta)
    else:
        table = build_table(SchedulerPolicy(kind="greedy"), sub_models)
    return scaled_rates(alpha_l, table) if alpha_l != 1.0 else table


def _optimal_cluster_table(config: ScenarioConfig, models, members, alpha_l, use_box):
    """Solve the cluster's dispatch MDP and slice the artifact-free core."""
    if len(members) > 3:
        raise ValueError(
            f"optimal dispatch supports clusters of up to 3 users, got {len(members)}; "
            "use the heuristic dispatcher"
        )
    theta = np.array([config.users[u].mean_file_bytes * 8.0 for u in members])
    lam = np.array([config.users[u].arrival_rate for u in members])
    table = _cluster_rate_table(config, models, members, alpha_l, use_box)
    problem = MdpProblem(
        arrival_rates=lam,
        rate_table=table,
        costs=_cluster_cost_model(config.costs, members),
        truncation=padded_truncation(use_box),
        mean_file_bits=theta,
        stability_warning=False,
    )
    solution = solve(problem)
    m = len(members)
    core = solution.policy[(slice(0, use_box + 1),) * m]
    return np.ascontiguousarray(core, dtype=np.int8)


def _heuristic_cluster_table(config: ScenarioConfig, models, members, alpha_l,
                             cache: DpCache, table_cap: int):
    theta = np.array([config.users[u].mean_file_bytes * 8.0 for u in members])
    lam = np.array([config.users[u].arrival_rate for u in members])
    table = _cluster_rate_table(config, models, members, alpha_l,
                                config.heuristic_truncation, queue_aware_ok=False)
    if config.scheduler.queue_aware:
        raise ValueError("the aggregation heuristic supports queue-unaware schedulers only")
    return decision_table(
        lam, table, _cluster_cost_model(config.costs, members), cache,
        mean_file_bits=theta, truncation=config.heuristic_truncation, table_cap=table_cap,
    )


class _Dispatch:
    """Per-run dispatcher assembly: kernel mode, flattened decision tables,
    and the lazy fallback for state spaces too large to precompute."""

    def __init__(self, config: ScenarioConfig, models: list[ChannelModel]):
        self.config = config
        self.models = models
        self.clusters = config.cluster_list()
        self.kind = "none" if config.local_link_congested else config.dispatcher
        self.cache = DpCache()
        self.lazy_memo: dict = {}
        self.lb_enabled = self.kind == "lower-bound"
        n = config.n_users

        self.cluster_of = np.zeros(n, dtype=np.int64)
        max_m = max(len(c) for c in self.clusters)
        self.members = np.full((len(self.clusters), max_m), -1, dtype=np.int64)
        self.msize = np.zeros(len(self.clusters), dtype=np.int64)
        for l, c in enumerate(self.clusters):
            self.msize[l] = len(c)
            for k, u in enumerate(c):
                self.cluster_of[u] = l
                self.members[l, k] = u

        if self.kind in ("none", "jsq"):
            self.mode = K.DISP_NONE if self.kind == "none" else K.DISP_JSQ
            self.table_cap = 1
            self.tables = np.zeros(1, dtype=np.int8)
            self.tbl_off = np.zeros(len(self.clusters), dtype=np.int64)
            return

        # one clamp cap for all clusters; the heuristic's cached solves use the
        # smaller box, so it wins when both policy kinds are in play
        kinds = {self._cluster_kind(c) for c in self.clusters if len(c) > 1}
        self.table_cap = config.heuristic_truncation if "heuristic" in kinds else config.truncation
        too_big = any(
            (self.table_cap + 1) ** len(c) * len(c) > PRECOMPUTE_TABLE_LIMIT
            for c in self.clusters if self._cluster_kind(c) == "heuristic"
        )
        self.mode = K.DISP_EXTERNAL if too_big else K.DISP_TABLE
        self.tables = np.zeros(1, dtype=np.int8)
        self.tbl_off = np.zeros(len(self.clusters), dtype=np.int64)

    def _cluster_kind(self, members) -> str:
        if self.kind == "optimal":
            return "optimal"
        if self.kind == "heuristic":
            return "heuristic"
        # lower-bound: policy dispatch is optimal where tractable
        return "optimal" if len(members) <= 2 else "heuristic"

    def rebuild(self, alpha: np.ndarray):
        """(Re)build per-cluster decision tables for the given BS time shares."""
        flats = []
        offs = []
        pos = 0
        for l, members in enumerate(self.clusters):
            m = len(members)
            if m == 1:
                tbl = np.zeros(((self.table_cap + 1), 1), dtype=np.int8)
            elif self._cluster_kind(members) == "optimal":
                tbl = _optimal_cluster_table(self.config, self.models, members,
                                             float(alpha[l]), self.table_cap)
            else:
                tbl = _heuristic_cluster_table(self.config, self.models, members,
                                               float(alpha[l]), self.cache, self.table_cap)
            flat = np.ascontiguousarray(tbl, dtype=np.int8).reshape(-1)
            offs.append(pos)
            flats.append(flat)
            pos += len(flat)
        self.tables = np.concatenate(flats)
        self.tbl_off = np.array(offs, dtype=np.int64)
        self.lazy_memo.clear()

    def lazy_target(self, owner: int, q_counts: np.ndarray, alpha: np.ndarray) -> int:
        """Per-arrival decision for state spaces too large to tabulate."""
        l = int(self.cluster_of[owner])
        members = self.clusters[l]
        sub_q = tuple(int(min(q_counts[u], self.config.heuristic_truncation)) for u in members)
        local_owner = members.index(owner)
        key = (l, sub_q, local_owner)
        hit = self.lazy_memo.get(key)
        if hit is not None:
            return hit
        theta = np.array([self.config.users[u].mean_file_bytes * 8.0 for u in members])
        lam = np.array([self.config.users[u].arrival_rate for u in members])
        table = _cluster_rate_table(self.config, self.models, members, float(alpha[l]),
                                    self.config.heuristic_truncation, queue_aware_ok=False)
        local = dispatch(
            local_owner, np.array(sub_q), lam, table,
            _cluster_cost_model(self.config.costs, members), self.cache,
            mean_file_bits=theta, truncation=self.config.heuristic_truncation,
        )
        target = members[local]
        self.lazy_memo[key] = target
        return target


# --- the run loop ----------------------------------------------------------------

_QUEUE_CAPACITY = 100_000


class _RunState:
    def __init__(self, config: ScenarioConfig, models: list[ChannelModel]):
        n = config.n_users
        self.chan = np.zeros(n, dtype=np.int64)
        self.q_rem = np.zeros((n, _QUEUE_CAPACITY))
        self.q_owner = np.zeros((n, _QUEUE_CAPACITY), dtype=np.int64)
        self.q_treq = np.zeros((n, _QUEUE_CAPACITY))
        self.q_head = np.zeros(n, dtype=np.int64)
        self.q_count = np.zeros(n, dtype=np.int64)
        self.rem_tally = np.zeros(n)
        self.next_arr = np.zeros(n)
        self.theta_bs = np.zeros(1)
        self.slot_counter = np.zeros(1, dtype=np.int64)
        self.pending = np.full(2, -1, dtype=np.int64)
        self.pending_t = np.zeros(1)

    def in_system_by_owner(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for u in range(n):
            head, count = int(self.q_head[u]), int(self.q_count[u])
            for k in range(count):
                out[int(self.q_owner[u, (head + k) % _QUEUE_CAPACITY])] += 1
        return out

    def refresh_tally(self, n: int):
        # incremental float updates drift over long runs; recompute exactly
        for u in range(n):
            head, count = int(self.q_head[u]), int(self.q_count[u])
            idx = (head + np.arange(count)) % _QUEUE_CAPACITY
            self.rem_tally[u] = float(self.q_rem[u, idx].sum())


@dataclass
class _MiniBatch:
    acc: np.ndarray
    reroutes: np.ndarray
    served: np.ndarray
    arr_by_owner: np.ndarray
    comp_by_owner: np.ndarray
    slots: int


def _group_stats(minis: list[_MiniBatch], stopping: StoppingRule, slot_s: float):
    """Batch means over groups of mini-batches, first tenth of each dropped."""
    m = len(minis)
    group = max(stopping.min_group, math.ceil(m / stopping.target_batches))
    n_batches = m // group
    drop = math.ceil(stopping.warmup_fraction * group)
    delay_means, power_means, qlen_means = [], [], []
    retained: list[_MiniBatch] = []
    for b in range(n_batches):
        rows = minis[b * group + drop: (b + 1) * group]
        retained.extend(rows)
        ncomp = sum(r.acc[K.ACC_NCOMP] for r in rows)
        tsec = sum(r.slots for r in rows) * slot_s
        delay_means.append(sum(r.acc[K.ACC_DELAY] for r in rows) / ncomp if ncomp else np.nan)
        power_means.append(sum(r.acc[K.ACC_ENERGY] for r in rows) / tsec)
        qlen_means.append(sum(r.acc[K.ACC_QINT] for r in rows) / tsec)
    return retained, np.array(delay_means), np.array(power_means), np.array(qlen_means), n_batches


def _half_width(means: np.ndarray, confidence: float) -> float:
    means = means[~np.isnan(means)]
    if len(means) < 2:
        return np.inf
    tq = stats.t.ppf(0.5 + confidence / 2.0, len(means) - 1)
    return float(tq * means.std(ddof=1) / math.sqrt(len(means)))


def run(config: ScenarioConfig) -> SimReport:
    """Simulate the scenario until the confidence targets are met.

    Raises InstabilityError when queues grow without bound and ValueError on
    malformed configurations.  Identical config and seed give bit-identical
    reports.
    """
    n = config.n_users
    models = [discretize(config.channel, u.distance_m) for u in config.users]
    lam = np.array([u.arrival_rate for u in config.users])
    theta_bits = np.array([u.mean_file_bytes * 8.0 for u in config.users])
    solo_rate = np.array([m.mean_rate for m in models])
    k_states = config.channel.num_states
    cum_probs = np.stack([m.cum_probs for m in models])
    rates = np.stack([m.rates for m in models])
    slot_s = config.channel.slot_s
    stopping = config.stopping

    disp = _Dispatch(config, models)
    clusters = disp.clusters
    n_clusters = len(clusters)
    offered = np.array([sum(lam[u] * theta_bits[u] for u in c) for c in clusters])
    alpha = offered / offered.sum() if n_clusters > 1 else np.ones(1)
    alpha_est = alpha.copy()
    if disp.mode == K.DISP_TABLE:
        disp.rebuild(alpha)

    pen_costs = config.costs
    log_a = config.scheduler.weights_a(n)
    sched_kind = {"greedy": K.SCHED_GREEDY, "log-rule": K.SCHED_LOG, "lcq": K.SCHED_LCQ}[config.scheduler.kind]
    sched_sign = -1.0 if (config.scheduler.kind == "log-rule" and config.scheduler.strict_argmin) else 1.0
    lcq_coef = theta_bits / solo_rate
    arr_scale = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), np.inf)

    state = _RunState(config, models)
    K.seed_kernel(config.seed)
    K.init_arrivals(state.next_arr, arr_scale)
    stay_prob = config.fading.correlation

    minis: list[_MiniBatch] = []
    tot_arr_by_owner = np.zeros(n)
    tot_comp_by_owner = np.zeros(n)
    served_window: list[np.ndarray] = []
    window_minis = max(1, math.ceil(config.alpha_window_slots / stopping.mini_slots))

    def run_minibatch() -> _MiniBatch:
        acc = np.zeros(K.ACC_LEN)
        reroutes = np.zeros((n, n))
        served = np.zeros(n)
        arr_o = np.zeros(n)
        comp_o = np.zeros(n)
        start = int(state.slot_counter[0])
        end = start + stopping.mini_slots
        while True:
            status = K.run_slots(
                end, slot_s, n, cum_probs, rates, stay_prob,
                sched_kind, sched_sign, config.scheduler.log_rule_b, log_a,
                lcq_coef, theta_bits, arr_scale,
                pen_costs.eta, pen_costs.phi,
                disp.mode, solo_rate,
                disp.cluster_of, disp.members, disp.msize,
                disp.tables, disp.tbl_off, disp.table_cap,
                disp.lb_enabled,
                state.chan, state.q_rem, state.q_owner, state.q_treq,
                state.q_head, state.q_count, state.rem_tally,
                state.next_arr, state.theta_bs, state.slot_counter,
                state.pending, state.pending_t,
                acc, reroutes, served, arr_o, comp_o,
            )
            if status == K.ST_BUDGET:
                break
            if status == K.ST_OVERFLOW:
                raise InstabilityError(_offered_description(lam, theta_bits, solo_rate))
            # external dispatch decision
            owner = int(state.pending[0])
            state.pending[1] = disp.lazy_target(owner, state.q_count, alpha)
        state.refresh_tally(n)
        tot_arr_by_owner[:] += arr_o
        tot_comp_by_owner[:] += comp_o
        return _MiniBatch(acc, reroutes, served, arr_o, comp_o, stopping.mini_slots)

    def maybe_retune_alpha():
        nonlocal alpha, alpha_est
        if n_clusters <= 1 or disp.mode not in (K.DISP_TABLE, K.DISP_EXTERNAL):
            return
        window = served_window[-window_minis:]
        slots = len(window) * stopping.mini_slots
        counts = np.sum(window, axis=0)
        alpha_est = np.array([counts[c].sum() / slots for c in clusters])
        if np.abs(alpha_est - alpha).max() > config.alpha_resolve_threshold:
            alpha = alpha_est.copy()
            if disp.mode == K.DISP_TABLE:
                disp.rebuild(alpha)
            else:
                disp.lazy_memo.clear()

    target_minis = stopping.initial_minibatches
    met = False
    while True:
        while len(minis) < target_minis:
            mini = run_minibatch()
            minis.append(mini)
            served_window.append(mini.served)
            if len(minis) % window_minis == 0:
                maybe_retune_alpha()
        _check_stability(minis, slot_s, lam, theta_bits, solo_rate)
        retained, delay_means, power_means, qlen_means, n_batches = _group_stats(
            minis, stopping, slot_s)
        delay_hw = _half_width(delay_means, stopping.confidence)
        power_hw = _half_width(power_means, stopping.confidence)
        ncomp = sum(r.acc[K.ACC_NCOMP] for r in retained)
        tsec = sum(r.slots for r in retained) * slot_s
        mean_delay = sum(r.acc[K.ACC_DELAY] for r in retained) / max(ncomp, 1.0)
        power = sum(r.acc[K.ACC_ENERGY] for r in retained) / tsec
        rel = stopping.relative_half_width
        delay_ok = mean_delay > 0 and delay_hw <= rel * mean_delay
        power_ok = power_hw <= max(rel * power, stopping.power_floor_w)
        if delay_ok and power_ok:
            met = True
            break
        if int(state.slot_counter[0]) + stopping.mini_slots > stopping.max_slots:
            break
        target_minis = len(minis) + max(window_minis, math.ceil(stopping.growth * len(minis)))

    energy = sum(r.acc[K.ACC_ENERGY] for r in retained)
    qint = sum(r.acc[K.ACC_QINT] for r in retained)
    reroutes = np.sum([r.reroutes for r in retained], axis=0)
    busy = sum(r.acc[K.ACC_BUSY] for r in retained)
    arrivals = sum(r.acc[K.ACC_NARR] for r in minis)
    mean_qlen = qint / tsec

    return SimReport(
        mean_delay_s=float(mean_delay),
        delay_half_width_s=float(delay_hw),
        rerouting_power_w=energy / tsec,
        power_half_width_w=float(power_hw),
        reroute_rates=reroutes / tsec,
        total_reroute_energy_j=float(energy),
        measured_time_s=float(tsec),
        mean_queue_len=float(mean_qlen),
        littles_law_delay_s=float(mean_qlen / lam.sum()),
        slots=int(state.slot_counter[0]),
        batches=int(n_batches),
        minibatches=len(minis),
        completions=int(ncomp),
        arrivals=int(arrivals),
        arrivals_by_owner=tot_arr_by_owner.copy(),
        completions_by_owner=tot_comp_by_owner.copy(),
        in_system_by_owner=state.in_system_by_owner(n),
        utilization=float(busy / (sum(r.slots for r in retained))),
        met_target=met,
        confidence=stopping.confidence,
        relative_target=stopping.relative_half_width,
        seed=config.seed,
        dispatcher=config.dispatcher,
        alpha=alpha_est.copy() if n_clusters > 1 else None,
    )


def _offered_description(lam, theta_bits, solo_rate) -> str:
    load = float((lam * theta_bits).sum())
    return (f"offered load {load:.4g} bits/s = {float(lam.sum()):.4g} files/s; "
            f"solo service rates {np.array2string(solo_rate, precision=3)} bits/s")


def _check_stability(minis: list[_MiniBatch], slot_s: float, lam, theta_bits, solo_rate):
    """Sustained queue growth across thirds of the run means overload."""
    if len(minis) < 12:
        return
    qlens = np.array([m.acc[K.ACC_QINT] / (m.slots * slot_s) for m in minis])  # avg files in system
    third = len(qlens) // 3
    a, b, c = qlens[:third].mean(), qlens[third: 2 * third].mean(), qlens[2 * third:].mean()
    if c > 50 and c > 4 * max(a, 1e-9) and b > a and c > b:
        raise InstabilityError(_offered_description(lam, theta_bits, solo_rate))


def measure_tradeoff(config: ScenarioConfig, weights) -> list[tuple[float, SimReport]]:
    """One simulation per tradeoff weight, with the dispatch policy re-solved
    for each; identical seeds across rows."""
    rows = []
    for w in weights:
        if w < 0:
            raise ValueError("weights must be non-negative")
        cfg = replace(config, costs=config.costs.with_weight(float(w)))
        rows.append((float(w), run(cfg)))
    return rows
