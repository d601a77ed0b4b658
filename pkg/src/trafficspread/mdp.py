"""Average-cost dispatching MDP: formulation, relative value iteration,
and structural-property verification.

The queue process is uniformized at a single event rate so that value
iteration runs on a discrete chain: arrivals land with probability
lambda_j/rate, departures with mu_i(q)/rate, the rest is a self-loop.  The
per-stage cost is |q|/|lambda| plus, for each source j routed to target i,
the routing penalty (eta + w*phi) weighted by lambda_j/rate.  Stationary
deterministic policies suffice: the inner minimization is linear in the
routing probabilities, so it is attained at a vertex, independently per
source.  Solutions expose the gain, relative values anchored at a reference
state, and the greedy deterministic policy.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .scheduler import ServiceRateTable

# Two-user action codes used by policy grids and CSV exports.
ACTION_NONE = 0
ACTION_U1_TO_U2 = 1
ACTION_U2_TO_U1 = 2
ACTION_NAMES = {ACTION_NONE: "NONE", ACTION_U1_TO_U2: "U1_TO_U2", ACTION_U2_TO_U1: "U2_TO_U1"}


class ConvergenceError(RuntimeError):
    """Value iteration did not reach the span tolerance; carries the last span."""

    def __init__(self, span: float, iterations: int, tol: float):
        super().__init__(
            f"no convergence after {iterations} iterations: span {span:.3e} > tol {tol:.3e}"
        )
        self.span = span
        self.iterations = iterations
        self.tol = tol


@dataclass(frozen=True)
class CostModel:
    """Forwarding delays eta (s/file), rerouting energies phi (J/file) and
    tradeoff weights, all N x N with zero diagonals.  An infinite phi (or
    eta) entry marks a user pair that cannot communicate."""

    eta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        n = eta.shape[0]
        for name, m in (("eta", eta), ("phi", phi), ("weights", w)):
            if m.shape != (n, n):
                raise ValueError(f"{name} must be square and match the user count")
            if np.nanmin(m) < 0:
                raise ValueError(f"{name} entries must be non-negative")
        if np.diag(eta).any() or np.diag(phi).any():
            raise ValueError("eta and phi must have zero diagonals")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "weights", w)

    @property
    def n_users(self) -> int:
        return self.eta.shape[0]

    @classmethod
    def uniform(cls, n: int, eta: float = 0.0, phi_j: float = 1.0, weight: float = 0.0) -> "CostModel":
        """Homogeneous costs: identical off-diagonal entries everywhere."""
        off = 1.0 - np.eye(n)
        return cls(eta=eta * off, phi=phi_j * off, weights=weight * off)

    def with_weight(self, weight) -> "CostModel":
        """Same delays/energies under a different tradeoff weight (scalar or matrix)."""
        w = np.asarray(weight, dtype=float)
        if w.ndim == 0:
            w = float(w) * (1.0 - np.eye(self.n_users))
        return CostModel(eta=self.eta, phi=self.phi, weights=w)

    def penalty(self) -> np.ndarray:
        """Per-file routing penalty eta + w*phi; infeasible pairs become +inf."""
        with np.errstate(invalid="ignore"):
            pen = self.eta + self.weights * self.phi
        infeasible = np.isinf(self.eta) | np.isinf(self.phi)
        pen = np.where(infeasible & ~np.eye(self.n_users, dtype=bool), np.inf, pen)
        return np.nan_to_num(pen, nan=np.inf, posinf=np.inf)


@dataclass
class MdpProblem:
    """Uniformized dispatching MDP over a truncated queue box.

    Rates in the table are bits/s; dividing by the mean file size gives the
    file completion rates the chain actually uses (exponential file sizes
    make per-file service memoryless).  Arrivals that would leave the box
    are folded into the self-loop.
    """

    arrival_rates: np.ndarray
    rate_table: ServiceRateTable
    costs: CostModel
    truncation: int
    mean_file_bits: np.ndarray | None = None
    uniformization_rate: float | None = None
    stability_warning: bool = True
    _service_grid: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        lam = np.asarray(self.arrival_rates, dtype=float)
        if (lam < 0).any():
            raise ValueError("arrival rates must be non-negative")
        if lam.sum() <= 0:
            raise ValueError("total arrival rate must be positive")
        self.arrival_rates = lam
        n = len(lam)
        if self.rate_table.n_users != n or self.costs.n_users != n:
            raise ValueError("arrival rates, rate table and costs disagree on user count")
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        theta = self.mean_file_bits
        theta = np.ones(n) if theta is None else np.asarray(theta, dtype=float)
        if (theta <= 0).any():
            raise ValueError("mean file sizes must be positive")
        self.mean_file_bits = theta

        grid = self.rate_table.grid(self.truncation) / theta
        self._service_grid = grid
        max_mu = float(grid.sum(axis=-1).max())
        min_rate = lam.sum() + max_mu
        if self.uniformization_rate is None:
            self.uniformization_rate = min_rate
        elif self.uniformization_rate < min_rate - 1e-12 * max(1.0, min_rate):
            raise ValueError(
                f"uniformization_rate {self.uniformization_rate} below |lambda|+max|mu| = {min_rate}"
            )
        full = grid[(self.truncation,) * n].sum()
        if self.stability_warning and lam.sum() >= full:
            warnings.warn(
                f"offered load {lam.sum():.4g} files/s >= service capacity "
                f"{full:.4g} files/s under full occupancy; the chain may be unstable",
                stacklevel=2,
            )

    @property
    def n_users(self) -> int:
        return len(self.arrival_rates)

    def service_grid(self) -> np.ndarray:
        """Completion rates in files/s, shape (T+1,)*N + (N,)."""
        return self._service_grid

    def service_rates(self, q) -> np.ndarray:
        return self._service_grid[tuple(int(min(v, self.truncation)) for v in q)]


@dataclass
class MdpSolution:
    """Converged gain, relative values (0 at the reference state) and the
    deterministic policy: policy[q] is the length-N vector of targets, one
    per source user."""

    gain: float
    h: np.ndarray
    policy: np.ndarray
    iterations: int
    span: float
    reference: tuple
    problem: MdpProblem

    @property
    def gain_per_second(self) -> float:
        """Gain rescaled by the uniformization rate (cost per unit time if the
        stage cost were charged per event rather than per stage)."""
        return self.gain * self.problem.uniformization_rate


def arrival_rates_under(action, lam) -> np.ndarray:
    """Arrival rate seen by each queue when source j routes to action[j]."""
    action = np.asarray(action, dtype=int)
    lam = np.asarray(lam, dtype=float)
    return np.bincount(action, weights=lam, minlength=len(lam))


def stage_cost(q, action, problem: MdpProblem) -> float:
    """Per-stage cost |q|/|lambda| plus arrival-weighted routing penalties."""
    q = np.asarray(q)
    action = np.asarray(action, dtype=int)
    lam = problem.arrival_rates
    pen = problem.costs.penalty()
    rate = problem.uniformization_rate
    routing = sum(lam[j] / rate * pen[j, action[j]] for j in range(len(lam)))
    return float(q.sum() / lam.sum() + routing)


def _shift_departure(h: np.ndarray, axis: int) -> np.ndarray:
    """h at D_i q = h[q - e_i]; the q_i = 0 face is never weighted (mu_i = 0)."""
    out = np.empty_like(h)
    src = [slice(None)] * h.ndim
    dst = [slice(None)] * h.ndim
    src[axis] = slice(0, -1)
    dst[axis] = slice(1, None)
    out[tuple(dst)] = h[tuple(src)]
    dst[axis] = slice(0, 1)
    src[axis] = slice(0, 1)
    out[tuple(dst)] = h[tuple(src)]
    return out


def _shift_arrival(h: np.ndarray, axis: int) -> np.ndarray:
    """h at A_i q = h[q + e_i]; arrivals at the box ceiling self-transition."""
    out = np.empty_like(h)
    src = [slice(None)] * h.ndim
    dst = [slice(None)] * h.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(0, -1)
    out[tuple(dst)] = h[tuple(src)]
    dst[axis] = slice(-1, None)
    src[axis] = slice(-1, None)
    out[tuple(dst)] = h[tuple(src)]
    return out


# Candidates this close (relative to the value scale) count as ties, so the
# keep-own preference survives the float noise accumulated over many sweeps.
TIE_REL = 1e-12


def _sweep(h: np.ndarray, problem: MdpProblem, base: np.ndarray, stay: np.ndarray,
           pen: np.ndarray, want_policy: bool):
    """One Bellman sweep of the full box; returns (T h, policy or None)."""
    n = problem.n_users
    lam = problem.arrival_rates
    rate = problem.uniformization_rate
    mu = problem.service_grid()

    acc = stay * h
    for i in range(n):
        acc += mu[..., i] * _shift_departure(h, i)

    arrivals = [_shift_arrival(h, i) for i in range(n)]
    tie_atol = TIE_REL * (1.0 + float(np.abs(h).max()))
    policy = np.empty(h.shape + (n,), dtype=np.int8) if want_policy else None
    for j in range(n):
        # tie order: keep own request first, then lowest target index
        order = [j] + [i for i in range(n) if i != j]
        best = pen[j, order[0]] + arrivals[order[0]]
        if want_policy:
            act = np.full(h.shape, order[0], dtype=np.int8)
        for i in order[1:]:
            cand = pen[j, i] + arrivals[i]
            if want_policy:
                act[cand < best - tie_atol] = i
            np.minimum(best, cand, out=best)
        acc += lam[j] * best
        if want_policy:
            policy[..., j] = act
    return base + acc / rate, policy


def solve(
    problem: MdpProblem,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    reference: tuple | None = None,
    h0: np.ndarray | None = None,
    iteration_hook=None,
) -> MdpSolution:
    """Relative value iteration to the span tolerance on Bellman residuals.

    Sweeps are Jacobi (each sweep reads the previous iterate only), so
    distinct problems may be solved concurrently with no shared state.
    ``iteration_hook(k, values)`` is called with the raw swept values each
    iteration, before reference subtraction.
    """
    n = problem.n_users
    shape = (problem.truncation + 1,) * n
    ref = (0,) * n if reference is None else tuple(reference)
    lam = problem.arrival_rates
    mu = problem.service_grid()
    rate = problem.uniformization_rate
    stay = rate - lam.sum() - mu.sum(axis=-1)
    if stay.min() < -1e-9 * rate:
        raise ValueError("uniformization rate is below the maximal event rate")
    stay = np.clip(stay, 0.0, None)
    base = np.indices(shape).sum(axis=0) / lam.sum()
    pen = problem.costs.penalty()

    h = np.zeros(shape) if h0 is None else np.array(h0, dtype=float)
    span = np.inf
    gain = np.nan
    for k in range(1, max_iter + 1):
        v, _ = _sweep(h, problem, base, stay, pen, want_policy=False)
        if iteration_hook is not None:
            iteration_hook(k, v)
        resid = v - h
        lo, hi = resid.min(), resid.max()
        span = hi - lo
        gain = 0.5 * (hi + lo)
        h = v - v[ref]
        if span < tol:
            _, policy = _sweep(h, problem, base, stay, pen, want_policy=True)
            return MdpSolution(
                gain=float(gain), h=h, policy=policy, iterations=k, span=float(span),
                reference=ref, problem=problem,
            )
    raise ConvergenceError(span=float(span), iterations=max_iter, tol=tol)


def bellman_backup(h: np.ndarray, problem: MdpProblem, q) -> tuple[float, tuple]:
    """Single-state backup: the minimized right-hand side and the minimizing
    deterministic action (one target per source)."""
    q = tuple(int(v) for v in q)
    n = problem.n_users
    t = problem.truncation
    lam = problem.arrival_rates
    rate = problem.uniformization_rate
    pen = problem.costs.penalty()
    mu = problem.service_rates(q)

    def a_state(i):
        return q[:i] + (min(q[i] + 1, t),) + q[i + 1:]

    def d_state(i):
        return q[:i] + (max(q[i] - 1, 0),) + q[i + 1:]

    acc = (rate - lam.sum() - mu.sum()) * h[q]
    for i in range(n):
        acc += mu[i] * h[d_state(i)]
    tie_atol = TIE_REL * (1.0 + float(np.abs(h).max()))
    action = []
    for j in range(n):
        order = [j] + [i for i in range(n) if i != j]
        best_i, best_v = None, np.inf
        for i in order:
            v = pen[j, i] + h[a_state(i)]
            if v < best_v - tie_atol:
                best_i = i
            best_v = min(best_v, v)
        acc += lam[j] * best_v
        action.append(best_i)
    value = sum(q) / lam.sum() + acc / rate
    return float(value), tuple(action)


def backup_with_action_matrix(h: np.ndarray, problem: MdpProblem, q, sigma: np.ndarray) -> float:
    """Backup value under an arbitrary stochastic routing matrix (rows sum
    to 1); the verification oracle for the deterministic-policy reduction."""
    sigma = np.asarray(sigma, dtype=float)
    n = problem.n_users
    if sigma.shape != (n, n) or not np.allclose(sigma.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("sigma must be a row-stochastic N x N matrix")
    q = tuple(int(v) for v in q)
    t = problem.truncation
    lam = problem.arrival_rates
    rate = problem.uniformization_rate
    pen = problem.costs.penalty()
    mu = problem.service_rates(q)

    acc = (rate - lam.sum() - mu.sum()) * h[q]
    for i in range(n):
        d = q[:i] + (max(q[i] - 1, 0),) + q[i + 1:]
        acc += mu[i] * h[d]
    for j in range(n):
        for i in range(n):
            if sigma[j, i] == 0.0:
                continue
            a = q[:i] + (min(q[i] + 1, t),) + q[i + 1:]
            acc += lam[j] * sigma[j, i] * (pen[j, i] + h[a])
    return float(sum(q) / lam.sum() + acc / rate)


def transition_probabilities(problem: MdpProblem, q, action) -> dict[tuple, float]:
    """One-step transition law at ``q`` under a deterministic action; the
    self-loop absorbs the leftover event mass and box-ceiling arrivals."""
    q = tuple(int(v) for v in q)
    n = problem.n_users
    t = problem.truncation
    rate = problem.uniformization_rate
    lam_in = arrival_rates_under(action, problem.arrival_rates)
    mu = problem.service_rates(q)

    probs: dict[tuple, float] = {}

    def add(state, p):
        if p > 0 and state != q:
            probs[state] = probs.get(state, 0.0) + p

    for i in range(n):
        if q[i] < t:
            add(q[:i] + (q[i] + 1,) + q[i + 1:], lam_in[i] / rate)
        if q[i] > 0:
            add(q[:i] + (q[i] - 1,) + q[i + 1:], mu[i] / rate)
    # ceiling arrivals and leftover event mass fold into the self-loop,
    # which closes the distribution to exactly 1
    probs[q] = 1.0 - sum(probs.values())
    return probs


# --- two-user policy structure -------------------------------------------------

def classify_two_user_actions(policy: np.ndarray) -> np.ndarray:
    """Map a two-user target policy to {NONE, U1_TO_U2, U2_TO_U1} codes."""
    if policy.ndim != 3 or policy.shape[-1] != 2:
        raise ValueError("expected a two-user policy of shape (T+1, T+1, 2)")
    a1, a2 = policy[..., 0], policy[..., 1]
    codes = np.full(policy.shape[:2], -1, dtype=np.int8)
    codes[(a1 == 0) & (a2 == 1)] = ACTION_NONE
    codes[(a1 == 1) & (a2 == 1)] = ACTION_U1_TO_U2
    codes[(a1 == 0) & (a2 == 0)] = ACTION_U2_TO_U1
    if (codes < 0).any():
        raise ValueError("policy contains a swap action; cost matrix must be non-negative")
    return codes


# The box-ceiling closure turns overflow arrivals into self-transitions, so
# near the ceiling the truncated chain can profit from riding imbalance into
# the absorbing edge.  Empirically this inverted region reaches in as far as
# ~0.7 of the box at heavy load, so policies are solved on a box this many
# times larger than the region whose actions get used; the core then matches
# the untruncated optimum.
POLICY_PAD_FACTOR = 3.5
POLICY_EDGE_MARGIN = 2


def padded_truncation(use_box: int, pad_factor: float = POLICY_PAD_FACTOR) -> int:
    """Internal solve box for a policy that will be queried on [0, use_box]."""
    return int(np.ceil(use_box * pad_factor))


def policy_lookup(solution: MdpSolution, q, use_box: int | None = None) -> np.ndarray:
    """Action at ``q``, clamping into the artifact-free core of the solution."""
    edge = solution.problem.truncation - POLICY_EDGE_MARGIN if use_box is None else use_box
    edge = max(1, min(edge, solution.problem.truncation))
    idx = tuple(int(min(max(v, 0), edge)) for v in q)
    return solution.policy[idx]


@dataclass(frozen=True)
class SwitchingCurves:
    """Per-column thresholds of a two-user policy: at column q1, arrivals are
    steered toward user 2 for q2 <= q2a and toward user 1 for q2 >= q2b.
    Empty regions carry the sentinels -1 and limit+1.  Columns and rows are
    scanned up to ``limit``, past which the truncation closure distorts
    actions."""

    q2a: np.ndarray
    q2b: np.ndarray
    contiguous: np.ndarray
    truncation: int
    limit: int


def extract_switching_curves(solution: MdpSolution, limit: int | None = None) -> SwitchingCurves:
    """Scan each q1 column of a two-user policy for its action thresholds and
    report (rather than assume) whether the regions are contiguous.

    ``limit`` restricts the scan to the artifact-free core; pass the use box
    of a padded solve, or leave None for truncation - POLICY_EDGE_MARGIN.
    """
    if solution.problem.n_users != 2:
        raise ValueError("switching curves are defined for two-user solutions only")
    codes = classify_two_user_actions(solution.policy)
    t = solution.problem.truncation
    limit = max(1, t - POLICY_EDGE_MARGIN if limit is None else min(limit, t))
    q2a = np.full(limit + 1, -1, dtype=int)
    q2b = np.full(limit + 1, limit + 1, dtype=int)
    contiguous = np.ones(limit + 1, dtype=bool)
    # U1->U2 below the diagonal band, U2->U1 above it; contiguity holds iff
    # the action sequence is monotone in this order along q2
    rank = {ACTION_U1_TO_U2: 0, ACTION_NONE: 1, ACTION_U2_TO_U1: 2}
    for q1 in range(limit + 1):
        col = codes[q1, : limit + 1]
        with_12 = np.flatnonzero(col == ACTION_U1_TO_U2)
        with_21 = np.flatnonzero(col == ACTION_U2_TO_U1)
        if len(with_12):
            q2a[q1] = int(with_12.max())
        if len(with_21):
            q2b[q1] = int(with_21.min())
        ranks = np.array([rank[c] for c in col])
        contiguous[q1] = bool((np.diff(ranks) >= 0).all())
    return SwitchingCurves(q2a=q2a, q2b=q2b, contiguous=contiguous, truncation=t, limit=limit)


# --- value-difference monotonicity (two-user structural verifier) ---------------

@dataclass
class DeltaReport:
    """Outcome of the per-iteration scan of value differences between the two
    arrival directions.  ``violations`` rows are (iteration, q1, q2, magnitude,
    on_boundary)."""

    iterations: int
    monotone_interior: bool
    violations: list[tuple[int, int, int, float, bool]]
    monotone_by_iteration: np.ndarray
    delta_final: np.ndarray
    observe_box: int
    boundary_margin: int
    exact_through_iteration: int
    converged: bool
    residual: float


def verify_delta_monotonicity(
    problem: MdpProblem,
    observe_box: int | None = None,
    tol: float = 1e-8,
    iteration_cap: int = 2000,
    boundary_margin: int = 1,
    slack: float = 1e-9,
    max_violations: int = 1000,
) -> DeltaReport:
    """Iterate the Bellman operator and check, at every iterate k, that the
    difference J_k(q + e1) - J_k(q + e2) is non-decreasing in q1 for each
    fixed q2 over an observation window.

    The property holds on the untruncated lattice; a finite box contaminates
    values within k cells of its ceiling after k iterations because the
    operator is one-step local.  Observing a window smaller than the
    computation box therefore gives exact untruncated values through
    iteration (truncation - observe_box); build the problem on an enlarged
    box (see lcq_verification_problem) for a faithful scan.  The top
    ``boundary_margin`` window cells are excluded from the interior verdict
    and flagged in the violation list instead.  Iteration stops once the
    window differences settle below ``tol`` or at ``iteration_cap``.

    Requires a two-user problem with symmetric homogeneous routing costs.
    """
    if problem.n_users != 2:
        raise ValueError("the monotonicity scan is defined for two-user problems")
    pen = problem.costs.penalty()
    if not np.isclose(pen[0, 1], pen[1, 0], rtol=1e-12, atol=0.0):
        raise ValueError("routing costs must be homogeneous (symmetric off-diagonal)")

    t = problem.truncation
    obs = t if observe_box is None else int(observe_box)
    if not 2 <= obs <= t:
        raise ValueError("observe_box must lie within the problem truncation")
    hi = obs - boundary_margin  # highest window index considered interior

    lam = problem.arrival_rates
    mu = problem.service_grid()
    rate = problem.uniformization_rate
    stay = np.clip(rate - lam.sum() - mu.sum(axis=-1), 0.0, None)
    shape = (t + 1, t + 1)
    base = np.indices(shape).sum(axis=0) / lam.sum()

    verdicts: list[bool] = []
    violations: list[tuple[int, int, int, float, bool]] = []
    prev_delta = np.zeros((obs, obs))  # J_0 = 0 => delta_0 = 0, trivially monotone
    delta = prev_delta
    h = np.zeros(shape)
    converged = False
    residual = np.inf
    settled = 0  # early iterates can be identically zero; require two quiet sweeps
    k = 0
    while k < iteration_cap:
        k += 1
        v, _ = _sweep(h, problem, base, stay, pen, want_policy=False)
        # delta[q1, q2] = J_k(q1+1, q2) - J_k(q1, q2+1) over the window
        delta = v[1 : obs + 1, :obs] - v[:obs, 1 : obs + 1]
        steps = np.diff(delta, axis=0)
        scale = max(1.0, float(np.abs(delta).max()))
        bad = steps < -slack * scale
        ok_interior = True
        if bad.any():
            for q1, q2 in zip(*np.nonzero(bad)):
                on_boundary = (q1 + 2 > hi) or (q2 + 1 > hi)
                if not on_boundary:
                    ok_interior = False
                if len(violations) < max_violations:
                    violations.append((k, int(q1), int(q2), float(steps[q1, q2]), bool(on_boundary)))
        verdicts.append(ok_interior)
        residual = float(np.abs(delta - prev_delta).max())
        prev_delta = delta.copy()
        h = v - v[0, 0]  # keep values bounded; differences are unaffected
        settled = settled + 1 if residual < tol else 0
        if settled >= 2:
            converged = True
            break

    return DeltaReport(
        iterations=k,
        monotone_interior=all(verdicts),
        violations=violations,
        monotone_by_iteration=np.array(verdicts, dtype=bool),
        delta_final=delta,
        observe_box=obs,
        boundary_margin=boundary_margin,
        exact_through_iteration=t - obs,
        converged=converged,
        residual=residual,
    )


def lcq_on_off_problem(
    p_on: float = 0.5,
    arrival_rate: float = 0.15,
    weight: float = 2.0,
    phi_j: float = 1.0,
    eta: float = 0.0,
    truncation: int = 30,
    rate_on: float = 1.0,
) -> MdpProblem:
    """Two-user homogeneous on/off scenario under the workload scheduler, the
    setting in which the switching-curve structure is provable.  Rates are in
    file units (unit file size)."""
    from .channel import on_off_model, snr_for_rate
    from .scheduler import SchedulerPolicy, build_table

    model = on_off_model(p_on, snr_for_rate(1.0, rate_on), bandwidth_hz=1.0)
    table = build_table(SchedulerPolicy(kind="lcq"), [model, model], truncation=truncation)
    costs = CostModel.uniform(2, eta=eta, phi_j=phi_j, weight=weight)
    return MdpProblem(
        arrival_rates=np.array([arrival_rate, arrival_rate]),
        rate_table=table,
        costs=costs,
        truncation=truncation,
    )


def lcq_verification_problem(
    observe_box: int = 30,
    iteration_cap: int = 2000,
    **scenario,
) -> tuple[MdpProblem, int]:
    """Build the on/off workload-scheduler scenario on a box large enough that
    the observation window holds exact untruncated iterates through
    ``iteration_cap`` sweeps.  Returns (problem, observe_box)."""
    problem = lcq_on_off_problem(truncation=observe_box + iteration_cap, **scenario)
    return problem, observe_box


def enumerate_box(truncation: int, n: int):
    """All queue states of the truncated box, lexicographically."""
    return itertools.product(range(truncation + 1), repeat=n)
