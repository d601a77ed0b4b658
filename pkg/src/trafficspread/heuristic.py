"""N-user dispatching heuristic built from cached two-user solutions.

A new arrival at user i is either sent straight to the BS or handed to the
user j with the least workload.  All users other than j are aggregated into
a combined queue; users are then examined in decreasing workload order, each
time solving (or fetching from cache) the two-user problem between the
combined user and j with the rerouting costs of the pair under examination.
The arrival is handed over exactly when the two-user policy re-routes the
combined user at the aggregated state and the examined user is the arriving
one.  Worst case, one reduced solve per other user: O(N-1) per arrival.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .mdp import (
    ACTION_U1_TO_U2,
    CostModel,
    MdpProblem,
    MdpSolution,
    classify_two_user_actions,
    padded_truncation,
    solve,
)
from .scheduler import ServiceRateTable

# 1e-4 relative grid for rates inside cache keys
_QUANT = 1e4


def _quantize(value: float) -> int:
    if value <= 0.0:
        return -(2 ** 62)
    return int(round(math.log(value) * _QUANT))


@dataclass(frozen=True)
class ReducedProblem:
    """Two-user aggregation of an N-user state: combined user first, the
    least-workload user second.  Rates are files/s; the occupancy cases are
    (alone, both-busy) per side, matching the aggregation rate mapping."""

    lam: tuple[float, float]
    mu1_alone: float
    mu1_both: float
    mu2_alone: float
    mu2_both: float
    phi: tuple[float, float]      # (combined -> j, j -> combined)
    weight: tuple[float, float]
    eta: tuple[float, float]
    truncation: int

    def rate_table(self) -> ServiceRateTable:
        return ServiceRateTable.from_mask_rates({
            (False, False): (0.0, 0.0),
            (True, False): (self.mu1_alone, 0.0),
            (False, True): (0.0, self.mu2_alone),
            (True, True): (self.mu1_both, self.mu2_both),
        })

    def cost_model(self) -> CostModel:
        return CostModel(
            eta=np.array([[0.0, self.eta[0]], [self.eta[1], 0.0]]),
            phi=np.array([[0.0, self.phi[0]], [self.phi[1], 0.0]]),
            weights=np.array([[0.0, self.weight[0]], [self.weight[1], 0.0]]),
        )

    def problem(self) -> MdpProblem:
        return MdpProblem(
            arrival_rates=np.array(self.lam),
            rate_table=self.rate_table(),
            costs=self.cost_model(),
            truncation=padded_truncation(self.truncation),
            stability_warning=False,
        )


def cache_key(reduced: ReducedProblem) -> tuple:
    """Deterministic key: rates quantized to a 1e-4 relative grid, costs exact.
    User roles are positional; swapped roles give a different key."""
    return (
        _quantize(reduced.lam[0]),
        _quantize(reduced.lam[1]),
        _quantize(reduced.mu1_alone),
        _quantize(reduced.mu1_both),
        _quantize(reduced.mu2_alone),
        _quantize(reduced.mu2_both),
        reduced.phi,
        reduced.weight,
        reduced.eta,
        reduced.truncation,
    )


@dataclass
class DpCache:
    """Two-user solution cache keyed by quantized reduced problems.

    Reads are lock-free; insertion happens under a lock so concurrent
    dispatchers share one solve per key.
    """

    solutions: dict = field(default_factory=dict)
    hits: int = 0
    misses: int = 0
    lookups: int = 0
    solver_kwargs: dict = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def get(self, reduced: ReducedProblem) -> MdpSolution:
        key = cache_key(reduced)
        self.lookups += 1
        sol = self.solutions.get(key)
        if sol is not None:
            self.hits += 1
            return sol
        with self._lock:
            sol = self.solutions.get(key)
            if sol is None:
                self.misses += 1
                try:
                    sol = solve(reduced.problem(), **self.solver_kwargs)
                except Exception as err:
                    raise RuntimeError(
                        f"reduced two-user solve failed for {reduced}"
                    ) from err
                self.solutions[key] = sol
            else:
                self.hits += 1
        return sol


def least_workload_user(q, solo_rates, mean_file_bits=None) -> int:
    """Index minimizing q * theta / solo-rate (seconds of backlog); ties go to
    the lowest index.  Reduces to q/mu ordering for homogeneous file sizes."""
    q = np.asarray(q, dtype=float)
    solo = np.asarray(solo_rates, dtype=float)
    if len(q) != len(solo):
        raise ValueError("q and solo_rates must have the same length")
    if (solo <= 0).any():
        raise ValueError("solo rates must be positive")
    theta = np.ones(len(q)) if mean_file_bits is None else np.asarray(mean_file_bits, dtype=float)
    work = q * theta / solo
    return int(np.argmin(work))


def dispatch(
    i: int,
    q,
    lam,
    rate_table: ServiceRateTable,
    costs: CostModel,
    cache: DpCache,
    mean_file_bits=None,
    truncation: int = 30,
) -> int:
    """Decide where a new arrival at user ``i`` goes: ``i`` itself (send
    directly) or the least-workload user.

    The passed rate table must be mask-indexed (queue-unaware scheduler);
    the aggregation rate mapping is defined in terms of the all-busy and
    all-but-one-busy occupancies.
    """
    q = np.asarray(q, dtype=int)
    n = len(q)
    if not 0 <= i < n:
        raise ValueError("arriving user out of range")
    if rate_table.queue_aware:
        raise ValueError("the aggregation heuristic needs a queue-unaware (mask) rate table")
    lam = np.asarray(lam, dtype=float)
    theta = np.ones(n) if mean_file_bits is None else np.asarray(mean_file_bits, dtype=float)

    ones = np.ones(n, dtype=int)
    solo = np.array([rate_table.rates(np.eye(n, dtype=int)[l])[l] for l in range(n)])
    j = least_workload_user(q, solo, theta)
    if j == i:
        return i

    work = q * theta / solo
    selected = {j}          # users whose arrivals were re-routed onto j so far
    backlog = set(range(n)) - selected
    passed = set()          # examined users that keep sending directly

    # aggregated state and its rate mapping, fixed before the examination loop
    q1 = int(q.sum() - q[j])
    q2 = int(q[j])
    all_but_j = ones.copy()
    all_but_j[j] = 0
    mu_full = rate_table.rates(ones)
    mu_partial = rate_table.rates(all_but_j)
    others = [l for l in range(n) if l != j]
    mu1_alone = float(sum(mu_partial[l] / theta[l] for l in others))
    mu1_both = float(sum(mu_full[l] / theta[l] for l in others))
    mu2_alone = float(solo[j] / theta[j])
    mu2_both = float(mu_full[j] / theta[j])

    while backlog:
        istar = min(backlog, key=lambda l: (-work[l], l))
        lam1 = float(sum(lam[l] for l in range(n) if l not in selected))
        lam2 = float(sum(lam[l] for l in selected))
        reduced = ReducedProblem(
            lam=(lam1, lam2),
            mu1_alone=mu1_alone,
            mu1_both=mu1_both,
            mu2_alone=mu2_alone,
            mu2_both=mu2_both,
            phi=(float(costs.phi[istar, j]), float(costs.phi[j, istar])),
            weight=(float(costs.weights[istar, j]), float(costs.weights[j, istar])),
            eta=(float(costs.eta[istar, j]), float(costs.eta[j, istar])),
            truncation=truncation,
        )
        solution = cache.get(reduced)
        codes = classify_two_user_actions(solution.policy)
        state = (min(q1, truncation), min(q2, truncation))
        if codes[state] == ACTION_U1_TO_U2:
            if istar == i:
                return j
            backlog.remove(istar)
            selected.add(istar)
        else:
            if istar == i:
                return i
            backlog.remove(istar)
            passed.add(istar)
    return i


def decision_table(
    lam,
    rate_table: ServiceRateTable,
    costs: CostModel,
    cache: DpCache,
    mean_file_bits=None,
    truncation: int = 30,
    table_cap: int = 30,
) -> np.ndarray:
    """Precompute dispatch decisions over the whole clamped queue box:
    entry [q..., i] is the target for an arrival at user i when the (clamped)
    queue vector is q.  Used to drive the simulator without per-arrival
    solver calls."""
    n = rate_table.n_users
    shape = (table_cap + 1,) * n
    out = np.empty(shape + (n,), dtype=np.int8)
    for q in np.ndindex(shape):
        for i in range(n):
            out[q + (i,)] = dispatch(
                i, np.array(q), lam, rate_table, costs, cache,
                mean_file_bits=mean_file_bits, truncation=truncation,
            )
    return out
