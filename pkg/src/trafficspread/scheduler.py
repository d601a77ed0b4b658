"""BS scheduling policies and queue-state-dependent average service rates.

Three channel-aware schedulers are modeled through per-slot selection
probabilities over users:

* ``greedy``   -- serve the non-empty queue with the largest instantaneous rate
  (queue-unaware: only the set of non-empty queues matters);
* ``log-rule`` -- serve the non-empty queue maximizing
  (R / mean R) * log(b + a*q)  (queue-aware);
* ``lcq``      -- serve, among connected non-empty queues, the one with the
  largest workload q*theta/solo-rate (queue-aware).

Ties are always broken uniformly at random among the maximizers.
Averaging the selection over the product channel distribution yields the
service-rate vector used by the dispatch MDP.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel

SCHEDULER_KINDS = ("greedy", "log-rule", "lcq")


@dataclass(frozen=True)
class SchedulerPolicy:
    kind: str = "greedy"
    log_rule_b: float = 1.0
    log_rule_a: np.ndarray | None = None
    # The published log rule maximizes its weighted metric; set this to pick
    # the literal argmin variant instead.
    strict_argmin: bool = False

    def __post_init__(self):
        if self.kind not in SCHEDULER_KINDS:
            raise ValueError(f"unknown scheduler kind {self.kind!r}")
        if self.log_rule_b <= 0:
            raise ValueError("log_rule_b must be positive")
        if self.log_rule_a is not None:
            a = np.asarray(self.log_rule_a, dtype=float)
            if (a <= 0).any():
                raise ValueError("log_rule_a entries must be positive")
            object.__setattr__(self, "log_rule_a", a)

    @property
    def queue_aware(self) -> bool:
        return self.kind in ("log-rule", "lcq")

    def weights_a(self, n: int) -> np.ndarray:
        if self.log_rule_a is None:
            return np.ones(n)
        if len(self.log_rule_a) != n:
            raise ValueError("log_rule_a length does not match user count")
        return self.log_rule_a


def _selection_probs(
    policy: SchedulerPolicy,
    q: np.ndarray,
    rate_rows: np.ndarray,
    models: list[ChannelModel],
    mean_file_bits: np.ndarray | None,
) -> np.ndarray:
    """Selection probabilities, one row per channel realization.

    rate_rows has shape (M, N): instantaneous rates of the N users under M
    channel vectors.  Rows where no queue is eligible come back all-zero.
    """
    n = len(q)
    nonempty = q > 0
    if policy.kind == "greedy":
        scores = rate_rows
        eligible = np.broadcast_to(nonempty, rate_rows.shape)
    elif policy.kind == "log-rule":
        mean_rates = np.array([m.mean_rate for m in models])
        a = policy.weights_a(n)
        weight = np.log(policy.log_rule_b + a * q)
        scores = (rate_rows / mean_rates) * weight
        if policy.strict_argmin:
            scores = -scores
        eligible = np.broadcast_to(nonempty, rate_rows.shape)
    else:  # lcq
        theta = np.ones(n) if mean_file_bits is None else np.asarray(mean_file_bits, dtype=float)
        solo = np.array([m.mean_rate for m in models])
        workload = q * theta / solo
        scores = np.broadcast_to(workload, rate_rows.shape)
        eligible = nonempty & (rate_rows > 0)

    scores = np.where(eligible, scores, -np.inf)
    best = scores.max(axis=1, keepdims=True)
    winners = eligible & (scores == best)
    counts = winners.sum(axis=1, keepdims=True)
    probs = np.where(winners, 1.0, 0.0)
    np.divide(probs, counts, out=probs, where=counts > 0)
    return probs


def select(
    policy: SchedulerPolicy,
    q,
    c,
    models: list[ChannelModel],
    mean_file_bits=None,
) -> np.ndarray:
    """Probability that each user is served, given queues ``q`` and channel states ``c``."""
    q = np.asarray(q)
    c = np.asarray(c, dtype=int)
    if not (len(q) == len(c) == len(models)):
        raise ValueError("q, c and models must have the same length")
    rates = np.array([models[i].rates[c[i]] for i in range(len(q))])
    return _selection_probs(policy, q, rates[None, :], models, mean_file_bits)[0]


def _channel_enumeration(models: list[ChannelModel]) -> tuple[np.ndarray, np.ndarray]:
    """All channel vectors as a rate matrix (M, N) plus their probabilities (M,)."""
    state_grids = np.meshgrid(*[np.arange(m.num_states) for m in models], indexing="ij")
    states = np.stack([g.ravel() for g in state_grids], axis=1)
    rates = np.column_stack([models[i].rates[states[:, i]] for i in range(len(models))])
    probs = np.ones(len(states))
    for i, m in enumerate(models):
        probs *= m.probs[states[:, i]]
    return rates, probs


def average_rates(
    policy: SchedulerPolicy,
    q,
    models: list[ChannelModel],
    mean_file_bits=None,
    enum_cap: int = 1 << 20,
) -> np.ndarray:
    """Exact expected service rates (bits/s): sum over channel vectors of
    P(c) * xi_i(q, c) * R_i^{c_i}."""
    q = np.asarray(q)
    n_vectors = int(np.prod([m.num_states for m in models]))
    if n_vectors > enum_cap:
        raise ValueError(
            f"channel space of {n_vectors} vectors exceeds enum_cap={enum_cap}; "
            "use average_rates_mc"
        )
    rates, probs = _channel_enumeration(models)
    sel = _selection_probs(policy, q, rates, models, mean_file_bits)
    return (probs[:, None] * sel * rates).sum(axis=0)


def average_rates_mc(
    policy: SchedulerPolicy,
    q,
    models: list[ChannelModel],
    rng: np.random.Generator,
    samples: int = 100_000,
    mean_file_bits=None,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo estimate of the average rates with per-user standard errors."""
    q = np.asarray(q)
    n = len(models)
    states = np.column_stack(
        [rng.choice(m.num_states, size=samples, p=m.probs) for m in models]
    )
    rates = np.column_stack([models[i].rates[states[:, i]] for i in range(n)])
    sel = _selection_probs(policy, q, rates, models, mean_file_bits)
    contrib = sel * rates
    mu = contrib.mean(axis=0)
    se = contrib.std(axis=0, ddof=1) / np.sqrt(samples)
    return mu, se


@dataclass(frozen=True)
class ServiceRateTable:
    """Precomputed mu(q) vectors, keyed by non-empty mask (queue-unaware
    schedulers) or by the truncated queue vector (queue-aware ones).

    Immutable after construction; safe to share across threads.
    """

    n_users: int
    queue_aware: bool
    entries: dict = field(repr=False)
    truncation: int | None = None
    policy: SchedulerPolicy | None = None

    def key_for(self, q) -> tuple:
        q = np.asarray(q)
        if self.queue_aware:
            return tuple(int(min(v, self.truncation)) for v in q)
        return tuple(bool(v > 0) for v in q)

    def rates(self, q) -> np.ndarray:
        """Service-rate vector at queue state ``q`` (clamped into the table)."""
        return self.entries[self.key_for(q)]

    def grid(self, truncation: int) -> np.ndarray:
        """Dense (T+1, ..., T+1, N) array of rates over the truncated box."""
        shape = (truncation + 1,) * self.n_users
        out = np.zeros(shape + (self.n_users,))
        if self.queue_aware:
            for q in itertools.product(range(truncation + 1), repeat=self.n_users):
                out[q] = self.rates(q)
        else:
            axes_nonzero = np.indices(shape) > 0
            for mask, mu in self.entries.items():
                region = np.ones(shape, dtype=bool)
                for i, bit in enumerate(mask):
                    region &= axes_nonzero[i] == bit
                out[region] = mu
        return out

    def scaled(self, factor: float) -> "ServiceRateTable":
        """Same table with every rate multiplied by ``factor``."""
        entries = {k: v * factor for k, v in self.entries.items()}
        return ServiceRateTable(
            n_users=self.n_users,
            queue_aware=self.queue_aware,
            entries=entries,
            truncation=self.truncation,
            policy=self.policy,
        )

    def max_total_rate(self) -> float:
        return max(float(v.sum()) for v in self.entries.values())

    @classmethod
    def from_mask_rates(cls, mask_to_rates: dict) -> "ServiceRateTable":
        """Build a queue-unaware table directly from mask -> rate-vector pairs."""
        n = len(next(iter(mask_to_rates)))
        entries = {tuple(bool(b) for b in k): np.asarray(v, dtype=float) for k, v in mask_to_rates.items()}
        if len(entries) != 2 ** n:
            raise ValueError(f"expected {2 ** n} masks, got {len(entries)}")
        return cls(n_users=n, queue_aware=False, entries=entries)


def build_table(
    policy: SchedulerPolicy,
    models: list[ChannelModel],
    truncation: int | None = None,
    mean_file_bits=None,
    max_entries: int = 2_000_000,
) -> ServiceRateTable:
    """Tabulate average_rates for the MDP: 2^N mask entries for queue-unaware
    schedulers, the full truncated grid for queue-aware ones."""
    n = len(models)
    if policy.queue_aware:
        if truncation is None or truncation < 1:
            raise ValueError("queue-aware schedulers need truncation >= 1")
        n_entries = (truncation + 1) ** n
        if n_entries > max_entries:
            raise ResourceWarningError(n_entries, max_entries)
        rates, probs = _channel_enumeration(models)  # shared across all states
        weighted = probs[:, None] * rates
        entries = {}
        for q in itertools.product(range(truncation + 1), repeat=n):
            sel = _selection_probs(policy, np.array(q), rates, models, mean_file_bits)
            entries[q] = (sel * weighted).sum(axis=0)
        return ServiceRateTable(
            n_users=n, queue_aware=True, entries=entries, truncation=truncation, policy=policy
        )
    entries = {}
    for mask in itertools.product((False, True), repeat=n):
        q = np.array(mask, dtype=int)
        entries[mask] = average_rates(policy, q, models, mean_file_bits)
    return ServiceRateTable(n_users=n, queue_aware=False, entries=entries, policy=policy)


class ResourceWarningError(RuntimeError):
    """Raised when a requested rate table would exceed the configured size cap."""

    def __init__(self, requested: int, cap: int):
        super().__init__(f"rate table of {requested} entries exceeds cap {cap}")
        self.requested = requested
        self.cap = cap
