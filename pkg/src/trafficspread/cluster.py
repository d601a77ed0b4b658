"""Large-cell extension: cluster formation, BS time-share estimation and
rate scaling.

In a large cell not every pair of users can communicate, so traffic is
spread only within clusters.  Each cluster solves its own dispatching
problem using locally computable service rates: the cluster-internal
scheduler expectation scaled by the fraction of BS slots the cluster
actually receives, estimated from served-slot history.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scheduler import ServiceRateTable


@dataclass
class ClusterState:
    """A partition of the users, its anchoring heads, and the current
    per-cluster BS time-share estimates (None until measured)."""

    clusters: list[list[int]]
    heads: list[int]
    alpha: np.ndarray | None = None
    window: tuple[int, int] | None = None

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def cluster_of(self, user: int) -> int:
        for l, members in enumerate(self.clusters):
            if user in members:
                return l
        raise ValueError(f"user {user} not in any cluster")


def form_clusters(positions, comm_range_m: float, num_heads: int) -> ClusterState:
    """Greedy cluster formation around the best-channel users.

    The ``num_heads`` users closest to the BS (largest mean SNR) anchor the
    clusters.  Remaining users, in index order, join the first cluster whose
    every current member lies within ``comm_range_m``; a user that fits
    nowhere forms a singleton.  Deterministic given positions and range.
    """
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError("positions must be (N, 2) coordinates with the BS at the origin")
    if num_heads < 1:
        raise ValueError("num_heads must be >= 1")
    n = len(pos)
    dist_bs = np.hypot(pos[:, 0], pos[:, 1])
    heads = sorted(np.argsort(dist_bs, kind="stable")[: min(num_heads, n)].tolist())
    clusters = [[h] for h in heads]
    for u in range(n):
        if u in heads:
            continue
        for members in clusters:
            if all(np.hypot(*(pos[u] - pos[m])) <= comm_range_m for m in members):
                members.append(u)
                break
        else:
            clusters.append([u])
    return ClusterState(clusters=[sorted(c) for c in clusters], heads=heads)


def estimate_alpha(nonempty, served, clusters: list[list[int]], window: tuple[int, int]) -> np.ndarray:
    """Fraction of slots in [t_s, t_e] in which some member of each cluster
    was served while backlogged.

    ``nonempty`` and ``served`` are (T, N) indicator arrays; at most one user
    may be served per slot.
    """
    nonempty = np.asarray(nonempty).astype(bool)
    served = np.asarray(served).astype(bool)
    if nonempty.shape != served.shape:
        raise ValueError("nonempty and served must have the same shape")
    if (served.sum(axis=1) > 1).any():
        raise ValueError("at most one user can be served per slot")
    t_s, t_e = window
    if not 0 <= t_s <= t_e < len(served):
        raise ValueError("empty or out-of-range window")
    active = nonempty[t_s : t_e + 1] & served[t_s : t_e + 1]
    slots = t_e - t_s + 1
    return np.array([active[:, members].sum() / slots for members in clusters])


def scaled_rates(alpha_l: float, table: ServiceRateTable) -> ServiceRateTable:
    """Cluster-local service rates: the in-cluster scheduler expectation
    multiplied by the cluster's BS time share."""
    if not 0.0 <= alpha_l <= 1.0:
        raise ValueError("alpha_l must lie in [0, 1]")
    return table.scaled(alpha_l)
