"""Discretized Rayleigh-fading downlink channels.

The instantaneous SNR of a Rayleigh-faded link is exponentially distributed.
We discretize it into K states with equal stationary probability 1/K, using
the conditional mean of each quantile bin as the representative SNR, so the
mean SNR is preserved exactly.  Achievable rates follow the Shannon formula
with a 3 dB SNR backoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChannelConfig:
    """Link-budget and slot parameters shared by all users of a cell.

    Power spectral densities are in W/MHz; their ratio sets the mean SNR at
    unit distance.  Defaults correspond to a minimal 1.4 MHz LTE carrier in
    an urban area.
    """

    bandwidth_hz: float = 1.4e6
    tx_psd: float = 0.1 / 1.4
    noise_psd: float = 1e-8 / 1.4
    path_loss_exponent: float = 3.0
    slot_s: float = 0.01
    doppler_hz: float = 5.0
    num_states: int = 8

    def __post_init__(self):
        for name in ("bandwidth_hz", "tx_psd", "noise_psd", "slot_s", "doppler_hz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.path_loss_exponent < 0:
            raise ValueError("path_loss_exponent must be non-negative")
        if self.num_states < 1:
            raise ValueError("num_states must be >= 1")


@dataclass(frozen=True)
class ChannelModel:
    """Per-user discretized channel: state probabilities, SNRs and rates."""

    distance_m: float
    probs: np.ndarray
    snrs: np.ndarray
    rates: np.ndarray
    cum_probs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        snrs = np.asarray(self.snrs, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if not (probs.shape == snrs.shape == rates.shape) or probs.ndim != 1:
            raise ValueError("probs, snrs and rates must be 1-d and equally sized")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("state probabilities must sum to 1")
        if (probs < 0).any() or (snrs < 0).any() or (rates < 0).any():
            raise ValueError("probabilities, SNRs and rates must be non-negative")
        if (np.diff(snrs) < 0).any() or (np.diff(rates) < 0).any():
            raise ValueError("states must be sorted by increasing SNR")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "snrs", snrs)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "cum_probs", np.cumsum(probs))

    @property
    def num_states(self) -> int:
        return len(self.probs)

    @property
    def states(self) -> list[tuple[float, float, float]]:
        """(probability, snr, rate_bps) triples, lowest SNR first."""
        return list(zip(self.probs, self.snrs, self.rates))

    @property
    def mean_snr(self) -> float:
        return float(self.probs @ self.snrs)

    @property
    def mean_rate(self) -> float:
        """Stationary average rate in bits/s (also the solo service rate)."""
        return float(self.probs @ self.rates)


@dataclass(frozen=True)
class FadingProcess:
    """Slot-to-slot evolution of the channel state.

    ``iid`` redraws the state from the stationary law every slot.
    ``gauss-markov`` keeps the current state with probability ``correlation``
    and otherwise redraws it, a first-order chain whose stationary law equals
    the model's state probabilities and whose lag-1 autocorrelation equals
    ``correlation``.
    """

    model: str = "iid"
    correlation: float = 0.0

    def __post_init__(self):
        if self.model not in ("iid", "gauss-markov"):
            raise ValueError(f"unknown fading model {self.model!r}")
        if not 0.0 <= self.correlation < 1.0:
            raise ValueError("correlation must lie in [0, 1)")
        if self.model == "iid" and self.correlation != 0.0:
            raise ValueError("iid fading implies correlation 0")

    @classmethod
    def for_config(cls, config: ChannelConfig, model: str = "gauss-markov") -> "FadingProcess":
        """Derive the stay probability exp(-2*pi*doppler*slot) from the config."""
        if model == "iid":
            return cls("iid", 0.0)
        corr = math.exp(-2.0 * math.pi * config.doppler_hz * config.slot_s)
        return cls("gauss-markov", corr)


def mean_snr(config: ChannelConfig, distance_m: float) -> float:
    """Mean linear SNR at the given BS distance: (tx/noise) * d^-alpha."""
    if distance_m <= 0:
        raise ValueError("distance_m must be positive")
    return (config.tx_psd / config.noise_psd) * distance_m ** (-config.path_loss_exponent)


def rate_from_snr(bandwidth_hz: float, snr: float) -> float:
    """Achievable rate B*log2(1 + snr/2) in bits/s (3 dB SNR backoff)."""
    if snr < 0:
        raise ValueError("snr must be non-negative")
    return bandwidth_hz * math.log2(1.0 + snr / 2.0)


def discretize(config: ChannelConfig, distance_m: float) -> ChannelModel:
    """Build the K-state channel model for a user at ``distance_m``.

    The exponential SNR distribution is cut into K equal-probability bins;
    each state carries the conditional mean SNR of its bin, which preserves
    the overall mean exactly.
    """
    m = mean_snr(config, distance_m)
    k = config.num_states
    if k == 1:
        snrs = np.array([m])
    else:
        # bin edges at the j/K quantiles of Exp(mean=m)
        edges = -m * np.log1p(-np.arange(1, k) / k)
        lo = np.concatenate(([0.0], edges))
        hi = np.concatenate((edges, [np.inf]))
        # E[X | a <= X < b] = m + (a e^{-a/m} - b e^{-b/m}) / (e^{-a/m} - e^{-b/m})
        hi_f = np.where(np.isinf(hi), 0.0, hi)  # b e^{-b/m} -> 0 as b -> inf
        elo = np.exp(-lo / m)
        ehi = np.where(np.isinf(hi), 0.0, np.exp(-hi_f / m))
        snrs = m + (lo * elo - hi_f * ehi) / (elo - ehi)
    probs = np.full(k, 1.0 / k)
    rates = np.array([rate_from_snr(config.bandwidth_hz, s) for s in snrs])
    return ChannelModel(distance_m=distance_m, probs=probs, snrs=snrs, rates=rates)


def on_off_model(p_on: float, snr_on: float, bandwidth_hz: float = 1.0) -> ChannelModel:
    """Two-state connectivity model: off (rate 0) with prob 1-p_on, on otherwise."""
    if not 0.0 < p_on <= 1.0:
        raise ValueError("p_on must lie in (0, 1]")
    probs = np.array([1.0 - p_on, p_on])
    snrs = np.array([0.0, snr_on])
    rates = np.array([0.0, rate_from_snr(bandwidth_hz, snr_on)])
    return ChannelModel(distance_m=float("nan"), probs=probs, snrs=snrs, rates=rates)


def snr_for_rate(bandwidth_hz: float, rate_bps: float) -> float:
    """Inverse of rate_from_snr, handy for constructing synthetic models."""
    return 2.0 * (2.0 ** (rate_bps / bandwidth_hz) - 1.0)


def next_state(process: FadingProcess, model: ChannelModel, current: int, rng: np.random.Generator) -> int:
    """Draw the next channel state index for one slot."""
    if not 0 <= current < model.num_states:
        raise ValueError("current state out of range")
    if process.correlation > 0.0 and rng.random() < process.correlation:
        return current
    idx = int(np.searchsorted(model.cum_probs, rng.random(), side="right"))
    return min(idx, model.num_states - 1)
