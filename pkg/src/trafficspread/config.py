"""Scenario configuration files (YAML, SI units) -> ScenarioConfig."""

from __future__ import annotations

import numpy as np
import yaml

from .channel import ChannelConfig, FadingProcess
from .mdp import CostModel
from .scheduler import SchedulerPolicy
from .sim import ScenarioConfig, StoppingRule, UserSpec


class ConfigError(ValueError):
    """Malformed scenario file; the message names the offending field."""


_CHANNEL_KEYS = {
    "bandwidth_hz", "tx_psd", "noise_psd", "path_loss_exponent",
    "slot_s", "doppler_hz", "num_states",
}


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _build_costs(raw, n: int) -> CostModel:
    if raw is None:
        return CostModel.uniform(n)
    _require(isinstance(raw, dict), "costs: must be a mapping")
    unknown = set(raw) - {"eta", "phi_joules", "weight"}
    _require(not unknown, f"costs: unknown keys {sorted(unknown)}")

    def expand(value, name):
        if value is None:
            return np.zeros((n, n))
        if np.isscalar(value):
            _require(float(value) >= 0, f"costs.{name}: must be non-negative")
            return float(value) * (1.0 - np.eye(n))
        arr = np.asarray(value, dtype=float)
        _require(arr.shape == (n, n), f"costs.{name}: expected an {n}x{n} matrix")
        return arr

    eta = expand(raw.get("eta", 0.0), "eta")
    phi = expand(raw.get("phi_joules", 1.0), "phi_joules")
    weight = expand(raw.get("weight", 0.0), "weight")
    try:
        return CostModel(eta=eta, phi=phi, weights=weight)
    except ValueError as err:
        raise ConfigError(f"costs: {err}") from err


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    _require(isinstance(doc, dict), "top level: expected a mapping")
    known = {
        "users", "channel", "scheduler", "dispatcher", "costs", "fading",
        "local_link_congested", "seed", "stopping", "truncation",
        "heuristic_truncation", "clusters",
    }
    unknown = set(doc) - known
    _require(not unknown, f"unknown top-level keys {sorted(unknown)}")

    raw_users = doc.get("users")
    _require(isinstance(raw_users, list) and raw_users, "users: a non-empty list is required")
    users = []
    for idx, u in enumerate(raw_users):
        _require(isinstance(u, dict), f"users[{idx}]: expected a mapping")
        extra = set(u) - {"distance_m", "arrival_rate", "mean_file_bytes"}
        _require(not extra, f"users[{idx}]: unknown keys {sorted(extra)}")
        _require("distance_m" in u, f"users[{idx}].distance_m: required")
        try:
            users.append(UserSpec(
                distance_m=float(u["distance_m"]),
                arrival_rate=float(u.get("arrival_rate", 0.0)),
                mean_file_bytes=float(u.get("mean_file_bytes", 1e6)),
            ))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"users[{idx}]: {err}") from err
    n = len(users)

    raw_chan = doc.get("channel", {}) or {}
    _require(isinstance(raw_chan, dict), "channel: expected a mapping")
    unknown = set(raw_chan) - _CHANNEL_KEYS
    _require(not unknown, f"channel: unknown keys {sorted(unknown)}")
    try:
        channel = ChannelConfig(**{k: (int(v) if k == "num_states" else float(v))
                                   for k, v in raw_chan.items()})
    except (TypeError, ValueError) as err:
        raise ConfigError(f"channel: {err}") from err

    raw_sched = doc.get("scheduler", {}) or {}
    if isinstance(raw_sched, str):
        raw_sched = {"kind": raw_sched}
    _require(isinstance(raw_sched, dict), "scheduler: expected a mapping or a kind string")
    unknown = set(raw_sched) - {"kind", "b", "a", "strict_argmin"}
    _require(not unknown, f"scheduler: unknown keys {sorted(unknown)}")
    try:
        scheduler = SchedulerPolicy(
            kind=raw_sched.get("kind", "greedy"),
            log_rule_b=float(raw_sched.get("b", 1.0)),
            log_rule_a=None if raw_sched.get("a") is None else np.asarray(raw_sched["a"], dtype=float),
            strict_argmin=bool(raw_sched.get("strict_argmin", False)),
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(f"scheduler: {err}") from err

    raw_fading = doc.get("fading", {}) or {}
    if isinstance(raw_fading, str):
        raw_fading = {"model": raw_fading}
    model = raw_fading.get("model", "iid")
    try:
        if model == "iid":
            fading = FadingProcess("iid", 0.0)
        elif "correlation" in raw_fading:
            fading = FadingProcess(model, float(raw_fading["correlation"]))
        else:
            fading = FadingProcess.for_config(channel, model)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"fading: {err}") from err

    raw_stop = doc.get("stopping", {}) or {}
    _require(isinstance(raw_stop, dict), "stopping: expected a mapping")
    stop_casts = {
        "relative_half_width": float, "confidence": float, "power_floor_w": float,
        "warmup_fraction": float, "mini_slots": int, "initial_minibatches": int,
        "growth": float, "max_slots": int, "target_batches": int, "min_group": int,
    }
    unknown = set(raw_stop) - set(stop_casts)
    _require(not unknown, f"stopping: unknown keys {sorted(unknown)}")
    stop_kwargs = {k: stop_casts[k](v) for k, v in raw_stop.items()}

    clusters = doc.get("clusters")
    if clusters is not None:
        _require(isinstance(clusters, list) and all(isinstance(c, list) for c in clusters),
                 "clusters: expected a list of member-index lists")
        clusters = [[int(u) for u in c] for c in clusters]

    try:
        return ScenarioConfig(
            users=users,
            channel=channel,
            scheduler=scheduler,
            dispatcher=str(doc.get("dispatcher", "none")),
            costs=_build_costs(doc.get("costs"), n),
            fading=fading,
            local_link_congested=bool(doc.get("local_link_congested", False)),
            seed=int(doc.get("seed", 0)),
            stopping=StoppingRule(**stop_kwargs),
            truncation=int(doc.get("truncation", 40)),
            heuristic_truncation=int(doc.get("heuristic_truncation", 30)),
            clusters=clusters,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def load_scenario(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"invalid YAML in {path}: {err}") from err
    return scenario_from_dict(doc)
