"""Command-line front end: scenario files in, policy grids / tradeoff tables
/ verification reports out.

Exit codes: 0 ok, 1 target not met / generic failure, 2 config error,
3 instability, 4 solver failure, 5 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_scenario
from .mdp import (
    ACTION_NAMES,
    ConvergenceError,
    MdpProblem,
    backup_with_action_matrix,
    bellman_backup,
    classify_two_user_actions,
    extract_switching_curves,
    lcq_verification_problem,
    padded_truncation,
    solve,
    transition_probabilities,
    verify_delta_monotonicity,
)
from .scheduler import build_table
from .sim import InstabilityError, ScenarioConfig, measure_tradeoff, run

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_INSTABILITY = 3
EXIT_SOLVER = 4
EXIT_VERIFY = 5

POLICY_SCHEMA = "policy-grid-v1"
CURVES_SCHEMA = "switching-curves-v1"
SWEEP_SCHEMA = "tradeoff-v1"
METRICS_SCHEMA = "sim-metrics-v1"


def _write_manifest(out_dir: Path, command: str, config_path: str, seed, outputs, t_start: float):
    manifest = {
        "command": command,
        "config": str(config_path),
        "seed": seed,
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
        "wall_clock_s": round(time.time() - t_start, 3),
    }
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "trunc", None) is not None:
        updates["truncation"] = args.trunc
    if getattr(args, "dispatcher", None) is not None:
        updates["dispatcher"] = args.dispatcher
    if getattr(args, "states", None) is not None:
        updates["channel"] = dataclasses.replace(config.channel, num_states=args.states)
    if getattr(args, "weight", None) is not None:
        updates["costs"] = config.costs.with_weight(args.weight)
    return dataclasses.replace(config, **updates) if updates else config


def _two_user_problem(config: ScenarioConfig) -> tuple[MdpProblem, int]:
    if config.n_users != 2:
        raise ConfigError("this command requires a two-user config")
    from .channel import discretize

    models = [discretize(config.channel, u.distance_m) for u in config.users]
    theta = np.array([u.mean_file_bytes * 8.0 for u in config.users])
    use_box = config.truncation
    table = build_table(config.scheduler, models, truncation=padded_truncation(use_box),
                        mean_file_bits=theta)
    problem = MdpProblem(
        arrival_rates=np.array([u.arrival_rate for u in config.users]),
        rate_table=table,
        costs=config.costs,
        truncation=padded_truncation(use_box),
        mean_file_bits=theta,
        stability_warning=False,
    )
    return problem, use_box


def _solve_outputs(config: ScenarioConfig, out_dir: Path, curves_only: bool):
    problem, use_box = _two_user_problem(config)
    solution = solve(problem)
    codes = classify_two_user_actions(solution.policy)
    outputs = []

    if not curves_only:
        path = out_dir / "policy.csv"
        with open(path, "w") as fh:
            fh.write(f"# schema={POLICY_SCHEMA}\n")
            fh.write("q1,q2,action\n")
            for q1 in range(use_box + 1):
                for q2 in range(use_box + 1):
                    fh.write(f"{q1},{q2},{ACTION_NAMES[int(codes[q1, q2])]}\n")
        outputs.append(path)

    curves = extract_switching_curves(solution, limit=use_box)
    path = out_dir / "curves.csv"
    with open(path, "w") as fh:
        fh.write(f"# schema={CURVES_SCHEMA}\n")
        fh.write("q1,q2a,q2b\n")
        for q1 in range(curves.limit + 1):
            fh.write(f"{q1},{curves.q2a[q1]},{curves.q2b[q1]}\n")
    outputs.append(path)

    summary = {
        "gain": solution.gain,
        "gain_per_second": solution.gain_per_second,
        "iterations": solution.iterations,
        "residual_span": solution.span,
        "use_box": use_box,
        "solve_truncation": problem.truncation,
        "uniformization_rate": problem.uniformization_rate,
        "contiguous_columns": bool(curves.contiguous.all()),
    }
    path = out_dir / "solution.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    outputs.append(path)
    return outputs


def cmd_solve(args, curves_only: bool = False) -> int:
    t0 = time.time()
    config = _apply_overrides(load_scenario(args.config), args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        outputs = _solve_outputs(config, out_dir, curves_only)
    except ConvergenceError as err:
        print(f"solver failed: {err}", file=sys.stderr)
        return EXIT_SOLVER
    outputs.append(_write_manifest(out_dir, "curves" if curves_only else "solve",
                                   args.config, config.seed, outputs, t0))
    for p in outputs:
        print(p)
    return EXIT_OK


def cmd_simulate(args) -> int:
    t0 = time.time()
    config = _apply_overrides(load_scenario(args.config), args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        report = run(config)
    except InstabilityError as err:
        print(f"instability: {err}", file=sys.stderr)
        return EXIT_INSTABILITY
    except ConvergenceError as err:
        print(f"solver failed: {err}", file=sys.stderr)
        return EXIT_SOLVER
    record = {"schema": METRICS_SCHEMA, **report.as_record()}
    path = out_dir / "metrics.jsonl"
    with open(path, "a") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")
    manifest = _write_manifest(out_dir, "simulate", args.config, config.seed, [path], t0)
    print(path)
    print(manifest)
    return EXIT_OK if report.met_target else EXIT_FAIL


def cmd_sweep(args) -> int:
    t0 = time.time()
    config = _apply_overrides(load_scenario(args.config), args)
    weights = sorted(args.weights)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        rows = measure_tradeoff(config, weights)
    except InstabilityError as err:
        print(f"instability: {err}", file=sys.stderr)
        return EXIT_INSTABILITY
    except ConvergenceError as err:
        print(f"solver failed: {err}", file=sys.stderr)
        return EXIT_SOLVER
    path = out_dir / "tradeoff.csv"
    with open(path, "w") as fh:
        fh.write(f"# schema={SWEEP_SCHEMA}\n")
        fh.write("w,delay_s,delay_hw,power_W,power_hw\n")
        for w, rep in rows:
            fh.write(f"{w},{rep.mean_delay_s},{rep.delay_half_width_s},"
                     f"{rep.rerouting_power_w},{rep.power_half_width_w}\n")
    manifest = _write_manifest(out_dir, "sweep", args.config, config.seed, [path], t0)
    print(path)
    print(manifest)
    return EXIT_OK


def cmd_verify(args) -> int:
    """Structural property suite; any failed check exits non-zero."""
    config = load_scenario(args.config) if args.config else None
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    checks: list[tuple[str, bool, str]] = []

    if config is not None:
        problem, _ = _two_user_problem(_apply_overrides(config, args))
    else:
        from .mdp import lcq_on_off_problem
        problem = lcq_on_off_problem()
    solution = solve(problem)

    if getattr(args, "inject_fault", False):
        # corrupt one service rate so the probability-sum check trips
        grid = problem.service_grid()
        grid[(1,) * problem.n_users + (0,)] = -2.0 * problem.uniformization_rate

    # deterministic actions attain the randomized optimum
    worst = 0.0
    t = problem.truncation
    states = [tuple(rng.integers(0, t + 1, size=problem.n_users)) for _ in range(50)]
    for q in states:
        best, _ = bellman_backup(solution.h, problem, q)
        for _ in range(100):
            sigma = rng.random((problem.n_users, problem.n_users))
            sigma /= sigma.sum(axis=1, keepdims=True)
            randomized = backup_with_action_matrix(solution.h, problem, q, sigma)
            worst = min(worst, randomized - best)
    checks.append(("deterministic-dispatch-optimality", worst >= -1e-12,
                   f"worst margin {worst:.2e}"))

    # transition probabilities form a distribution at every state
    worst_sum = 0.0
    neg = False
    for q in np.ndindex(*(t + 1,) * problem.n_users):
        action = solution.policy[q]
        probs = transition_probabilities(problem, q, action)
        values = np.array(list(probs.values()))
        worst_sum = max(worst_sum, abs(values.sum() - 1.0))
        if (values < -1e-15).any():
            neg = True
    checks.append(("transition-probability-sums", worst_sum <= 1e-12 and not neg,
                   f"worst |sum-1| {worst_sum:.2e}, negatives: {neg}"))

    # gain invariance under the reference state
    try:
        alt = solve(problem, reference=(1,) + (0,) * (problem.n_users - 1))
        shift = abs(alt.gain - solution.gain)
        checks.append(("gain-reference-invariance", shift < 1e-6, f"shift {shift:.2e}"))
    except ConvergenceError as err:
        checks.append(("gain-reference-invariance", False, str(err)))

    # value-difference monotonicity and switching-curve structure
    pen = problem.costs.penalty()
    if problem.n_users == 2 and np.isclose(pen[0, 1], pen[1, 0], rtol=1e-12, atol=0.0):
        vprob, obs = lcq_verification_problem(observe_box=args.observe_box,
                                              iteration_cap=args.iteration_cap)
        report = verify_delta_monotonicity(vprob, observe_box=obs,
                                           iteration_cap=args.iteration_cap)
        checks.append(("value-difference-monotonicity",
                       report.monotone_interior and report.converged,
                       f"{report.iterations} iterations, "
                       f"{len(report.violations)} flagged cells"))
        from .mdp import lcq_on_off_problem
        struct = solve(lcq_on_off_problem())
        curves = extract_switching_curves(struct)
        checks.append(("switching-curve-contiguity", bool(curves.contiguous.all()),
                       f"{int(curves.contiguous.sum())}/{len(curves.contiguous)} columns contiguous"))
    else:
        print("SKIP value-difference-monotonicity: needs homogeneous symmetric costs")

    ok = True
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trafficspread",
        description="Energy-aware traffic-spreading policies: solve, simulate, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="scenario YAML file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--trunc", type=int, default=None, help="override the queue truncation")
        p.add_argument("--states", type=int, default=None, help="override the channel state count K")

    p = sub.add_parser("solve", help="solve the two-user dispatch MDP and export the policy grid")
    add_common(p)
    p.add_argument("--weight", type=float, default=None, help="override the tradeoff weight")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("curves", help="export only the switching-curve table")
    add_common(p)
    p.add_argument("--weight", type=float, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="run the simulator and append a metrics record")
    add_common(p)
    p.add_argument("--weight", type=float, default=None)
    p.add_argument("--dispatcher", choices=["none", "jsq", "optimal", "heuristic", "lower-bound"],
                   default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="delay/power tradeoff across weights")
    add_common(p)
    p.add_argument("--weights", type=lambda s: [float(x) for x in s.split(",")],
                   required=True, help="comma-separated weight list")
    p.add_argument("--dispatcher", choices=["optimal", "heuristic"], default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="structural property suite")
    add_common(p, needs_config=False)
    p.add_argument("--weight", type=float, default=None)
    p.add_argument("--observe-box", type=int, default=30, dest="observe_box")
    p.add_argument("--iteration-cap", type=int, default=400, dest="iteration_cap")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "curves":
            return cmd_solve(args, curves_only=True)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "verify":
            return cmd_verify(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
