"""Command line entry point: ``qshnn {train,bench,dynamics,project,validate}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks
from .dynamics import NetworkConfig, check_constraints, curvature_profile, integrate_rk4
from .errors import DivergenceError
from .harness import (
    ConfigError,
    ExperimentSpec,
    export_artifacts,
    load_weights,
    run_benchmark,
    run_one,
    save_weights,
)
from .learning import rng_for
from .manifold import project_weight_matrix, quaternionicity_residual

EXIT_OK, EXIT_RUN_FAILED, EXIT_BAD_CONFIG = 0, 1, 2


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file mirroring ExperimentSpec")
    p.add_argument("--seed", type=int, help="single seed (train) or first seed (bench)")
    p.add_argument("--mode", choices=["qshnn", "shnn", "both"])
    p.add_argument("--neurons", type=int, help="number of quaternion neurons")
    p.add_argument("--eta", type=float, help="initial learning rate")
    p.add_argument("--period", type=int, help="projection period P")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", type=str, help="output directory")


def build_spec(args) -> ExperimentSpec:
    """Config file first, then flags on top."""
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
    train = dict(data.get("train") or {})
    for flag, key in [("eta", "eta"), ("period", "projection_period"),
                      ("max_iters", "t_max_iters"), ("tau", "tau")]:
        v = getattr(args, flag, None)
        if v is not None:
            train[key] = v
    data["train"] = train
    if args.neurons is not None:
        data["n"] = args.neurons
    if args.mode is not None:
        data["mode"] = args.mode
    if args.jobs is not None:
        data["jobs"] = args.jobs
    if args.out is not None:
        data["output_dir"] = args.out
    if args.seed is not None:
        count = data.get("num_target_sets", 20) if args.command == "bench" else 1
        data["seeds"] = list(range(args.seed, args.seed + count))
        data["num_target_sets"] = count
    return ExperimentSpec.from_dict(data)


def cmd_train(args) -> int:
    spec = build_spec(args)
    failed = False
    for mode in spec.modes:
        rec = run_one(spec, spec.seeds[0], mode)
        print(f"{mode} seed={rec['seed']}: {rec['stop_reason']} after {rec.get('iterations', 0)} iterations, "
              f"mse={rec.get('final_mse', float('nan')):.3e}, "
              f"quaternionicity={rec.get('quaternionicity_residual', float('nan')):.3e}")
        failed |= not rec.get("converged", False)
    print(f"artifacts in {spec.output_dir}")
    return EXIT_RUN_FAILED if failed else EXIT_OK


def cmd_bench(args) -> int:
    spec = build_spec(args)
    summaries = run_benchmark(spec)
    failed = False
    for mode, s in summaries.items():
        print(f"{mode}: accuracy_rate={s.accuracy_rate:.3f} mean_iterations={s.mean_iterations:.1f} "
              f"equilibrium_error_max={s.equilibrium_error_max:.3e}")
        failed |= any(not r.get("converged") for r in s.records)
    print(f"summary written to {Path(spec.output_dir) / 'summary.json'}")
    return EXIT_RUN_FAILED if failed else EXIT_OK


def _load_initial_states(args, dim: int) -> np.ndarray:
    if args.initial is not None:
        states = np.atleast_2d(np.array(json.loads(Path(args.initial).read_text()), dtype=float))
    else:
        states = rng_for(args.seed or 0, 3).uniform(-1.0, 1.0, size=(args.random_starts, dim))
    if states.shape[1] != dim:
        raise ConfigError(f"initial states must have {dim} components")
    return states


def cmd_dynamics(args) -> int:
    try:
        W = load_weights(args.weights)
        cfg = NetworkConfig(n=W.shape[0] // 4, gamma=args.gamma, mu=args.mu, bias=args.bias)
        states = _load_initial_states(args, cfg.dim)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    rep = check_constraints(W, cfg)
    print(f"constraint1={rep.satisfied1} constraint2={rep.satisfied2} lambda={rep.lam:.4f}")
    status = EXIT_OK
    for k, q0 in enumerate(states):
        out = Path(args.out) / f"start_{k}"
        try:
            traj = integrate_rk4(q0, W, cfg, args.dt, args.t_end)
        except DivergenceError as exc:
            print(f"start {k}: {exc}")
            status = EXIT_RUN_FAILED
            continue
        curv = curvature_profile(traj, W, cfg)
        export_artifacts(None, traj, None, out, curv, {
            "initial_state": q0.tolist(),
            "final_state": traj.states[-1].tolist(),
            "final_residual": float(np.max(np.abs(traj.derivatives[-1]))),
            "max_curvature": float(curv.max()),
        })
        print(f"start {k}: final residual {np.max(np.abs(traj.derivatives[-1])):.3e}, "
              f"max curvature {curv.max():.4f} -> {out}")
    return status


def cmd_project(args) -> int:
    try:
        W = load_weights(args.weights)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    P = project_weight_matrix(W)
    print(f"residual before: {quaternionicity_residual(W):.6e}")
    print(f"distance moved:  {np.linalg.norm(W - P):.6e}")
    if args.out:
        save_weights(P, args.out)
        print(f"projected weights written to {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    ok = True
    for name, passed, detail in checks.run_all(seed=args.seed or 0):
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_RUN_FAILED


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qshnn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one target set")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bench", help="run the full benchmark protocol")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("dynamics", help="integrate a saved weight matrix")
    p.add_argument("--weights", required=True)
    p.add_argument("--initial", help="JSON list of initial state vectors")
    p.add_argument("--random-starts", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--t-end", type=float, default=20.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--bias", type=float, default=0.15)
    p.add_argument("--out", default="dynamics_out")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("project", help="block-project a saved weight matrix")
    p.add_argument("--weights", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("validate", help="run the invariant checks")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
