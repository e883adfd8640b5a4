#!/usr/bin/env python3
"""Train 20 seeded target sets in both modes and print a per-seed table.

    python3 scripts/run_benchmark.py --out runs/bench --jobs 4
"""
import argparse
import logging

from qshnn.harness import ExperimentSpec, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/bench")
    ap.add_argument("--neurons", type=int, default=4)
    ap.add_argument("--sets", type=int, default=20)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--target-offset", type=float, default=None,
                    help="draw targets near the initial equilibrium instead of U(-1, 1)")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = ExperimentSpec(n=args.neurons, num_target_sets=args.sets, mode="both", output_dir=args.out,
                          jobs=args.jobs, target_offset=args.target_offset)
    summaries = run_benchmark(spec)

    print(f"{'mode':6} {'seed':>4} {'stop':>10} {'iters':>6} {'mse':>10} {'quat.res':>10} {'spread':>10} {'kappa':>6}")
    for mode, s in summaries.items():
        for r in s.records:
            print(f"{mode:6} {r['seed']:4d} {r['stop_reason']:>10} {r.get('iterations', 0):6d} "
                  f"{r.get('final_mse', float('nan')):10.2e} {r.get('quaternionicity_residual', float('nan')):10.2e} "
                  f"{r.get('equilibrium_error', float('nan')):10.2e} {r.get('max_curvature', float('nan')):6.3f}")
    for mode, s in summaries.items():
        print(f"{mode}: accuracy_rate={s.accuracy_rate:.2f} mean_iterations={s.mean_iterations:.0f} "
              f"equilibrium_error_max={s.equilibrium_error_max:.2e}")


if __name__ == "__main__":
    main()
