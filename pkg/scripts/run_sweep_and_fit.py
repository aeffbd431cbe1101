#!/usr/bin/env python3
"""Regenerate the benchmark sweep and fit approximation models.

Runs the full (m, n, d) grid on fresh uniform instances, fits the
64-feature polynomial by backward selection, prints the quality table
and saves the sweep CSV plus selected models.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from bdmtsp import cam
from bdmtsp.harness import ExperimentSpec, run_sweep


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=10)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--workers", type=int, default=4)
    parser.add_argument("--out-dir", type=Path, default=Path("results"))
    parser.add_argument("--keep", type=int, nargs="*", default=[3, 9, 16],
                        help="feature counts to save as model JSON")
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    spec = ExperimentSpec(
        configs=cam.sweep_configs(), reps=args.reps, seed=args.seed,
        workers=args.workers,
    )
    t0 = time.perf_counter()
    result = run_sweep(spec)
    print(f"sweep: {len(result.configs)} configs x {args.reps} reps "
          f"in {time.perf_counter() - t0:.1f}s")
    sweep_path = args.out_dir / "sweep.csv"
    sweep_path.write_text(cam.sweep_to_csv(result))

    fmap = cam.FeatureMap.default()
    X = cam.feature_matrix(result.configs, fmap)
    y = np.asarray(result.y)
    t0 = time.perf_counter()
    steps = cam.backward_select(X, y)
    print(f"backward selection: {time.perf_counter() - t0:.2f}s")

    print(f"{'features':>8} {'rmse':>8} {'mape':>8} {'cp':>8} {'bic':>9}")
    by_count = {len(s.feature_idx): s for s in steps}
    for step in steps:
        s = step.stats
        print(f"{len(step.feature_idx):>8} {s['rmse_std']:>8.3f} "
              f"{s['mape']:>8.2%} {s['cp']:>8.2f} {s['bic']:>9.1f}")

    best = min(steps, key=lambda s: s.stats["bic"])
    print(f"best BIC at {len(best.feature_idx)} features")
    for count in sorted(set(args.keep) | {len(best.feature_idx)}):
        model = cam.step_model(by_count[count], fmap)
        path = args.out_dir / f"model_{count}f.json"
        path.write_text(cam.model_to_json(model) + "\n")
        print(f"saved {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
