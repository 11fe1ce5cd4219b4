"""Matched-budget generalization benchmark (QTKM vs TKM vs RFF vs KRR).

    python scripts/run_benchmark.py --data yacht_hydrodynamics.data --out results/yacht
    python scripts/run_benchmark.py --surrogate --out results/yacht_surrogate

Writes ``benchmark.csv`` (mean/sd test MSE per method and budget) and
``benchmark_runs.json`` (every seed). ``--surrogate`` replaces the data with a
synthetic table on the yacht design grid (22 hull forms x 14 Froude numbers);
its numbers say nothing about the real dataset.
"""
import argparse
import csv
import json
import time
from pathlib import Path

import numpy as np

from qtn.data import Dataset, load_table
from qtn.experiments import BenchmarkConfig, run_benchmark


def yacht_surrogate(seed: int = 0) -> Dataset:
    """Residuary-resistance-like target: steep in the Froude number, mild in hull shape."""
    rng = np.random.default_rng(seed)
    hulls = np.column_stack(
        [
            rng.uniform(-5.0, 0.0, 22),  # longitudinal centre of buoyancy
            rng.uniform(0.53, 0.60, 22),  # prismatic coefficient
            rng.uniform(4.34, 5.14, 22),  # length-displacement ratio
            rng.uniform(2.73, 5.35, 22),  # beam-draught ratio
            rng.uniform(2.73, 3.64, 22),  # length-beam ratio
        ]
    )
    froude = np.arange(0.125, 0.4501, 0.025)
    rows = np.array([[*h, fr] for h in hulls for fr in froude])
    shape = 1 + 4 * (rows[:, 1] - 0.565) - 0.05 * (rows[:, 2] - 4.74) + 0.02 * rows[:, 0]
    y = 1.2e3 * rows[:, 5] ** 6 * shape + 0.2 * rng.standard_normal(len(rows))
    return Dataset(rows, y, None, {"source": "yacht-surrogate", "seed": seed})


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="CSV with header or whitespace .data table; last column is the target")
    src.add_argument("--surrogate", action="store_true", help="use the synthetic yacht-shaped table")
    ap.add_argument("--out", type=Path, default=Path("results/benchmark"))
    ap.add_argument("--M", type=int, default=16)
    ap.add_argument("--tkm-ranks", type=int, nargs="+", default=[2, 4, 6])
    ap.add_argument("--seeds", type=int, default=10, help="number of random splits")
    ap.add_argument("--max-epochs", type=int, default=200)
    args = ap.parse_args(argv)

    if args.surrogate:
        ds = yacht_surrogate()
    else:
        X, y, names = load_table(args.data)
        ds = Dataset(X, y, None, {"source": str(args.data), "columns": names})
    cfg = BenchmarkConfig(M=args.M, tkm_ranks=args.tkm_ranks, seeds=list(range(args.seeds)), max_epochs=args.max_epochs)
    t0 = time.perf_counter()
    runs, summary = run_benchmark(ds, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "benchmark_runs.json").write_text(json.dumps(runs, indent=1, default=float) + "\n")
    with open(args.out / "benchmark.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(summary[0]))
        w.writeheader()
        w.writerows(summary)
    for row in summary:
        print(f"{row['method']:5s} TKM-rank {row['tkm_rank']}  R={row['R']!s:>4s} P={row['P']!s:>5s}  "
              f"MSE {row['mse_mean']:.4f} +- {row['mse_sd']:.4f}  failed {row['n_failed']}")
    print(f"{time.perf_counter() - t0:.0f}s, results in {args.out}")


if __name__ == "__main__":
    main()
