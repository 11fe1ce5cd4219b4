"""Large-scale regression recipe (airline-delay style), through the ``qtn`` CLI.

Full scale (optional, hours): export the airline delay table as a CSV with
eight covariates and the delay as last column, then

    python scripts/airline_recipe.py --data airline.csv --out results/airline --rank 20

The defaults (M = 64, Q = 2, L = 10, lambda = 1e-10, 25 epochs, 2/3 of the
rows for training) follow the published large-scale setup. Desk-scale
substitute (one to two minutes): a synthetic table with the same column layout,

    python scripts/airline_recipe.py --synthetic 100000 --rank 10 --epochs 5 --out results/airline_like

Each run writes the config it used, the model, the per-update report and the
standardized train/test MSE.
"""
import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from qtn.cli import main as qtn_main
from qtn.data import airline_like

COLUMNS = ["month", "day", "weekday", "plane_age", "distance", "airtime", "dep_time", "arr_time", "delay"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path)
    src.add_argument("--synthetic", type=int, metavar="N")
    ap.add_argument("--out", type=Path, default=Path("results/airline"))
    ap.add_argument("--M", type=int, default=64)
    ap.add_argument("--rank", type=int, default=20)
    ap.add_argument("--lam", type=float, default=1e-10)
    ap.add_argument("--L", type=float, default=10.0)
    ap.add_argument("--epochs", type=int, default=25)
    ap.add_argument("--train-fraction", type=float, default=2 / 3)
    args = ap.parse_args(argv)

    args.out.mkdir(parents=True, exist_ok=True)
    data = args.data.resolve() if args.data else args.out / "airline_like.csv"
    if args.synthetic:
        X, y = airline_like(args.synthetic)
        with open(data, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            w.writerows(np.column_stack([X, y]).tolist())
    cfg = args.out / "airline.yaml"
    cfg.write_text(
        f"data: {data}\nkind: fourier\nM: {args.M}\nQ: 2\nL: {args.L}\nrank: {args.rank}\n"
        f"lambda: {args.lam}\nmax_epochs: {args.epochs}\nseed: 0\nsplit_seed: 0\ntrain_fraction: {args.train_fraction}\n"
    )
    code = qtn_main(["train", "--config", str(cfg), "--out", str(args.out)])
    if code == 0:
        meta = json.loads((args.out / "model.json").read_text())
        print(json.dumps(meta["metrics_standardized"], indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
