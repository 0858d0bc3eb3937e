"""Run all four learners on one preset and plot their seed-averaged curves.

    python3 scripts/compare_algorithms.py --preset fig6 --out runs/fig6
"""
import argparse
import logging
from pathlib import Path

import numpy as np

from cuavsim.config import ALGORITHMS, PRESETS, preset_config
from cuavsim.harness import CSV_HEADER, read_csv, run_experiment
from cuavsim.plot import emit_plot


def mean_csv(paths, out):
    cols = [read_csv(p) for p in paths]
    names = CSV_HEADER.split(",")
    avg = {n: np.mean([c[n] for c in cols], axis=0) for n in names}
    rows = [CSV_HEADER] + [f"{int(s)}," + ",".join(f"{avg[n][i]:.6f}" for n in names[1:])
                           for i, s in enumerate(avg["slot"])]
    Path(out).write_text("\n".join(rows) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="fig6", choices=sorted(PRESETS))
    ap.add_argument("--out", default=None)
    ap.add_argument("--slots", type=int)
    ap.add_argument("--replications", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--algos", nargs="+", default=list(ALGORITHMS), choices=ALGORITHMS)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    base = preset_config(args.preset)
    overrides = {k: v for k, v in dict(total_slots=args.slots, replications=args.replications,
                                        seed=args.seed).items() if v is not None}
    out = Path(args.out or base.output_dir)
    means = []
    for algo in args.algos:
        s = run_experiment(base.replace(algorithm=algo, output_dir=str(out), **overrides))
        print(f"{algo:14s} reward {s.mean_reward:11.4g} +- {s.std_reward:9.3g}  "
              f"accuracy {s.mean_accuracy:5.1f}%  utilization {s.mean_utilization:5.1f}%  ({s.wall_seconds:.0f}s)")
        means.append(out / f"{algo}_mean.csv")
        mean_csv(s.csv_paths, means[-1])
    for metric in ("avg_reward_ma", "sensing_accuracy", "channel_utilization"):
        emit_plot(means, out / f"{metric}.svg", metric)
    print(f"plots in {out}")


if __name__ == "__main__":
    main()
