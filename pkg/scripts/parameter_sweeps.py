"""Bandwidth and transition-probability sweeps (presets fig13 and fig14).

    python3 scripts/parameter_sweeps.py --algo il_ddqn_ucbh --slots 20000
"""
import argparse
import logging

from cuavsim.config import ALGORITHMS, preset_config
from cuavsim.harness import run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--algo", default="il_ddqn_ucbh", choices=ALGORITHMS)
    ap.add_argument("--slots", type=int)
    ap.add_argument("--replications", type=int)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--only", choices=("fig13", "fig14"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    for preset in ("fig13", "fig14"):
        if args.only and preset != args.only:
            continue
        base = preset_config(preset).replace(algorithm=args.algo, output_dir=f"{args.out}/{preset}")
        if args.slots:
            base = base.replace(total_slots=args.slots)
        if args.replications:
            base = base.replace(replications=args.replications)
        print(f"{preset}: {base.sweep_param} sweep, {args.algo}")
        for value, s in zip(base.sweep_values, run_sweep(base, base.sweep_param, base.sweep_values)):
            rewards = " ".join(f"{r:.4g}" for r in s.final_reward)
            print(f"  {value:6g}: mean {s.mean_reward:.4g}  per replication {rewards}")


if __name__ == "__main__":
    main()
