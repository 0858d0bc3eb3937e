"""Command line: ``cuav-sim run | sweep | plot``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ALGORITHMS, PRESETS, SWEEP_PARAMS, load_config
from .env import ConfigError


def _values(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cuav-sim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="experiment config file")
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--seed", type=int)
        p.add_argument("--slots", type=int, dest="total_slots")
        p.add_argument("--algo", choices=ALGORITHMS, dest="algorithm")
        p.add_argument("--out", dest="output_dir")
        p.add_argument("--replications", type=int)

    run = sub.add_parser("run", help="run one experiment")
    common(run)
    sweep = sub.add_parser("sweep", help="run one experiment per parameter value")
    common(sweep)
    sweep.add_argument("--param", choices=SWEEP_PARAMS)
    sweep.add_argument("--values", type=_values)
    plot = sub.add_parser("plot", help="render metrics CSVs as an SVG line chart")
    plot.add_argument("--inputs", nargs="+", required=True)
    plot.add_argument("--out", required=True)
    plot.add_argument("--metric", default="avg_reward_ma",
                      choices=("avg_reward", "avg_reward_ma", "sensing_accuracy", "channel_utilization"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    stage = "config"
    try:
        if args.command == "plot":
            from .plot import emit_plot

            stage = "plot"
            emit_plot(args.inputs, args.out, args.metric)
            return 0

        from .harness import run_experiment, run_sweep

        if args.config is None and args.preset is None:
            raise ConfigError("either --config or --preset is required")
        cfg = load_config(args.config, preset=args.preset, seed=args.seed, total_slots=args.total_slots,
                          algorithm=args.algorithm, output_dir=args.output_dir,
                          replications=args.replications)
        if args.command == "run":
            stage = "run"
            s = run_experiment(cfg)
            print(f"{s.algorithm}: final reward {s.mean_reward:.6g} +- {s.std_reward:.3g}, "
                  f"accuracy {s.mean_accuracy:.2f}%, utilization {s.mean_utilization:.2f}%  -> {cfg.output_dir}")
            return 0

        param = args.param or cfg.sweep_param
        values = args.values or cfg.sweep_values
        if param is None or not values:
            raise ConfigError("sweep needs --param and --values (or a [sweep] section / sweep preset)")
        stage = "sweep"
        for v, s in zip(values, run_sweep(cfg, param, values)):
            print(f"{param}={v:g}: final reward {s.mean_reward:.6g} +- {s.std_reward:.3g}, "
                  f"accuracy {s.mean_accuracy:.2f}%, utilization {s.mean_utilization:.2f}%")
        return 0
    except (ConfigError, OSError, ValueError) as exc:
        print(f"cuav-sim: {stage} failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
