"""Run experiments: wire agents to the environment, record metrics, write outputs."""
from __future__ import annotations

import json
import logging
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from .config import ExperimentConfig
from .ddqn import DdqnAgent, DdqnFleet
from .env import SpectrumEnv, encode_state_vector, state_key
from .metrics import SlotMetrics, final_mean, moving_average, slot_metrics
from .rng import Purpose, agent_stream, stream
from .tabular import TabularAgent

log = logging.getLogger(__name__)

CSV_HEADER = "slot,avg_reward,avg_reward_ma,sensing_accuracy,channel_utilization"


@dataclass
class RunSummary:
    algorithm: str
    preset: str | None
    final_reward: list[float]
    final_accuracy: list[float]
    final_utilization: list[float]
    mean_reward: float
    std_reward: float
    mean_accuracy: float
    std_accuracy: float
    mean_utilization: float
    std_utilization: float
    wall_seconds: float
    csv_paths: list[str]

    def to_dict(self) -> dict:
        return asdict(self)


def make_agents(cfg: ExperimentConfig, n_channels: int, replication: int) -> list:
    agent_cfg = cfg.agent_config()
    agents = []
    for n in range(cfg.network.n_agents):
        act_rng = agent_stream(cfg.seed, replication, n, Purpose.ACT)
        if cfg.tabular:
            agents.append(TabularAgent(agent_cfg, cfg.exploration, act_rng))
        else:
            agents.append(DdqnAgent(agent_cfg, n_channels, act_rng,
                                    agent_stream(cfg.seed, replication, n, Purpose.REPLAY),
                                    agent_stream(cfg.seed, replication, n, Purpose.INIT)))
    return agents


def simulate(cfg: ExperimentConfig, replication: int) -> list[SlotMetrics]:
    """One replication: ``total_slots`` slots of act -> env step -> learn."""
    net = cfg.network.build(stream(cfg.seed, replication, 0, Purpose.SETUP))
    env = SpectrumEnv(net, stream(cfg.seed, replication, 0, Purpose.ENV))
    agents = make_agents(cfg, net.n_channels, replication)
    m, scale = net.n_channels, cfg.reward_scale
    series = []
    state = env.reset()
    key = state_key(state)
    if cfg.tabular:
        for t in range(cfg.total_slots):
            joint = [ag.act(key) for ag in agents]
            out = env.step(joint)
            next_key = state_key(out.next_state)
            for ag, a, r in zip(agents, joint, out.rewards):
                ag.learn(key, a, r * scale, next_key, t)
            series.append(slot_metrics(t, joint, out, m))
            key = next_key
    else:
        fleet = DdqnFleet(agents)
        vec = encode_state_vector(state)
        for t in range(cfg.total_slots):
            joint = fleet.act(vec, key)
            out = env.step(joint)
            next_vec = encode_state_vector(out.next_state)
            next_key = state_key(out.next_state)
            fleet.remember(vec, joint, [r * scale for r in out.rewards], next_vec, key)
            fleet.train_step()
            fleet.maybe_sync_target(t)
            series.append(slot_metrics(t, joint, out, m))
            vec, key = next_vec, next_key
    return series


def write_csv(series: Sequence[SlotMetrics], path, window: int = 100) -> None:
    ma = moving_average([s.avg_reward for s in series], window)
    lines = [CSV_HEADER]
    for s, smooth in zip(series, ma):
        lines.append(f"{s.slot},{s.avg_reward:.6f},{smooth:.6f},{s.sensing_accuracy:.6f},"
                     f"{s.channel_utilization:.6f}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"writing {path}: {exc}") from exc


def read_csv(path) -> dict[str, list[float]]:
    """Columns of a metrics CSV by name."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a metrics CSV (expected header {CSV_HEADER!r})")
    names = CSV_HEADER.split(",")
    cols: dict[str, list[float]] = {n: [] for n in names}
    for line in lines[1:]:
        for name, value in zip(names, line.split(",")):
            cols[name].append(float(value))
    return cols


def csv_path(cfg: ExperimentConfig, replication: int) -> Path:
    return Path(cfg.output_dir) / f"{cfg.algorithm}_rep{replication}.csv"


def _run_one(args) -> tuple[float, float, float, str]:
    cfg, r = args
    series = simulate(cfg, r)
    path = csv_path(cfg, r)
    write_csv(series, path, cfg.smoothing_window)
    return (final_mean([s.avg_reward for s in series]),
            final_mean([s.sensing_accuracy for s in series]),
            final_mean([s.channel_utilization for s in series]),
            str(path))


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("CUAV_SIM_THREADS", "1")))
    except ValueError:
        return 1


def _std(xs: list[float]) -> float:
    return statistics.stdev(xs) if len(xs) > 1 else 0.0


def run_experiment(cfg: ExperimentConfig) -> RunSummary:
    start = time.perf_counter()
    jobs = [(cfg, r) for r in range(cfg.replications)]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(job) for job in jobs]
    rewards, accs, utils, paths = (list(col) for col in zip(*results))
    summary = RunSummary(
        algorithm=cfg.algorithm, preset=cfg.preset,
        final_reward=rewards, final_accuracy=accs, final_utilization=utils,
        mean_reward=statistics.fmean(rewards), std_reward=_std(rewards),
        mean_accuracy=statistics.fmean(accs), std_accuracy=_std(accs),
        mean_utilization=statistics.fmean(utils), std_utilization=_std(utils),
        wall_seconds=time.perf_counter() - start, csv_paths=paths,
    )
    out = Path(cfg.output_dir) / f"{cfg.algorithm}_summary.json"
    out.write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    log.info("%s: reward %.4g +- %.3g, accuracy %.1f%%, utilization %.1f%% (%.1fs)", cfg.algorithm,
             summary.mean_reward, summary.std_reward, summary.mean_accuracy, summary.mean_utilization,
             summary.wall_seconds)
    return summary


def sweep_point(base: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    m = base.network.n_channels
    if parameter == "bandwidth":
        cfg = base.with_network(bandwidths_mhz=(float(value),) * m)
    elif parameter == "transition_prob":
        cfg = base.with_network(alphas=(float(value),) * m, betas=(float(value),) * m)
    else:
        raise ValueError(f"unknown sweep parameter {parameter!r}")
    return cfg.replace(output_dir=str(Path(base.output_dir) / f"{parameter}_{value:g}"))


def run_sweep(base: ExperimentConfig, parameter: str, values: Sequence[float]) -> list[RunSummary]:
    """One experiment per value, same seed for every value."""
    if not values:
        raise ValueError("sweep needs at least one value")
    summaries = [run_experiment(sweep_point(base, parameter, v)) for v in values]
    lines = [f"{parameter},mean_reward,std_reward,mean_accuracy,mean_utilization"]
    for v, s in zip(values, summaries):
        lines.append(f"{v:g},{s.mean_reward:.6f},{s.std_reward:.6f},{s.mean_accuracy:.6f},{s.mean_utilization:.6f}")
    out = Path(base.output_dir) / f"{base.algorithm}_sweep_{parameter}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    return summaries
