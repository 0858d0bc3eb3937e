"""Per-slot performance indicators and the trend test used on long runs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .env import SlotOutcome


@dataclass(frozen=True)
class SlotMetrics:
    slot: int
    avg_reward: float
    sensing_accuracy: float  # percent
    channel_utilization: float  # percent


def average_reward(rewards: Sequence[float]) -> float:
    if len(rewards) == 0:
        raise ValueError("average_reward of an empty reward list")
    return sum(rewards) / len(rewards)


def sensing_accuracy(outcome: SlotOutcome, m: int) -> float:
    """Percent of the ``m`` channels whose sensed verdict matches the truth.

    Unsensed channels count as wrong.  Each sensed channel contributes the
    fraction of its selectors whose acted-on verdict was correct; with
    cooperative fusion all selectors share one verdict, so this is a plain
    0/1 count per channel.
    """
    hits: dict[int, list[int]] = {}
    for a, verdict in zip(outcome.actions, outcome.agent_fusion):
        if a:
            hits.setdefault(a, []).append(int(verdict == outcome.truth[a - 1]))
    n_acc = sum(sum(h) / len(h) for h in hits.values())
    return 100.0 * n_acc / m


def channel_utilization(joint: Sequence[int], m: int) -> float:
    return 100.0 * len({a for a in joint if a}) / m


def moving_average(series: Sequence[float], window: int) -> list[float]:
    """Trailing mean over the last ``min(i + 1, window)`` values."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        return []
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    return list((csum[idx] - csum[lo]) / (idx - lo))


def slot_metrics(slot: int, joint: Sequence[int], outcome: SlotOutcome, m: int) -> SlotMetrics:
    return SlotMetrics(slot, average_reward(outcome.rewards), sensing_accuracy(outcome, m),
                       channel_utilization(joint, m))


@dataclass(frozen=True)
class TrendTest:
    slope: float  # per slot
    p_value: float
    n_batches: int


def final_trend(series: Sequence[float], fraction: float = 0.1, n_batches: int = 50) -> TrendTest:
    """Regression slope over the final ``fraction`` of a series.

    The window is cut into ``n_batches`` contiguous blocks and the block
    means are regressed on block centre; batching tames the serial
    correlation a per-slot regression would ignore.
    """
    x = np.asarray(series, dtype=float)
    tail = x[len(x) - max(int(round(len(x) * fraction)), n_batches):]
    usable = len(tail) - len(tail) % n_batches
    tail = tail[len(tail) - usable:]
    block = usable // n_batches
    means = tail.reshape(n_batches, block).mean(axis=1)
    centres = (np.arange(n_batches) + 0.5) * block
    fit = stats.linregress(centres, means)
    return TrendTest(float(fit.slope), float(fit.pvalue), n_batches)


def final_mean(series: Sequence[float], fraction: float = 0.1) -> float:
    x = np.asarray(series, dtype=float)
    return float(x[len(x) - max(1, int(round(len(x) * fraction))):].mean())
