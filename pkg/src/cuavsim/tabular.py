"""Independent tabular Q-learners with epsilon-greedy or UCB-Hoeffding exploration."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .env import ConfigError

EXPLORATION_MODES = ("eps_greedy", "ucb_h")


@dataclass
class TabularAgentConfig:
    gamma: float = 0.9
    epsilon: float = 0.1
    c_alpha: float = 0.5
    phi_alpha: float = 0.8
    alpha0: float = 0.9
    ucb_c: float = 2.0
    ucb_p: float = 0.01
    horizon_h: int = 1
    total_slots: int = 50_000
    state_space_size: int = 2**5 * 6**4
    action_space_size: int = 6

    def __post_init__(self):
        # gamma = 1 is allowed for the undiscounted episodic form
        if not 0 <= self.gamma <= 1:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0 <= self.epsilon <= 1:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not self.c_alpha > 0:
            raise ConfigError(f"c_alpha must be positive, got {self.c_alpha}")
        if not 0.5 < self.phi_alpha <= 1:
            raise ConfigError(f"phi_alpha must lie in (0.5, 1], got {self.phi_alpha}")
        if not 0 < self.alpha0 <= 1:
            raise ConfigError(f"alpha0 must lie in (0, 1], got {self.alpha0}")
        if self.ucb_c < 0:
            raise ConfigError(f"ucb_c must be non-negative, got {self.ucb_c}")
        if not 0 < self.ucb_p < 1:
            raise ConfigError(f"ucb_p must lie in (0, 1), got {self.ucb_p}")
        for name in ("horizon_h", "total_slots", "state_space_size", "action_space_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")


class SparseQTable:
    """Q-values and visit counts keyed by (state key, action).

    Only states that have been updated are stored; everything else reads
    as ``q = 0, visits = 0``.
    """

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self._q: dict[int, list[float]] = {}
        self._n: dict[int, list[int]] = {}

    def __len__(self) -> int:
        return len(self._q)

    def q(self, key: int, action: int) -> float:
        row = self._q.get(key)
        return 0.0 if row is None else row[action]

    def visits(self, key: int, action: int) -> int:
        row = self._n.get(key)
        return 0 if row is None else row[action]

    def values(self, key: int) -> list[float]:
        row = self._q.get(key)
        return [0.0] * self.n_actions if row is None else list(row)

    def visit_row(self, key: int) -> Optional[list[int]]:
        return self._n.get(key)

    def max_q(self, key: int) -> float:
        row = self._q.get(key)
        return 0.0 if row is None else max(row)

    def _rows(self, key: int) -> tuple[list[float], list[int]]:
        row = self._q.get(key)
        if row is None:
            row = self._q[key] = [0.0] * self.n_actions
            self._n[key] = [0] * self.n_actions
        return row, self._n[key]

    def set(self, key: int, action: int, q: float, visits: int) -> None:
        if visits < 0:
            raise ValueError("visit counts are never negative")
        qs, ns = self._rows(key)
        qs[action] = q
        ns[action] = visits

    def entries(self) -> Iterator[tuple[int, int, float, int]]:
        """Yield ``(key, action, q, visits)`` for every visited pair, sorted."""
        for key in sorted(self._q):
            qs, ns = self._q[key], self._n[key]
            for a in range(self.n_actions):
                if ns[a] or qs[a]:
                    yield key, a, qs[a], ns[a]

    def total_visits(self) -> int:
        return sum(sum(ns) for ns in self._n.values())

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            for key, a, q, n in self.entries():
                fh.write(f"{key},{a},{q!r},{n}\n")

    @classmethod
    def load(cls, path, n_actions: int) -> "SparseQTable":
        table = cls(n_actions)
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if not line.strip():
                continue
            try:
                key, a, q, n = line.split(",")
                table.set(int(key), int(a), float(q), int(n))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed table entry {line!r}") from exc
        return table


def lr_schedule(t: int, config: TabularAgentConfig) -> float:
    """``min(alpha0, (t + c_alpha) ** -phi_alpha)``."""
    return min(config.alpha0, (t + config.c_alpha) ** -config.phi_alpha)


def ucb_bonus(visits: int, config: TabularAgentConfig) -> float:
    """Hoeffding confidence bonus for a pair visited ``visits`` times."""
    if visits < 1:
        raise ValueError("ucb_bonus needs visits >= 1 (the pair has just been visited)")
    log_term = math.log(
        config.state_space_size * config.action_space_size * config.total_slots / config.ucb_p
    )
    return config.ucb_c * math.sqrt(config.horizon_h**3 * log_term / visits)


def greedy(values) -> int:
    # max() keeps the first maximiser, i.e. the lowest action index
    return max(range(len(values)), key=values.__getitem__)


def select_action(
    table: SparseQTable,
    key: int,
    config: TabularAgentConfig,
    rng: Optional[np.random.Generator],
    mode: str = "eps_greedy",
) -> int:
    """Pick an action in state ``key``.

    ``greedy``: argmax Q, lowest index on ties.  ``eps_greedy``: uniform
    random action with probability epsilon, else greedy.
    """
    if mode == "eps_greedy":
        if rng.random() < config.epsilon:
            return int(rng.integers(table.n_actions))
        return greedy(table.values(key))
    if mode == "greedy":
        return greedy(table.values(key))
    raise ValueError(f"unknown selection mode {mode!r}")


def update_q_eps(table: SparseQTable, key: int, action: int, reward: float, next_key: int, t: int,
                 config: TabularAgentConfig) -> float:
    lr = lr_schedule(t, config)
    target = reward + config.gamma * table.max_q(next_key)
    qs, ns = table._rows(key)
    ns[action] += 1
    qs[action] = (1.0 - lr) * qs[action] + lr * target
    return qs[action]


def update_q_ucbh(table: SparseQTable, key: int, action: int, reward: float, next_key: int, t: int,
                  config: TabularAgentConfig) -> float:
    lr = lr_schedule(t, config)
    target = reward + config.gamma * table.max_q(next_key)
    qs, ns = table._rows(key)
    ns[action] += 1
    bonus = ucb_bonus(ns[action], config)
    if bonus:
        target += bonus
    qs[action] = (1.0 - lr) * qs[action] + lr * target
    return qs[action]


class TabularAgent:
    """One independent learner owning its own table and exploration stream."""

    def __init__(self, config: TabularAgentConfig, exploration: str, rng: np.random.Generator):
        if exploration not in EXPLORATION_MODES:
            raise ConfigError(f"exploration must be one of {EXPLORATION_MODES}, got {exploration!r}")
        self.config = config
        self.exploration = exploration
        self.rng = rng
        self.table = SparseQTable(config.action_space_size)
        self._update = update_q_eps if exploration == "eps_greedy" else update_q_ucbh

    def act(self, key: int) -> int:
        # both variants act epsilon-greedily; UCB-H differs only in its update target
        return select_action(self.table, key, self.config, self.rng, "eps_greedy")

    def learn(self, key: int, action: int, reward: float, next_key: int, t: int) -> float:
        return self._update(self.table, key, action, reward, next_key, t, self.config)
