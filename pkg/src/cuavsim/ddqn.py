"""Independent double-DQN learner with optional UCB-Hoeffding target bonus."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .env import ConfigError, GlobalState, encode_state_vector, state_key
from .neural import (AdamState, DenseNet, NetStack, adam_step, clone_params, forward, loss_and_gradient,
                     stack_forward, stack_loss_and_gradient)


class InsufficientData(ValueError):
    pass


@dataclass
class DdqnConfig:
    gamma: float = 0.9
    batch: int = 64
    sync_period: int = 100
    capacity: int = 20_000
    zeta: float = 1e-3
    epsilon: float = 0.1
    ucb_c: float = 2.0
    ucb_p: float = 0.01
    horizon_h: int = 1
    total_slots: int = 50_000
    state_space_size: int = 2**5 * 6**4
    action_space_size: int = 6
    train_start: int = 64
    exploration_mode: str = "eps_greedy"
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if not 0 <= self.gamma < 1:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not 0 < self.batch <= self.capacity:
            raise ConfigError(f"batch must satisfy 0 < batch <= capacity, got {self.batch}, {self.capacity}")
        if self.sync_period < 1:
            raise ConfigError(f"sync_period must be >= 1, got {self.sync_period}")
        if not 0 <= self.epsilon <= 1:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not self.zeta > 0:
            raise ConfigError(f"zeta must be positive, got {self.zeta}")
        if self.exploration_mode not in ("eps_greedy", "ucb_h"):
            raise ConfigError(f"exploration_mode: unknown mode {self.exploration_mode!r}")
        if self.ucb_c < 0 or not 0 < self.ucb_p < 1:
            raise ConfigError("ucb_c must be >= 0 and ucb_p in (0, 1)")
        if self.train_start < 0 or not self.hidden or min(self.hidden) < 1:
            raise ConfigError("train_start must be >= 0 and hidden widths >= 1")

    @property
    def bonus_scale(self) -> float:
        """``c * sqrt(H^3 ln(|S||A|T/p))``; the bonus is this over sqrt(visits)."""
        log_term = math.log(self.state_space_size * self.action_space_size * self.total_slots / self.ucb_p)
        return self.ucb_c * math.sqrt(self.horizon_h**3 * log_term)


class Batch(NamedTuple):
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    keys: np.ndarray


class ReplayBuffer:
    """Fixed-capacity FIFO of ``(s, a, r, s', key(s))`` held in ring arrays."""

    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1:
            raise ConfigError(f"replay capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=np.intp)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.keys = np.zeros(capacity, dtype=np.int64)
        self._head = 0  # next write position
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, state, action: int, reward: float, next_state, key: int = 0) -> None:
        i = self._head
        self.states[i] = state
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self.keys[i] = key
        self._head = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def order(self) -> np.ndarray:
        """Storage indices from oldest to newest."""
        start = (self._head - self._size) % self.capacity
        return (start + np.arange(self._size)) % self.capacity

    def contents(self) -> list[tuple]:
        return [(self.states[i].copy(), int(self.actions[i]), float(self.rewards[i]),
                 self.next_states[i].copy()) for i in self.order()]

    def take(self, idx: np.ndarray) -> Batch:
        return Batch(self.states[idx], self.actions[idx], self.rewards[idx],
                     self.next_states[idx], self.keys[idx])


def push_experience(buf: ReplayBuffer, experience: Sequence) -> ReplayBuffer:
    buf.push(*experience)
    return buf


def sample_batch(buf: ReplayBuffer, b: int, rng: np.random.Generator) -> Batch:
    """``b`` distinct entries, uniformly at random."""
    if len(buf) < b:
        raise InsufficientData(f"buffer holds {len(buf)} entries, batch needs {b}")
    # occupied storage slots are always 0..len-1
    return buf.take(rng.choice(len(buf), size=b, replace=False))


def compute_targets(batch: Batch, current: DenseNet, target: DenseNet, visit_counter,
                    config: DdqnConfig) -> np.ndarray:
    """Double-Q targets: the current net picks a*, the target net scores it.

    ``visit_counter`` maps ``(state_key, action)`` to a visit count; it is
    only read in ``ucb_h`` mode.
    """
    rows = np.arange(len(batch.rewards))
    a_star = np.argmax(forward(current, batch.next_states), axis=1)
    q_next = forward(target, batch.next_states)[rows, a_star]
    y = batch.rewards + config.gamma * q_next
    if config.exploration_mode == "ucb_h" and config.ucb_c:
        y = y + _bonus(batch.keys, batch.actions, visit_counter, config)
    return y


def _bonus(keys: np.ndarray, actions: np.ndarray, visit_counter, config: DdqnConfig) -> np.ndarray:
    get = visit_counter.get
    visits = np.array([get(pair, 0) for pair in zip(keys.tolist(), actions.tolist())], dtype=float)
    return config.bonus_scale / np.sqrt(np.maximum(visits, 1.0))


class DdqnAgent:
    def __init__(self, config: DdqnConfig, n_channels: int, rng_act: np.random.Generator,
                 rng_replay: np.random.Generator, rng_init: np.random.Generator):
        self.config = config
        state_dim = 2 * n_channels + 1
        self.n_actions = n_channels + 1
        self.current = DenseNet.init((state_dim, *config.hidden, self.n_actions), rng_init)
        self.target = clone_params(self.current)
        self.opt = AdamState.for_net(self.current, zeta=config.zeta)
        self.buffer = ReplayBuffer(config.capacity, state_dim)
        self.visits: Counter = Counter()
        self.rng_act = rng_act
        self.rng_replay = rng_replay
        self.n_syncs = 0

    def act(self, vec: np.ndarray, key: int) -> int:
        return self.choose(forward(self.current, vec), key)

    def choose(self, q_values: np.ndarray, key: int) -> int:
        """Epsilon-greedy over precomputed Q-values; counts the visit in ucb_h mode."""
        if self.rng_act.random() < self.config.epsilon:
            a = int(self.rng_act.integers(self.n_actions))
        else:
            a = int(np.argmax(q_values))
        if self.config.exploration_mode == "ucb_h":
            self.visits[(key, a)] += 1
        return a

    @property
    def ready(self) -> bool:
        return len(self.buffer) >= max(self.config.train_start, self.config.batch)

    def remember(self, vec, action: int, reward: float, next_vec, key: int) -> None:
        self.buffer.push(vec, action, reward, next_vec, key)

    def train_step(self) -> Optional[float]:
        cfg = self.config
        if not self.ready:
            return None
        batch = sample_batch(self.buffer, cfg.batch, self.rng_replay)
        y = compute_targets(batch, self.current, self.target, self.visits, cfg)
        loss, grad = loss_and_gradient(self.current, batch.states, batch.actions, y)
        adam_step(self.current, grad, self.opt)
        return loss

    def maybe_sync_target(self, t: int) -> bool:
        if t % self.config.sync_period:
            return False
        self.target.params[:] = self.current.params
        self.n_syncs += 1
        return True

    def dump_checkpoint(self, path) -> None:
        """Current-network parameters preceded by a ``buffer_size`` line."""
        Path(path).write_text(f"buffer_size {len(self.buffer)}\n" + self.current.to_text())

    @staticmethod
    def load_checkpoint(path) -> tuple[int, DenseNet]:
        head, _, rest = Path(path).read_text().partition("\n")
        if not head.startswith("buffer_size "):
            raise ValueError(f"{path}: missing buffer_size header")
        return int(head.split()[1]), DenseNet.from_text(rest, str(path))


class DdqnFleet:
    """Drives agents of one configuration in lock-step with batched network calls.

    Every agent keeps its own networks, optimiser moments, replay buffer,
    visit counts and random streams; they become views into fleet-wide
    arrays, so the agents stay usable on their own and the random draws
    are the ones each agent would make by itself.
    """

    def __init__(self, agents: Sequence[DdqnAgent]):
        if not agents:
            raise ConfigError("a fleet needs at least one agent")
        first = agents[0]
        if any(a.config != first.config or a.current.sizes != first.current.sizes for a in agents):
            raise ConfigError("fleet agents must share one configuration and network shape")
        if len({a.opt.step for a in agents}) != 1 or len({len(a.buffer) for a in agents}) != 1:
            raise ConfigError("fleet agents must have trained in lock-step")
        self.agents = list(agents)
        self.config = first.config
        g = len(agents)
        self.current = NetStack(first.current.sizes, g, first.current.activations)
        self.target = NetStack(first.current.sizes, g, first.current.activations)
        self.opt = AdamState(np.zeros_like(self.current.params), np.zeros_like(self.current.params),
                             step=first.opt.step, beta1=first.opt.beta1, beta2=first.opt.beta2,
                             eps_stab=first.opt.eps_stab, zeta=first.opt.zeta)
        cap, dim = first.buffer.capacity, first.buffer.states.shape[1]
        self._states = np.zeros((g, cap, dim))
        self._actions = np.zeros((g, cap), dtype=np.intp)
        self._rewards = np.zeros((g, cap))
        self._next_states = np.zeros((g, cap, dim))
        self._keys = np.zeros((g, cap), dtype=np.int64)
        for i, ag in enumerate(agents):
            for stack, net in ((self.current, ag.current), (self.target, ag.target)):
                stack.params[i] = net.params
                net._bind(stack.params[i])
            self.opt.first_moment[i] = ag.opt.first_moment
            self.opt.second_moment[i] = ag.opt.second_moment
            ag.opt.first_moment = self.opt.first_moment[i]
            ag.opt.second_moment = self.opt.second_moment[i]
            buf = ag.buffer
            for name in ("states", "actions", "rewards", "next_states", "keys"):
                shared = getattr(self, "_" + name)
                shared[i] = getattr(buf, name)
                setattr(buf, name, shared[i])
        self._g = np.arange(g)[:, None]

    def act(self, vec: np.ndarray, key: int) -> list[int]:
        x = np.broadcast_to(np.asarray(vec, dtype=float), (len(self.agents), 1, len(vec)))
        q = stack_forward(self.current, x)[:, 0, :]
        return [ag.choose(q[i], key) for i, ag in enumerate(self.agents)]

    def remember(self, vec, actions: Sequence[int], rewards: Sequence[float], next_vec, key: int) -> None:
        for ag, a, r in zip(self.agents, actions, rewards):
            ag.remember(vec, a, r, next_vec, key)

    def train_step(self) -> Optional[np.ndarray]:
        """One Adam step per agent; per-agent losses, or None while warming up."""
        cfg = self.config
        if not self.agents[0].ready:
            return None
        n = len(self.agents[0].buffer)
        idx = np.stack([ag.rng_replay.choice(n, size=cfg.batch, replace=False) for ag in self.agents])
        g = self._g
        states, actions = self._states[g, idx], self._actions[g, idx]
        next_states = self._next_states[g, idx]
        a_star = np.argmax(stack_forward(self.current, next_states), axis=2)
        q_next = stack_forward(self.target, next_states)[g, np.arange(cfg.batch), a_star]
        y = self._rewards[g, idx] + cfg.gamma * q_next
        if cfg.exploration_mode == "ucb_h" and cfg.ucb_c:
            keys = self._keys[g, idx]
            y = y + np.stack([_bonus(keys[i], actions[i], ag.visits, cfg) for i, ag in enumerate(self.agents)])
        losses, grad = stack_loss_and_gradient(self.current, states, actions, y)
        adam_step(self.current, grad, self.opt)
        for ag in self.agents:
            ag.opt.step = self.opt.step
        return losses

    def maybe_sync_target(self, t: int) -> bool:
        if t % self.config.sync_period:
            return False
        self.target.params[:] = self.current.params
        for ag in self.agents:
            ag.n_syncs += 1
        return True


def act(agent: DdqnAgent, state: GlobalState) -> int:
    return agent.act(encode_state_vector(state), state_key(state))


def train_step(agent: DdqnAgent) -> Optional[float]:
    return agent.train_step()


def maybe_sync_target(agent: DdqnAgent, t: int) -> bool:
    return agent.maybe_sync_target(t)
