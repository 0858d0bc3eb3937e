"""Primary-user channels, cooperative sensing, and the three-phase slot.

Channel indices are 1-based everywhere an agent action is involved
(action 0 means "stay idle"); arrays indexed by channel are 0-based.

Draw order inside one slot is part of the reproducibility contract:
first one draw per channel (occupancy transition, channel order), then
one sensing draw per selecting agent (agent order).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

THERMAL_NOISE_DBM_PER_HZ = -174.0


class ConfigError(ValueError):
    """A configuration value violates its contract."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def thermal_noise(bandwidth: float) -> float:
    return dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ) * bandwidth


def _check_prob(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ChannelParams:
    alpha: float  # P(idle -> busy)
    beta: float  # P(busy -> idle)
    bandwidth: float  # Hz
    p_detect: float = 0.9
    p_false_alarm: float = 0.1

    def __post_init__(self):
        for name in ("alpha", "beta", "p_detect", "p_false_alarm"):
            _check_prob(name, getattr(self, name))
        if not self.bandwidth > 0:
            raise ConfigError(f"bandwidth must be positive, got {self.bandwidth}")


@dataclass
class NetworkConfig:
    """Static description of one simulated CUAV network.

    ``gains_cross[j, n, m]`` is the gain from interferer ``j`` into the
    link of agent ``n`` on channel ``m + 1``; its diagonal is never read.
    ``noise_power`` may be a scalar, one value per channel, or ``None``
    for thermal noise over each channel's bandwidth.
    """

    n_agents: int
    n_channels: int
    channels: Sequence[ChannelParams]
    gains_self: np.ndarray
    gains_cross: np.ndarray
    tau_sense: float = 1e-4
    tau_transmit: float = 5e-4
    v_dd: float = 1.0
    p_transmit: float = dbm_to_watts(23.0)
    noise_power: Union[None, float, Sequence[float], np.ndarray] = None
    eta: float = 0.01
    mu: float = 0.05
    fusion_k: Union[int, str] = "majority"
    cooperative: bool = True
    observation_mode: str = "ground_truth"
    noise: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, m = self.n_agents, self.n_channels
        if n < 1 or m < 1:
            raise ConfigError(f"n_agents and n_channels must be >= 1, got {n}, {m}")
        self.channels = tuple(self.channels)
        if len(self.channels) != m:
            raise ConfigError(f"channels: expected {m} entries, got {len(self.channels)}")
        self.gains_self = np.asarray(self.gains_self, dtype=float)
        self.gains_cross = np.asarray(self.gains_cross, dtype=float)
        if self.gains_self.shape != (n, m):
            raise ConfigError(f"gains_self: expected shape {(n, m)}, got {self.gains_self.shape}")
        if self.gains_cross.shape != (n, n, m):
            raise ConfigError(f"gains_cross: expected shape {(n, n, m)}, got {self.gains_cross.shape}")
        if not (self.gains_self > 0).all():
            raise ConfigError("gains_self: all gains must be positive")
        off_diag = ~np.eye(n, dtype=bool)
        if not (self.gains_cross[off_diag] > 0).all():
            raise ConfigError("gains_cross: all cross gains must be positive")
        if not (0 < self.eta < 1 and 0 < self.mu < 1):
            raise ConfigError(f"eta and mu must lie in (0, 1), got {self.eta}, {self.mu}")
        if self.eta + self.mu >= 1:
            raise ConfigError(f"eta + mu must be < 1, got {self.eta + self.mu}")
        for name in ("tau_sense", "tau_transmit", "p_transmit"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.v_dd < 0:
            raise ConfigError(f"v_dd must be non-negative, got {self.v_dd}")
        if self.fusion_k != "majority":
            if isinstance(self.fusion_k, bool) or not isinstance(self.fusion_k, (int, np.integer)):
                raise ConfigError(f"fusion_k must be an integer or 'majority', got {self.fusion_k!r}")
            if not 1 <= self.fusion_k <= n:
                raise ConfigError(f"fusion_k must lie in [1, {n}], got {self.fusion_k}")
        if self.observation_mode not in ("ground_truth", "fusion_carry_forward"):
            raise ConfigError(f"observation_mode: unknown mode {self.observation_mode!r}")
        if self.noise_power is None:
            noise = np.array([thermal_noise(c.bandwidth) for c in self.channels])
        else:
            noise = np.broadcast_to(np.asarray(self.noise_power, dtype=float), (m,)).copy()
        if not (noise > 0).all():
            raise ConfigError("noise_power must be positive")
        self.noise = noise

    def k_for(self, n_sensors: int) -> int:
        """Fusion threshold applied to a channel sensed by ``n_sensors`` agents."""
        if self.fusion_k == "majority":
            return max(1, math.ceil(n_sensors / 2))
        return min(int(self.fusion_k), n_sensors)


def random_gains(
    n_agents: int,
    n_channels: int,
    rng: np.random.Generator,
    self_db: tuple[float, float] = (-80.0, -60.0),
    cross_db: tuple[float, float] = (-90.0, -70.0),
) -> tuple[np.ndarray, np.ndarray]:
    """Quasi-static gains, uniform in dB over the given ranges."""
    g_self = 10.0 ** (rng.uniform(*self_db, size=(n_agents, n_channels)) / 10.0)
    g_cross = 10.0 ** (rng.uniform(*cross_db, size=(n_agents, n_agents, n_channels)) / 10.0)
    return g_self, g_cross


@dataclass(frozen=True)
class GlobalState:
    selectors: tuple[int, ...]  # s_0..s_M, s_0 = idle agents
    occupancy: tuple[int, ...]  # o_1..o_M, 1 = busy

    @classmethod
    def all_idle(cls, n_agents: int, occupancy: Sequence[int]) -> "GlobalState":
        return cls((n_agents,) + (0,) * len(occupancy), tuple(int(o) for o in occupancy))


@dataclass(frozen=True)
class SlotOutcome:
    actions: tuple[int, ...]
    truth: tuple[int, ...]
    local_decisions: tuple[Optional[int], ...]  # per agent, None when idle
    fusion: tuple[Optional[int], ...]  # per channel, None when unsensed or non-cooperative
    agent_fusion: tuple[Optional[int], ...]  # verdict each agent acted on
    rewards: tuple[float, ...]
    next_state: GlobalState


def step_channel(occ: int, params: ChannelParams, rng: np.random.Generator) -> int:
    u = rng.random()
    if occ:
        return 0 if u < params.beta else 1
    return 1 if u < params.alpha else 0


def stationary_busy_prob(params: ChannelParams) -> float:
    total = params.alpha + params.beta
    if total == 0:
        raise ValueError("degenerate chain: alpha + beta == 0 has no unique stationary law")
    return params.alpha / total


def sense_local(truth: int, params: ChannelParams, rng: np.random.Generator) -> int:
    p = params.p_detect if truth else params.p_false_alarm
    return int(rng.random() < p)


def fuse(decisions: Sequence[int], k: int) -> int:
    """K-out-of-n rule: busy iff at least ``k`` local decisions say busy."""
    if len(decisions) == 0:
        raise ValueError("cannot fuse an empty set of sensing decisions")
    if k < 1:
        raise ValueError(f"fusion threshold must be >= 1, got {k}")
    return int(sum(decisions) >= k)


def sinr(agent: int, channel: int, selectors, config: NetworkConfig) -> float:
    m = channel - 1
    signal = config.gains_self[agent, m] * config.p_transmit
    interference = sum(config.gains_cross[j, agent, m] for j in selectors if j != agent)
    return signal / (interference * config.p_transmit + config.noise[m])


def throughput(channel: int, sinr_value: float, config: NetworkConfig) -> float:
    bandwidth = config.channels[channel - 1].bandwidth
    return config.tau_transmit * bandwidth * math.log2(1.0 + sinr_value)


def sensing_energy(channel: int, config: NetworkConfig) -> float:
    return config.tau_sense * config.v_dd**2 * config.channels[channel - 1].bandwidth


def transmission_energy(config: NetworkConfig) -> float:
    return config.tau_transmit * config.p_transmit


def reward(agent: int, action: int, truth: int, fusion: int, sinr_value: float, config: NetworkConfig) -> float:
    """Per-agent slot reward; the five cases depend on (truth, fusion)."""
    if action == 0:
        return 0.0
    e_ss = sensing_energy(action, config)
    if truth:
        if fusion:
            return -e_ss
        return -e_ss - transmission_energy(config)
    rate = throughput(action, sinr_value, config)
    if fusion:
        return -config.eta * e_ss - (1.0 - config.eta) * rate
    return -config.eta * e_ss - config.mu * transmission_energy(config) + (1.0 - config.eta - config.mu) * rate


def env_step(
    state: GlobalState,
    joint: Sequence[int],
    config: NetworkConfig,
    rng: np.random.Generator,
    prev_truth: Optional[Sequence[int]] = None,
) -> SlotOutcome:
    """Run one sense -> cooperate -> access slot.

    ``prev_truth`` is the true occupancy of the previous slot; it defaults
    to ``state.occupancy``, which is exact in ``ground_truth`` mode.
    """
    n_agents, n_channels = config.n_agents, config.n_channels
    if len(joint) != n_agents:
        raise ConfigError(f"joint action has {len(joint)} entries, network has {n_agents} agents")
    if len(state.selectors) != n_channels + 1 or len(state.occupancy) != n_channels:
        raise ConfigError("state dimensions do not match the network")
    for a in joint:
        if not 0 <= a <= n_channels:
            raise ConfigError(f"action {a} outside 0..{n_channels}")
    prev = state.occupancy if prev_truth is None else prev_truth

    truth = tuple(step_channel(prev[m], config.channels[m], rng) for m in range(n_channels))

    groups: list[list[int]] = [[] for _ in range(n_channels)]
    local: list[Optional[int]] = [None] * n_agents
    for n, a in enumerate(joint):
        if a:
            local[n] = sense_local(truth[a - 1], config.channels[a - 1], rng)
            groups[a - 1].append(n)

    fusion: list[Optional[int]] = [None] * n_channels
    if config.cooperative:
        for m, group in enumerate(groups):
            if group:
                fusion[m] = fuse([local[n] for n in group], config.k_for(len(group)))
        agent_fusion = tuple(fusion[a - 1] if a else None for a in joint)
    else:
        agent_fusion = tuple(local)

    rewards = []
    for n, a in enumerate(joint):
        if a == 0:
            rewards.append(0.0)
            continue
        t, d = truth[a - 1], agent_fusion[n]
        s = 0.0
        if t == 0:
            if config.cooperative:
                sharing = groups[a - 1]
            else:
                sharing = [j for j in groups[a - 1] if agent_fusion[j] == 0 or j == n]
            s = sinr(n, a, sharing, config)
        rewards.append(reward(n, a, t, d, s, config))

    counts = [0] * (n_channels + 1)
    for a in joint:
        counts[a] += 1
    if config.observation_mode == "ground_truth":
        observed = truth
    else:
        observed = list(state.occupancy)
        for m, group in enumerate(groups):
            if group:
                observed[m] = fusion[m] if config.cooperative else local[group[0]]
        observed = tuple(observed)
    next_state = GlobalState(tuple(counts), tuple(observed))
    return SlotOutcome(tuple(joint), truth, tuple(local), tuple(fusion), agent_fusion, tuple(rewards), next_state)


def encode_state_vector(state: GlobalState) -> np.ndarray:
    return np.array(state.selectors + state.occupancy, dtype=float)


def state_key(state: GlobalState) -> int:
    """Mixed-radix code over (s_1..s_M in base N+1, o_1..o_M in base 2).

    s_0 is implied by the other counts and is left out.
    """
    base = sum(state.selectors) + 1
    key = 0
    for s in state.selectors[1:]:
        key = key * base + s
    for o in state.occupancy:
        key = key * 2 + o
    return key


def state_space_size(n_agents: int, n_channels: int) -> int:
    return 2**n_channels * (n_channels + 1) ** n_agents


class SpectrumEnv:
    """Stateful wrapper that tracks the hidden true occupancy between slots."""

    def __init__(self, config: NetworkConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.truth: tuple[int, ...] = ()
        self.state: Optional[GlobalState] = None

    def reset(self) -> GlobalState:
        occ = []
        for ch in self.config.channels:
            p = stationary_busy_prob(ch) if ch.alpha + ch.beta > 0 else 0.0
            occ.append(int(self.rng.random() < p))
        self.truth = tuple(occ)
        self.state = GlobalState.all_idle(self.config.n_agents, occ)
        return self.state

    def step(self, joint: Sequence[int]) -> SlotOutcome:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        out = env_step(self.state, joint, self.config, self.rng, prev_truth=self.truth)
        self.truth = out.truth
        self.state = out.next_state
        return out
