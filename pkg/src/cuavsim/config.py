"""Experiment configuration: scenario description, presets and file loading.

Config files are INI-style (``[section]`` headers, ``key = value``
lines); see ``docs/config.md`` for the full schema.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .ddqn import DdqnConfig
from .env import ChannelParams, ConfigError, NetworkConfig, dbm_to_watts, random_gains, state_space_size
from .tabular import TabularAgentConfig

ALGORITHMS = ("il_q_eps", "il_q_ucbh", "il_ddqn_eps", "il_ddqn_ucbh")
SWEEP_PARAMS = ("bandwidth", "transition_prob")
BANDWIDTH_CHOICES_MHZ = (50.0, 60.0, 70.0, 80.0, 90.0, 100.0)


@dataclass
class NetworkSpec:
    """Recipe for a :class:`NetworkConfig`.

    Anything left as ``None`` is drawn per replication from the setup
    stream.  All random quantities are drawn in a fixed order whether or
    not they are overridden, so fixing one of them (as a sweep does)
    leaves the others identical.
    """

    n_agents: int = 4
    n_channels: int = 5
    alphas: Optional[tuple[float, ...]] = None
    betas: Optional[tuple[float, ...]] = None
    transition_range: tuple[float, float] = (0.1, 0.9)
    bandwidths_mhz: Optional[tuple[float, ...]] = None
    p_detect: float = 0.9
    p_false_alarm: float = 0.1
    tau_sense: float = 1e-4
    tau_transmit: float = 5e-4
    v_dd: float = 1.0
    p_transmit_dbm: float = 23.0
    noise_power: Optional[float] = None
    eta: float = 0.01
    mu: float = 0.05
    fusion_k: Union[int, str] = "majority"
    cooperative: bool = True
    observation_mode: str = "ground_truth"
    self_gain_db: tuple[float, float] = (-80.0, -60.0)
    cross_gain_db: tuple[float, float] = (-90.0, -70.0)

    def build(self, rng: np.random.Generator) -> NetworkConfig:
        n, m = self.n_agents, self.n_channels
        lo, hi = self.transition_range
        alphas = rng.uniform(lo, hi, size=m)
        betas = rng.uniform(lo, hi, size=m)
        bandwidths = rng.choice(BANDWIDTH_CHOICES_MHZ, size=m)
        g_self, g_cross = random_gains(n, m, rng, self.self_gain_db, self.cross_gain_db)
        for name, values in (("alphas", self.alphas), ("betas", self.betas), ("bandwidths_mhz", self.bandwidths_mhz)):
            if values is not None and len(values) != m:
                raise ConfigError(f"{name}: expected {m} values, got {len(values)}")
        if self.alphas is not None:
            alphas = self.alphas
        if self.betas is not None:
            betas = self.betas
        if self.bandwidths_mhz is not None:
            bandwidths = self.bandwidths_mhz
        channels = [ChannelParams(float(a), float(b), float(bw) * 1e6, self.p_detect, self.p_false_alarm)
                    for a, b, bw in zip(alphas, betas, bandwidths)]
        return NetworkConfig(
            n_agents=n, n_channels=m, channels=channels, gains_self=g_self, gains_cross=g_cross,
            tau_sense=self.tau_sense, tau_transmit=self.tau_transmit, v_dd=self.v_dd,
            p_transmit=dbm_to_watts(self.p_transmit_dbm), noise_power=self.noise_power,
            eta=self.eta, mu=self.mu, fusion_k=self.fusion_k, cooperative=self.cooperative,
            observation_mode=self.observation_mode,
        )


@dataclass
class AgentSettings:
    """Hyperparameters shared by the tabular and DDQN learners."""

    gamma: float = 0.9
    epsilon: float = 0.1
    c_alpha: float = 0.5
    phi_alpha: float = 0.8
    alpha0: float = 0.9
    ucb_c: float = 2.0
    ucb_p: float = 0.01
    horizon_h: int = 1
    batch: int = 64
    sync_period: int = 100
    capacity: int = 20_000
    zeta: float = 1e-3
    train_start: int = 64
    hidden: tuple[int, ...] = (64, 64)


@dataclass
class ExperimentConfig:
    network: NetworkSpec = field(default_factory=NetworkSpec)
    algorithm: str = "il_ddqn_ucbh"
    agent: AgentSettings = field(default_factory=AgentSettings)
    total_slots: int = 50_000
    seed: int = 1
    replications: int = 5
    output_dir: str = "runs/default"
    preset: Optional[str] = None
    reward_scale: float = 1.0
    smoothing_window: int = 100
    sweep_param: Optional[str] = None
    sweep_values: Optional[tuple[float, ...]] = None

    def validate(self) -> "ExperimentConfig":
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm: unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")
        if self.total_slots < 1:
            raise ConfigError(f"total_slots must be >= 1, got {self.total_slots}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.reward_scale > 0:
            raise ConfigError(f"reward_scale must be positive, got {self.reward_scale}")
        if self.smoothing_window < 1:
            raise ConfigError(f"smoothing_window must be >= 1, got {self.smoothing_window}")
        if self.sweep_param is not None and self.sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep.param: unknown parameter {self.sweep_param!r}, expected one of {SWEEP_PARAMS}")
        lo, hi = self.network.transition_range
        if not 0 <= lo <= hi <= 1:
            raise ConfigError(f"transition_range must satisfy 0 <= lo <= hi <= 1, got {(lo, hi)}")
        self.network.build(np.random.default_rng(0))
        self.agent_config()
        return self

    @property
    def tabular(self) -> bool:
        return self.algorithm.startswith("il_q_")

    @property
    def exploration(self) -> str:
        return "ucb_h" if self.algorithm.endswith("ucbh") else "eps_greedy"

    def agent_config(self) -> Union[TabularAgentConfig, DdqnConfig]:
        a, net = self.agent, self.network
        sizes = dict(total_slots=self.total_slots,
                     state_space_size=state_space_size(net.n_agents, net.n_channels),
                     action_space_size=net.n_channels + 1)
        if self.tabular:
            return TabularAgentConfig(gamma=a.gamma, epsilon=a.epsilon, c_alpha=a.c_alpha, phi_alpha=a.phi_alpha,
                                      alpha0=a.alpha0, ucb_c=a.ucb_c, ucb_p=a.ucb_p, horizon_h=a.horizon_h,
                                      **sizes)
        return DdqnConfig(gamma=a.gamma, batch=a.batch, sync_period=a.sync_period, capacity=a.capacity,
                          zeta=a.zeta, epsilon=a.epsilon, ucb_c=a.ucb_c, ucb_p=a.ucb_p, horizon_h=a.horizon_h,
                          train_start=a.train_start, exploration_mode=self.exploration, hidden=a.hidden, **sizes)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def with_network(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, network=dataclasses.replace(self.network, **changes))


# Presets are overrides on top of the defaults above, in config-file form.
# SI rewards are O(1e5); the figure presets scale them to O(1) so the
# Q-network regression targets stay well conditioned.
_SCALED = {"reward_scale": "1e-5"}

PRESETS: dict[str, dict[str, dict[str, str]]] = {
    "fig6": {"experiment": _SCALED, "network": {"n_agents": "4"}},
    "fig7": {"experiment": _SCALED, "network": {"n_agents": "6"}},
    "fig8": {"experiment": _SCALED, "network": {"n_agents": "10", "cooperative": "true"}},
    "fig8_noncoop": {"experiment": _SCALED, "network": {"n_agents": "10", "cooperative": "false"}},
    "fig12": {"experiment": _SCALED, "network": {"n_agents": "10"}},
    "fig13": {"experiment": _SCALED, "network": {"n_agents": "4"},
              "sweep": {"param": "bandwidth", "values": "50,60,70,80,90,100"}},
    "fig14": {"experiment": _SCALED, "network": {"n_agents": "4"},
              "sweep": {"param": "transition_prob", "values": "0.1,0.3,0.5,0.7,0.9"}},
}


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _optional(conv):
    def parse(text: str):
        return None if text.strip().lower() in ("", "none", "random") else conv(text)
    return parse


def _fusion_k(text: str):
    text = text.strip().lower()
    return "majority" if text == "majority" else int(text)


def _pair(text: str) -> tuple[float, float]:
    values = _floats(text)
    if len(values) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return values


_NETWORK_KEYS = {
    "n_agents": int, "n_channels": int, "alphas": _optional(_floats), "betas": _optional(_floats),
    "transition_range": _pair, "bandwidths_mhz": _optional(_floats), "p_detect": float,
    "p_false_alarm": float, "tau_sense": float, "tau_transmit": float, "v_dd": float,
    "p_transmit_dbm": float, "noise_power": _optional(float), "eta": float, "mu": float,
    "fusion_k": _fusion_k, "cooperative": _bool, "observation_mode": str,
    "self_gain_db": _pair, "cross_gain_db": _pair,
}
_AGENT_KEYS = {
    "gamma": float, "epsilon": float, "c_alpha": float, "phi_alpha": float, "alpha0": float,
    "ucb_c": float, "ucb_p": float, "horizon_h": int, "batch": int, "sync_period": int,
    "capacity": int, "zeta": float, "train_start": int,
    "hidden": lambda s: tuple(int(x) for x in s.split(",") if x.strip()),
}
_EXPERIMENT_KEYS = {
    "preset": _optional(str), "algorithm": str, "total_slots": int, "seed": int, "replications": int,
    "output_dir": str, "reward_scale": float, "smoothing_window": int,
}
_SWEEP_KEYS = {"param": str, "values": _floats}
_SECTIONS = {"experiment": _EXPERIMENT_KEYS, "network": _NETWORK_KEYS, "agent": _AGENT_KEYS, "sweep": _SWEEP_KEYS}


def _parse_sections(sections: dict[str, dict[str, str]], source: str) -> dict[str, dict[str, object]]:
    parsed: dict[str, dict[str, object]] = {}
    for section, items in sections.items():
        keys = _SECTIONS.get(section)
        if keys is None:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in items.items():
            if key not in keys:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
            try:
                parsed.setdefault(section, {})[key] = keys[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {section}.{key}: {exc}") from None
    return parsed


def _apply(cfg: ExperimentConfig, parsed: dict[str, dict[str, object]]) -> ExperimentConfig:
    exp = dict(parsed.get("experiment", {}))
    exp.pop("preset", None)
    sweep = parsed.get("sweep", {})
    if "param" in sweep:
        exp["sweep_param"] = sweep["param"]
    if "values" in sweep:
        exp["sweep_values"] = sweep["values"]
    cfg = dataclasses.replace(cfg, **exp)
    if "network" in parsed:
        cfg = dataclasses.replace(cfg, network=dataclasses.replace(cfg.network, **parsed["network"]))
    if "agent" in parsed:
        cfg = dataclasses.replace(cfg, agent=dataclasses.replace(cfg.agent, **parsed["agent"]))
    return cfg


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r}, expected one of {sorted(PRESETS)}")
    cfg = _apply(ExperimentConfig(), _parse_sections(PRESETS[name], f"preset {name}"))
    return dataclasses.replace(cfg, preset=name, output_dir=f"runs/{name}").validate()


def load_config(path=None, preset: Optional[str] = None, **overrides) -> ExperimentConfig:
    """Read, default and validate an experiment configuration.

    Precedence (lowest first): built-in defaults, the preset (``preset``
    argument, else the file's ``experiment.preset``), the file, then
    non-``None`` keyword ``overrides`` of top-level fields.
    """
    parsed: dict[str, dict[str, object]] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        reader = configparser.ConfigParser(interpolation=None)
        try:
            reader.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        parsed = _parse_sections({s: dict(reader[s]) for s in reader.sections()}, str(path))
    name = preset or parsed.get("experiment", {}).get("preset")
    cfg = preset_config(name) if name else ExperimentConfig()
    cfg = _apply(cfg, parsed)
    cfg = dataclasses.replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()
