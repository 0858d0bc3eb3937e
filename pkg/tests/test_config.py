import dataclasses

import numpy as np
import pytest

from cuavsim.config import (
    BANDWIDTH_CHOICES_MHZ,
    PRESETS,
    ExperimentConfig,
    NetworkSpec,
    load_config,
    preset_config,
)
from cuavsim.ddqn import DdqnConfig
from cuavsim.env import ConfigError
from cuavsim.rng import Purpose, agent_stream, stream
from cuavsim.tabular import TabularAgentConfig


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_minimal_preset_file(tmp_path):
    cfg = load_config(write(tmp_path, "[experiment]\npreset = fig6\n"))
    assert cfg.network.n_channels == 5 and cfg.network.n_agents == 4
    a = cfg.agent
    assert (a.epsilon, a.gamma, a.ucb_c, a.ucb_p) == (0.1, 0.9, 2.0, 0.01)
    assert (a.c_alpha, a.phi_alpha, a.batch, a.sync_period, a.capacity) == (0.5, 0.8, 64, 100, 20_000)
    net = cfg.network
    assert (net.tau_sense, net.tau_transmit, net.p_transmit_dbm, net.eta, net.mu) == (1e-4, 5e-4, 23.0, 0.01, 0.05)
    assert (net.p_detect, net.p_false_alarm) == (0.9, 0.1)
    assert cfg.preset == "fig6"


def test_weight_sum_rejected(tmp_path):
    path = write(tmp_path, "[network]\neta = 0.5\nmu = 0.6\n")
    with pytest.raises(ConfigError, match="eta \\+ mu"):
        load_config(path)


def test_unknown_algorithm_rejected(tmp_path):
    with pytest.raises(ConfigError, match="algorithm"):
        load_config(write(tmp_path, "[experiment]\nalgorithm = il_sarsa\n"))


@pytest.mark.parametrize("text,needle", [
    ("[network]\nn_agentz = 3\n", "network.n_agentz"),
    ("[plotting]\ncolor = red\n", "plotting"),
    ("[agent]\nbatch = many\n", "agent.batch"),
    ("[experiment]\ntotal_slots = 0\n", "total_slots"),
    ("[experiment]\nreplications = 0\n", "replications"),
    ("[sweep]\nparam = noise\n", "sweep.param"),
    ("[network]\nfusion_k = 11\n", "fusion_k"),
    ("[network]\nalphas = 0.1,0.2\n", "alphas"),
    ("no section header\n", "exp.ini"),
])
def test_validation_names_the_field(tmp_path, text, needle):
    with pytest.raises(ConfigError, match=needle.replace(".", "\\.")):
        load_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.ini")


def test_precedence(tmp_path):
    path = write(tmp_path, "[experiment]\npreset = fig8\nseed = 11\ntotal_slots = 300\n"
                           "[network]\nfusion_k = 2\n[agent]\nhidden = 32, 16\n")
    cfg = load_config(path, total_slots=20)
    assert cfg.network.n_agents == 10  # from the preset
    assert cfg.seed == 11  # from the file
    assert cfg.total_slots == 20  # override beats file
    assert cfg.network.fusion_k == 2
    assert cfg.agent.hidden == (32, 16)
    assert load_config(path, preset="fig6").network.n_agents == 4


def test_defaults_without_file():
    cfg = load_config()
    assert cfg == ExperimentConfig().validate()
    assert cfg.reward_scale == 1.0


def test_presets():
    assert set(PRESETS) >= {"fig6", "fig7", "fig8", "fig8_noncoop", "fig12", "fig13", "fig14"}
    fig6, fig7 = preset_config("fig6"), preset_config("fig7")
    assert fig7.network.n_agents == 6
    assert dataclasses.replace(fig7.network, n_agents=4) == fig6.network
    assert preset_config("fig8").network.cooperative and not preset_config("fig8_noncoop").network.cooperative
    assert preset_config("fig13").sweep_param == "bandwidth"
    assert preset_config("fig13").sweep_values == (50, 60, 70, 80, 90, 100)
    assert preset_config("fig14").sweep_values == (0.1, 0.3, 0.5, 0.7, 0.9)
    with pytest.raises(ConfigError):
        preset_config("fig99")


def test_agent_config_kinds():
    cfg = preset_config("fig6")
    tab = cfg.replace(algorithm="il_q_ucbh").agent_config()
    assert isinstance(tab, TabularAgentConfig)
    assert tab.state_space_size == 2**5 * 6**4 and tab.action_space_size == 6
    assert tab.total_slots == cfg.total_slots
    deep = cfg.replace(algorithm="il_ddqn_eps").agent_config()
    assert isinstance(deep, DdqnConfig) and deep.exploration_mode == "eps_greedy"
    assert cfg.replace(algorithm="il_ddqn_ucbh").agent_config().exploration_mode == "ucb_h"


def test_network_spec_build_is_seeded():
    spec = NetworkSpec()
    a, b = spec.build(np.random.default_rng(4)), spec.build(np.random.default_rng(4))
    assert np.array_equal(a.gains_cross, b.gains_cross) and a.channels == b.channels
    for ch in a.channels:
        assert 0.1 <= ch.alpha <= 0.9 and 0.1 <= ch.beta <= 0.9
        assert ch.bandwidth / 1e6 in BANDWIDTH_CHOICES_MHZ


def test_network_overrides_leave_other_draws_alone():
    free = NetworkSpec().build(np.random.default_rng(8))
    fixed = NetworkSpec(bandwidths_mhz=(70.0,) * 5).build(np.random.default_rng(8))
    assert [c.bandwidth for c in fixed.channels] == [70e6] * 5
    assert [c.alpha for c in fixed.channels] == [c.alpha for c in free.channels]
    assert np.array_equal(fixed.gains_self, free.gains_self)


def test_rng_streams():
    a = stream(7, 0, 0, Purpose.ENV).random(5)
    assert np.array_equal(a, stream(7, 0, 0, Purpose.ENV).random(5))
    others = [stream(7, 1, 0, Purpose.ENV), stream(8, 0, 0, Purpose.ENV), stream(7, 0, 0, Purpose.SETUP),
              agent_stream(7, 0, 0, Purpose.ENV)]
    assert all(not np.array_equal(a, g.random(5)) for g in others)
    assert np.array_equal(agent_stream(7, 0, 2, Purpose.ACT).random(3), stream(7, 0, 3, Purpose.ACT).random(3))
    with pytest.raises(ValueError):
        stream(-1, 0, 0, Purpose.ENV)
    with pytest.raises(ValueError):
        stream(2**64, 0, 0, Purpose.ENV)
