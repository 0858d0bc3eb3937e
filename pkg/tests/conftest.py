import numpy as np
import pytest

from cuavsim.env import ChannelParams, NetworkConfig


def make_network(n=2, m=2, alpha=0.2, beta=0.4, bandwidth=50e6, gain=1.0, cross=1.0,
                 noise=1.0, p_transmit=1.0, **kwargs) -> NetworkConfig:
    """Small hand-sized network with uniform gains (defaults easy to compute by hand)."""
    p_detect = kwargs.pop("p_detect", 0.9)
    p_false_alarm = kwargs.pop("p_false_alarm", 0.1)
    channels = [ChannelParams(alpha, beta, bandwidth, p_detect, p_false_alarm) for _ in range(m)]
    return NetworkConfig(
        n_agents=n, n_channels=m, channels=channels,
        gains_self=np.full((n, m), gain), gains_cross=np.full((n, n, m), cross),
        noise_power=noise, p_transmit=p_transmit, **kwargs,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance summary -------------------------------------------------------
# tests/test_acceptance.py records one verdict per criterion here; the lines
# are printed at the end of the session whatever the verbosity.

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
