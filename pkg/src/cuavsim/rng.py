"""Seeded random streams.

Every random draw in a run comes from a Philox generator keyed by
``(seed, replication, owner, purpose)``.  ``owner`` is 0 for run-level
streams and ``agent_index + 1`` for per-agent streams.  The tuple is fed
to :class:`numpy.random.SeedSequence` as its ``spawn_key``, so streams
never overlap and adding or removing a replication (or an agent) leaves
every other stream untouched.
"""
from __future__ import annotations

from enum import IntEnum

import numpy as np


class Purpose(IntEnum):
    SETUP = 0  # channel parameters, bandwidths, gains
    ENV = 1  # channel transitions and local sensing draws
    ACT = 2  # exploration draws of one agent
    REPLAY = 3  # minibatch sampling of one agent
    INIT = 4  # network weight initialisation of one agent


def stream(seed: int, replication: int, owner: int, purpose: Purpose) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replication, owner, int(purpose)))
    return np.random.Generator(np.random.Philox(ss))


def agent_stream(seed: int, replication: int, agent: int, purpose: Purpose) -> np.random.Generator:
    return stream(seed, replication, agent + 1, purpose)
