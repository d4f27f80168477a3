"""Deterministic random streams.

All randomness in the package flows from a single integer seed through
named sub-streams so that independent components (initialization, SGD
draws, dataset generation, power-iteration starts) never share or race
on one generator state. The mapping (seed, names) -> stream is stable
across runs and platforms.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream", "stream_seed"]


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def stream_seed(seed: int, *names: str) -> np.random.SeedSequence:
    """SeedSequence for the sub-stream identified by ``names`` under ``seed``."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_name_key(n) for n in names))


def substream(seed: int, *names: str) -> np.random.Generator:
    """A fresh PCG64 generator for the named sub-stream of ``seed``."""
    return np.random.Generator(np.random.PCG64(stream_seed(seed, *names)))
