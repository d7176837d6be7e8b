"""Deterministic PRNG streams.

Seed-to-stream mapping (stable across releases):

* a run seeded with integer ``seed`` uses ``numpy.random.Generator`` backed by
  ``PCG64(SeedSequence(seed))``;
* sub-stream ``i`` of a master seed uses ``PCG64(SeedSequence([master, i]))``,
  e.g. sweep run ``i`` under ``--master-seed m`` draws from stream ``[m, i]``.

All sampling goes through :class:`UniformStream`, which draws uniforms from
the generator in blocks. For PCG64 a block draw consumes the same underlying
stream as repeated scalar draws, so block size does not affect the sequence.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def make_substream_rng(master_seed: int, *indices: int) -> np.random.Generator:
    entropy = [master_seed, *indices]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


class UniformStream:
    """Buffered stream of uniform [0, 1) doubles with an exclusive owner."""

    __slots__ = ("_rng", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self._rng = rng
        self._buf = rng.random(block)
        self._pos = 0

    def next(self) -> float:
        buf = self._buf
        pos = self._pos
        if pos == buf.shape[0]:
            buf = self._rng.random(buf.shape[0])
            self._buf = buf
            pos = 0
        self._pos = pos + 1
        return buf[pos]


def stream_for_seed(seed: int) -> UniformStream:
    return UniformStream(make_rng(seed))
