"""Counter-based random-number streams.

Every stream is a Philox generator keyed by ``(master_seed, path)`` where
``path`` is a tuple of small integers (experiment id, replica index, op
counter, ...).  Distinct paths give statistically independent streams and the
mapping is stateless, so replicas can be farmed out to any number of workers
in any order and still produce identical results.

``ReplicaRng`` hands out one child stream per draw *operation* (a disjoint
counter block of the replica's Philox).  Kernel backends may consume
different amounts of raw randomness from a child stream (the vectorized
fallback over-draws); because no block is ever revisited this cannot perturb
later draws, which keeps the compiled and pure-Python backends
decision-for-decision identical.
"""

from __future__ import annotations

import hashlib

import numpy as np
from numpy.random import Generator, Philox


def _key_from_path(master_seed: int, path: tuple[int, ...]) -> np.ndarray:
    payload = repr((int(master_seed),) + tuple(int(v) for v in path)).encode()
    digest = hashlib.blake2b(payload, digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64)


class StreamFactory:
    """Derives independent Philox streams from a master seed."""

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF

    def generator(self, *path: int) -> Generator:
        return Generator(Philox(key=_key_from_path(self.master_seed, path)))

    def replica(self, *path: int) -> "ReplicaRng":
        return ReplicaRng(self, path)


class ReplicaRng:
    """Per-replica stream dispenser; one child stream per operation.

    Child streams are disjoint 2^192-draw counter blocks of one Philox
    keyed by the replica path, so dispensing costs ~1us.  The returned
    Generator is reused: a handle is only valid until the next call,
    which matches the strictly sequential way the samplers consume
    streams.
    """

    def __init__(self, factory: StreamFactory, path: tuple[int, ...]):
        self._bg = Philox(key=_key_from_path(factory.master_seed, path))
        self._gen = Generator(self._bg)
        self._state = self._bg.state
        self._counter = self._state["state"]["counter"]
        self._block = 0

    def next_stream(self) -> Generator:
        c = self._counter
        c[0] = 0
        c[1] = 0
        c[2] = 0
        c[3] = self._block
        self._state["buffer_pos"] = 4
        self._state["has_uint32"] = 0
        self._bg.state = self._state
        self._block += 1
        return self._gen
