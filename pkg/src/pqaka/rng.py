"""Randomness sources injected into every protocol operation.

Two implementations: a deterministic SHA-256 counter generator for tests
and simulations, and an OS-entropy source for benchmarks.
"""

from __future__ import annotations

import hashlib
import os


class RandomSource:
    """Interface: anything with a bytes(n) method yielding n random bytes."""

    def bytes(self, n: int) -> bytes:
        raise NotImplementedError


class SeededRandom(RandomSource):
    """Deterministic generator: block i = SHA-256(seed32 || counter).

    Identical seeds yield identical byte streams across runs and platforms.
    """

    def __init__(self, seed: int | bytes):
        if isinstance(seed, int):
            seed = seed.to_bytes(32, "big", signed=False)
        if len(seed) != 32:
            seed = hashlib.sha256(seed).digest()
        self._seed = seed
        self._counter = 0
        self._buf = b""

    def bytes(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(
                self._seed + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out


class OsRandom(RandomSource):
    """OS entropy; used by benchmarks and any non-reproducible run."""

    def bytes(self, n: int) -> bytes:
        return os.urandom(n)
