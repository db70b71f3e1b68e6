"""Seeded, splittable random streams.

All randomness in the engine flows through :class:`Rng`, a thin wrapper over
numpy's counter-based Philox bit generator keyed by a ``SeedSequence``. A
stream is identified by its root seed plus a tuple of integer keys, so a child
stream such as ``Rng(7).child(3, 12)`` is always the same regardless of how
many draws were taken from its parent or in which order children are created.
"""
from __future__ import annotations

import hashlib
from typing import Iterable

import numpy as np

ALGORITHM = "philox4x64-seedsequence"


def key_from_text(text: str) -> int:
    """Stable 63-bit integer key for a string (Python's ``hash`` is salted)."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


class Rng:
    def __init__(self, seed: int, keys: Iterable[int] = ()):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.keys)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, keys={self.keys})"

    @property
    def algorithm(self) -> str:
        return ALGORITHM

    def child(self, *keys: int | str) -> "Rng":
        """Independent stream addressed by ``keys`` below this one."""
        ints = [key_from_text(k) if isinstance(k, str) else int(k) for k in keys]
        return Rng(self.seed, self.keys + tuple(ints))

    def split(self, n: int) -> list["Rng"]:
        return [self.child(i) for i in range(n)]

    # draws -------------------------------------------------------------

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def gamma(self, shape: float, size=None):
        return self._gen.standard_gamma(shape, size)

    def integers(self, low: int, high: int | None = None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)
