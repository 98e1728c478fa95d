"""Seeded randomness built only on raw PCG64 output words.

numpy keeps the PCG64 bit stream stable across releases, but not the
higher-level ``Generator`` methods, so every draw here is derived from
``random_raw()`` words directly. The identifier below is written into traces.
"""

from __future__ import annotations

from numpy.random import PCG64, SeedSequence

RNG_ALGORITHM = "pcg64-raw/1"

_MASK64 = (1 << 64) - 1


class Rng:
    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= seed <= _MASK64):
            raise ValueError(f"seed {seed} is not a 64-bit unsigned integer")
        self.seed = seed
        self.stream = stream
        self._bits = PCG64(SeedSequence([seed, stream]))

    def word(self) -> int:
        return int(self._bits.random_raw())

    def bits(self, count: int) -> int:
        """An integer made of ``count`` uniform bits."""
        out, have = 0, 0
        while have < count:
            out |= self.word() << have
            have += 64
        return out & ((1 << count) - 1)

    def below(self, m: int) -> int:
        """Uniform integer in ``[0, m)`` by rejection on 64-bit words."""
        if m <= 0:
            raise ValueError("m must be positive")
        limit = (1 << 64) - (1 << 64) % m
        while True:
            w = self.word()
            if w < limit:
                return w % m

    def bernoulli(self, num: int, den: int) -> bool:
        """True with probability num/den, using a 53-bit uniform."""
        return (self.word() >> 11) * den < num * (1 << 53)
