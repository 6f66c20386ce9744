"""Portable 64-bit linear congruential generator.

Instances generated from a seed must be identical on every platform, so
nothing here touches :mod:`random`.
"""

_MUL = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u32(self) -> int:
        self.state = (self.state * _MUL + _INC) & _MASK
        return self.state >> 32

    def below(self, k: int) -> int:
        """Integer in ``[0, k)`` by multiply-shift of one 32-bit output."""
        if k <= 0:
            raise ValueError("k must be positive")
        return (self.next_u32() * k) >> 32
