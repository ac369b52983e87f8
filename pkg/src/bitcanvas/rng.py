"""Self-contained SplitMix64 generator.

Dataset splits must reproduce bit-for-bit across machines and across
reimplementations in other languages, so the generator and the shuffle it
drives are pinned here instead of delegating to ``random`` (whose algorithms
are not part of any contract).

Update rule (all arithmetic mod 2**64)::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    output = z ^ (z >> 31)

For seed 0 the first outputs are 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4,
0x06C45D188009454F, 0xF88BB8A8724C81EC.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform-ish draw in [0, bound) via modulo reduction.

        The slight modulo bias is irrelevant for layout/shuffle use and keeps
        the reduction trivially portable.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, iterating i = n-1 .. 1 with j = below(i+1)."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
