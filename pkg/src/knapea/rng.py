"""Deterministic 64-bit random stream used by every stochastic component.

The generator is splitmix64 ("knapea-splitmix64-v1"): a 64-bit counter
advanced by the golden-gamma increment, pushed through the murmur-style
finalizer.  It is small enough to reimplement bit-for-bit inside the
compiled kernels (see ``kernels.py``), which is what makes seeded runs
replay identically across the numba and pure-python backends.

Draw conventions, shared with the kernels:

* ``randrange(n)`` is the residue ``next_u64() % n``.  The residue draw is
  uniform up to a bias of at most ``n / 2**64`` per outcome, far below
  anything observable at desk scale; it is used instead of rejection
  sampling so that every operation consumes a fixed, documented number of
  draws.
* A Bernoulli event with exact rational probability ``num/den`` is
  ``next_u64() % den < num`` (one draw).
* Per-trial seeds are derived from a master seed with :func:`derive_seed`,
  which returns the ``(index+1)``-th raw output of a splitmix64 stream
  seeded with the master seed.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

GENERATOR_NAME = "knapea-splitmix64-v1"


def mix64(x: int) -> int:
    """The splitmix64 output finalizer on a 64-bit value."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for sub-stream ``index``: output ``index`` of the master stream."""
    if index < 0:
        raise ValueError("index must be non-negative")
    return mix64((master_seed + (index + 1) * GOLDEN_GAMMA) & MASK64)


class SplitMix64:
    """Stateful splitmix64 stream over Python integers.

    This is the reference implementation; the kernels carry an
    equivalent one on ``uint64`` numpy scalars, and a test pins the two
    to the same output sequence.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & MASK64
        return mix64(self._state)

    def randrange(self, n: int) -> int:
        """Uniform draw from ``range(n)`` (residue convention, one draw)."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return self.next_u64() % n

    def bernoulli(self, num: int, den: int) -> bool:
        """True with probability ``num/den`` (one draw)."""
        if not 0 <= num <= den or den <= 0:
            raise ValueError("need 0 <= num <= den, den > 0")
        return self.next_u64() % den < num

    @property
    def state(self) -> int:
        return self._state
