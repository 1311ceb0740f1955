"""Instance generators: the adversarial trap families, the three worked
5-item instances, and a seeded random generator for test diversity.
"""

from __future__ import annotations

from fractions import Fraction

from .core import Bitstring, KnapsackInstance, Rational, as_rational
from .errors import ConfigError
from .rng import SplitMix64

PROP1 = "prop1"
PROP3 = "prop3"
FAMILIES = (PROP1, PROP3)


def _check_alpha(alpha: Rational) -> Fraction:
    alpha = as_rational(alpha)
    if not Fraction(0) < alpha < Fraction(1):
        raise ConfigError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    return alpha


def gen_prop1(n: int, alpha) -> KnapsackInstance:
    """Trap family defeating ratio-greedy repair.

    Item 1: profit n, weight n.  Items 2..an: profit 1, weight 1/(an).
    Items an+1..n: profit 1/n, weight n.  Capacity n.  The global
    optimum packs item 1 alone (value n); packing all the profit-1
    items is a local optimum of value an-1 from which ratio-greedy
    repair cannot escape, because item 1 has a middling ratio and gets
    evicted whenever it makes the knapsack overweight.
    """
    alpha = _check_alpha(alpha)
    an = alpha * n
    if an.denominator != 1 or an < 2:
        raise ConfigError(f"alpha*n must be an integer >= 2, got {an}")
    if n < 4:
        raise ConfigError(f"prop1 needs n >= 4, got {n}")
    an = int(an)
    profits = [Fraction(n)] + [Fraction(1)] * (an - 1) + [Fraction(1, n)] * (n - an)
    weights = (
        [Fraction(n)] + [Fraction(1, an)] * (an - 1) + [Fraction(n)] * (n - an)
    )
    return KnapsackInstance.of(profits, weights, Fraction(n))


def prop1_local_optimum(n: int, alpha) -> Bitstring:
    """The trap state for gen_prop1: all profit-1 items packed."""
    an = int(_check_alpha(alpha) * n)
    return Bitstring.from_indices(n, range(1, an))


def gen_prop3(n: int, alpha) -> KnapsackInstance:
    """Trap family defeating profit-greedy repair.

    Item 1: profit a(n-1), weight n-1.  Items 2..n: profit 1, weight 1.
    Capacity n-1, so item 1 alone fills the knapsack exactly: any
    mutant that keeps item 1 and adds anything is overweight, and
    profit-greedy repair strips the added profit-1 items right back.
    The singleton 10...0 (value a(n-1)) is the trap; the global optimum
    packs items 2..n (value n-1), an approximation gap of exactly a.
    """
    alpha = _check_alpha(alpha)
    p1 = alpha * (n - 1)
    if p1.denominator != 1 or p1 < 1:
        raise ConfigError(f"alpha*(n-1) must be a positive integer, got {p1}")
    if n < 3:
        raise ConfigError(f"prop3 needs n >= 3, got {n}")
    profits = [Fraction(int(p1))] + [Fraction(1)] * (n - 1)
    weights = [Fraction(n - 1)] + [Fraction(1)] * (n - 1)
    return KnapsackInstance.of(profits, weights, Fraction(n - 1))


def prop3_local_optimum(n: int) -> Bitstring:
    """The trap state for gen_prop3: item 1 alone."""
    return Bitstring.from_indices(n, [0])


_SECTION5 = {
    "A": ((10, 10, 10, 12, 12), (10, 10, 10, 10, 10), 20),
    "B": ((15, 15, 20, 20, 20), (10, 10, 20, 20, 20), 20),
    "C": ((40, 40, 40, 40, 150), (30, 30, 30, 30, 100), 120),
}


def gen_section5(which: str) -> KnapsackInstance:
    """The three worked 5-item instances (helper-objective motivation).

    A rewards high mean profit rank, B high mean ratio rank, C a high
    packed count; their known global optima are 00011, 11000, 11110.
    """
    try:
        profits, weights, capacity = _SECTION5[which.upper()]
    except KeyError:
        raise ConfigError(f"section5 instance must be one of A, B, C; got {which!r}")
    return KnapsackInstance.of(profits, weights, capacity)


def gen_random(
    n: int,
    profit_max: int,
    weight_max: int,
    cap_fraction,
    seed: int,
) -> KnapsackInstance:
    """Uniform random integer instance, deterministic per seed.

    Profits and weights are uniform in [1, max]; the capacity is
    ceil(cap_fraction * total_weight).
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    if profit_max < 1 or weight_max < 1:
        raise ConfigError("profit_max and weight_max must be >= 1")
    cap_fraction = as_rational(cap_fraction)
    if not Fraction(0) < cap_fraction <= 1:
        raise ConfigError("cap_fraction must lie in (0, 1]")
    rng = SplitMix64(seed)
    profits = [1 + rng.randrange(profit_max) for _ in range(n)]
    weights = [1 + rng.randrange(weight_max) for _ in range(n)]
    total = sum(weights)
    capacity = -((-cap_fraction * total) // 1)  # ceil for exact rationals
    return KnapsackInstance.of(profits, weights, Fraction(capacity))
