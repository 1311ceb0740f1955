"""Variation, repair, helper-objective, and selection operators.

These are the reference implementations: plain Python over exact
rationals, driven by an explicit SplitMix64 stream.  The engine kernels
in kernels.py reproduce these semantics on integer-scaled data; the two
are pinned together by equivalence tests, so any change here must keep
the random-stream consumption rules stated in each docstring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (
    Bitstring,
    KnapsackInstance,
    Rational,
    fitness,
    is_feasible,
    profit_ranks,
    ratio_ranks,
    total_weight,
)
from .errors import ConfigError, ShapeError
from .rng import SplitMix64

PROFIT_GREEDY = "profit"
RATIO_GREEDY = "ratio"
RANDOM_REPAIR = "random"
REPAIR_METHODS = (PROFIT_GREEDY, RATIO_GREEDY, RANDOM_REPAIR)


@dataclass(frozen=True)
class Individual:
    """A feasible genome with its cached objective values."""

    genome: Bitstring
    f: Rational
    h1: Rational
    h2: Rational
    h3: int


@dataclass(frozen=True)
class RepairMixture:
    """A probability distribution over repair methods.

    Drawing consumes exactly one random value when the mixture has more
    than one entry (r = draw mod common_denominator compared against
    cumulative numerators) and zero draws for a singleton mixture.
    """

    entries: tuple[tuple[str, Rational], ...]

    def __post_init__(self):
        if not self.entries:
            raise ConfigError("repair mixture needs at least one entry")
        for method, prob in self.entries:
            if method not in REPAIR_METHODS:
                raise ConfigError(f"unknown repair method {method!r}")
            if prob <= 0:
                raise ConfigError("mixture probabilities must be positive")
        if sum((p for _, p in self.entries), Fraction(0)) != 1:
            raise ConfigError("mixture probabilities must sum to 1")
        if len({m for m, _ in self.entries}) != len(self.entries):
            raise ConfigError("duplicate repair method in mixture")

    @classmethod
    def singleton(cls, method: str) -> "RepairMixture":
        return cls(((method, Fraction(1)),))

    @classmethod
    def uniform(cls, methods: Sequence[str]) -> "RepairMixture":
        k = len(methods)
        return cls(tuple((m, Fraction(1, k)) for m in methods))

    @property
    def common_denominator(self) -> int:
        return math.lcm(*(p.denominator for _, p in self.entries))

    def cumulative_numerators(self) -> tuple[int, ...]:
        den = self.common_denominator
        acc = 0
        out = []
        for _, prob in self.entries:
            acc += int(prob * den)
            out.append(acc)
        return tuple(out)

    def draw(self, rng: SplitMix64) -> str:
        """Pick a method; consumes one draw iff the mixture is not a singleton."""
        if len(self.entries) == 1:
            return self.entries[0][0]
        r = rng.randrange(self.common_denominator)
        for bound, (method, _) in zip(self.cumulative_numerators(), self.entries):
            if r < bound:
                return method
        raise AssertionError("unreachable: cumulative numerators cover the range")


def bitwise_mutation(x: Bitstring, rng: SplitMix64) -> Bitstring:
    """Flip each bit independently with probability 1/n.

    Consumes exactly n draws, one per bit in index order, whether or not
    the bit flips; this is the replay contract for seeded runs.
    """
    n = len(x)
    bits = tuple(b ^ 1 if rng.bernoulli(1, n) else b for b in x.bits)
    return Bitstring(bits)


def _eviction_victim(
    inst: KnapsackInstance, packed: list[int], method: str, rng: SplitMix64
) -> int:
    if method == RANDOM_REPAIR:
        return packed[rng.randrange(len(packed))]
    if method == PROFIT_GREEDY:
        key = inst.profits
    else:
        key = inst.ratios()
    victim = packed[0]
    for i in packed[1:]:
        # <= keeps the highest index among ties
        if key[i] <= key[victim]:
            victim = i
    return victim


def repair(
    inst: KnapsackInstance, x: Bitstring, method: str, rng: SplitMix64
) -> Bitstring:
    """Evict items one at a time until the knapsack is feasible.

    ProfitGreedy evicts the packed item with the smallest profit,
    RatioGreedy the one with the smallest profit-to-weight ratio (ties
    broken by highest item index in both), Random a uniformly random
    packed item (one draw per eviction).  A feasible input is returned
    unchanged with zero draws consumed.
    """
    if method not in REPAIR_METHODS:
        raise ConfigError(f"unknown repair method {method!r}")
    load = total_weight(inst, x)
    if load <= inst.capacity:
        return x
    bits = list(x.bits)
    packed = [i for i, b in enumerate(bits) if b]
    while load > inst.capacity:
        victim = _eviction_victim(inst, packed, method, rng)
        bits[victim] = 0
        packed.remove(victim)
        load -= inst.weights[victim]
    return Bitstring(tuple(bits))


def helper_values(
    inst: KnapsackInstance, x: Bitstring
) -> tuple[Rational, Rational, int]:
    """(h1, h2, h3): mean profit rank, mean ratio rank, packed count.

    The null knapsack gets (0, 0, 0) by convention: the means are 0/0
    otherwise, and 0 keeps the empty solution minimally attractive under
    maximization.
    """
    k = x.ones_count()
    if k == 0:
        return Fraction(0), Fraction(0), 0
    pr = profit_ranks(inst)
    rr = ratio_ranks(inst)
    h1 = Fraction(sum(pr[i] for i in x.packed_indices()), k)
    h2 = Fraction(sum(rr[i] for i in x.packed_indices()), k)
    return h1, h2, k


def make_individual(inst: KnapsackInstance, genome: Bitstring) -> Individual:
    """Evaluate a feasible genome into an Individual with cached objectives."""
    f = fitness(inst, genome)
    h1, h2, h3 = helper_values(inst, genome)
    return Individual(genome=genome, f=f, h1=h1, h2=h2, h3=h3)


def truncation_select(
    parents: list[Individual], child: Individual, rng: SplitMix64
) -> list[Individual]:
    """Keep the N best of the N+1 by fitness.

    Exactly one individual is evicted: the worst.  When several tie for
    worst, the victim is drawn uniformly among them (one draw); with a
    unique worst no draw is consumed.
    """
    pool = list(parents) + [child]
    worst_f = min(ind.f for ind in pool)
    minima = [k for k, ind in enumerate(pool) if ind.f == worst_f]
    if len(minima) > 1:
        victim = minima[rng.randrange(len(minima))]
    else:
        victim = minima[0]
    return [ind for k, ind in enumerate(pool) if k != victim]


def multi_criteria_select(
    parents: list[Individual], child: Individual, rng: SplitMix64
) -> list[Individual]:
    """Three-stage chain selection over the merged N+1 individuals.

    Each stage independently sorts the merged list T (parents then
    child) by its key, descending and stable on insertion order, then
    scans left to right keeping a chain: the first individual is kept,
    and a later one is kept iff it strictly exceeds the last kept one in
    the stage's diversity criterion.  Stage A sorts by f and requires
    h1 or h2 to strictly increase along the chain; stages B and C sort
    by h1 and h2 respectively and require h3 to strictly increase.
    Each chain is truncated to its first floor(N/3) members and added to
    the output.  While the output is short of N it is padded with
    uniformly random members of T, with replacement (one draw each).
    """
    n_parents = len(parents)
    if n_parents < 3:
        raise ConfigError("multi-criteria selection needs a population of at least 3")
    pool: list[Individual] = list(parents) + [child]
    cap = n_parents // 3
    out: list[Individual] = []

    def chain(order: list[int], keep_later) -> None:
        kept = [order[0]]
        for i in order[1:]:
            if keep_later(pool[i], pool[kept[-1]]):
                kept.append(i)
        out.extend(pool[i] for i in kept[:cap])

    order = sorted(range(len(pool)), key=lambda i: pool[i].f, reverse=True)
    chain(order, lambda a, last: a.h1 > last.h1 or a.h2 > last.h2)

    order = sorted(range(len(pool)), key=lambda i: pool[i].h1, reverse=True)
    chain(order, lambda a, last: a.h3 > last.h3)

    order = sorted(range(len(pool)), key=lambda i: pool[i].h2, reverse=True)
    chain(order, lambda a, last: a.h3 > last.h3)

    while len(out) < n_parents:
        out.append(pool[rng.randrange(len(pool))])
    return out
