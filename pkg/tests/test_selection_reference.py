"""Multi-criteria selection against a second, straight-line implementation.

The reference below is written directly from the selection rule's prose
description, in a deliberately different style from the library code:
index lists sorted by explicit (negated key, position) tuples, chains
collected with plain loops, fills drawn one draw per slot.  Agreement on
seeded random cases is the strongest everyday evidence that the library
implements the rule it documents.
"""

from fractions import Fraction

from knapea.core import Bitstring
from knapea.generators import gen_random
from knapea.operators import (
    PROFIT_GREEDY,
    make_individual,
    multi_criteria_select,
    repair,
)
from knapea.rng import SplitMix64

POP_SIZES = (3, 4, 6, 7)


def straight_line_reference(parents, child, rng):
    """Stage semantics, spelled out step by step."""
    merged = list(parents)
    merged.append(child)
    third = len(parents) // 3

    def stable_desc(key_of):
        keys = [key_of(ind) for ind in merged]
        return sorted(range(len(merged)), key=lambda i: (-keys[i], i))

    def chain(order, better):
        kept = []
        for i in order:
            if not kept:
                kept.append(i)
            elif better(merged[i], merged[kept[-1]]):
                kept.append(i)
        return kept[:third]

    out = []

    order_f = stable_desc(lambda ind: ind.f)
    diversity = lambda a, b: a.h1 > b.h1 or a.h2 > b.h2
    for i in chain(order_f, diversity):
        out.append(merged[i])

    order_h1 = stable_desc(lambda ind: ind.h1)
    count_up = lambda a, b: a.h3 > b.h3
    for i in chain(order_h1, count_up):
        out.append(merged[i])

    order_h2 = stable_desc(lambda ind: ind.h2)
    for i in chain(order_h2, count_up):
        out.append(merged[i])

    while len(out) < len(parents):
        out.append(merged[rng.randrange(len(merged))])
    return out


def build_case(case_index: int, pop_size: int):
    """A deterministic (instance, parents, child) tuple for one case."""
    inst = gen_random(5, 20, 20, Fraction(1, 2), seed=10_000 + case_index)
    rng = SplitMix64(20_000 + case_index)
    individuals = []
    for _ in range(pop_size + 1):
        bits = Bitstring(tuple(rng.randrange(2) for _ in range(5)))
        feasible = repair(inst, bits, PROFIT_GREEDY, rng)
        individuals.append(make_individual(inst, feasible))
    return individuals[:pop_size], individuals[pop_size]


def run_equivalence_cases(n_cases: int) -> int:
    """Compare the library against the reference; returns cases checked."""
    for case in range(n_cases):
        pop_size = POP_SIZES[case % len(POP_SIZES)]
        parents, child = build_case(case, pop_size)
        got = multi_criteria_select(parents, child, SplitMix64(case))
        want = straight_line_reference(parents, child, SplitMix64(case))
        assert got == want, f"case {case} (pop_size {pop_size}) diverged"
        assert len(got) == pop_size
    return n_cases


def test_selection_matches_the_straight_line_reference():
    assert run_equivalence_cases(1000) == 1000


def test_reference_and_library_agree_on_heavy_ties():
    # all-equal pools maximize tie handling in every stage
    inst = gen_random(5, 3, 3, Fraction(1, 2), seed=5)
    x = make_individual(inst, Bitstring.zeros(5))
    for pop_size in POP_SIZES:
        parents = [x] * pop_size
        got = multi_criteria_select(parents, x, SplitMix64(9))
        want = straight_line_reference(parents, x, SplitMix64(9))
        assert got == want
