"""Ground-truth solvers and the greedy 1/2-approximation baseline.

Every EA run in this package is scored against one of these oracles, so
they are written for exactness first and speed second.  Both exact
solvers work on integer-scaled copies of the instance (multiply profits
and weights by the least common multiple of their denominators), which
keeps the inner loops in machine integers without ever rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import Bitstring, KnapsackInstance, Rational, fitness, is_feasible
from .errors import OracleLimitError

BRUTE_FORCE_MAX_N = 30
DP_MAX_SCALED_CAPACITY = 10**7

# Above this magnitude we leave int64 and fall back to object arrays of
# Python ints; slower, but still exact.
_INT64_SAFE = 2**62

METHOD_BRUTE_FORCE = "brute_force"
METHOD_DYNAMIC_PROGRAM = "dynamic_program"


@dataclass(frozen=True)
class OptimumCertificate:
    """An exact optimum value together with a feasible witness."""

    value: Rational
    witness: Bitstring
    method: str


@dataclass(frozen=True)
class GreedyBaseline:
    """The two greedy candidates whose better half is a 1/2-approximation.

    a_star packs only the single most profitable item that fits;
    b_star is the ratio-greedy fill.  value = max of the two fitnesses.
    """

    a_star: Bitstring
    b_star: Bitstring
    value: Rational


def scaled_profits(inst: KnapsackInstance) -> tuple[list[int], int]:
    """Integer profits obtained by scaling with the denominators' lcm."""
    scale = math.lcm(*(p.denominator for p in inst.profits))
    return [int(p * scale) for p in inst.profits], scale


def scaled_weights(inst: KnapsackInstance) -> tuple[list[int], int, int]:
    """Integer weights and capacity under a common scale factor."""
    scale = math.lcm(
        inst.capacity.denominator, *(w.denominator for w in inst.weights)
    )
    weights = [int(w * scale) for w in inst.weights]
    return weights, int(inst.capacity * scale), scale


def _doubling_sums(values: Sequence[int], dtype) -> np.ndarray:
    """Subset sums of `values` where bit t of the index selects values[-1-t]."""
    table = np.zeros(1 << len(values), dtype=dtype)
    size = 1
    for v in reversed(values):
        table[size : 2 * size] = table[:size] + v
        size *= 2
    return table


def brute_force_opt(inst: KnapsackInstance) -> OptimumCertificate:
    """Enumerate all 2^n packings; exact and witness-deterministic.

    Ties on value are broken by the lexicographically smallest bitstring
    (item 1 read as the most significant position), which is exactly the
    order the enumeration visits, so the first maximum wins.
    """
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise OracleLimitError(
            f"brute force enumeration is limited to n <= {BRUTE_FORCE_MAX_N}, got n = {n}"
        )
    p_scaled, p_scale = scaled_profits(inst)
    w_scaled, c_scaled, _ = scaled_weights(inst)

    small = max(p_scaled + w_scaled) * (n + 1) < _INT64_SAFE
    dtype = np.int64 if small else object
    n_low = min(n, 20 if small else 14)
    n_high = n - n_low

    w_low = _doubling_sums(w_scaled[n_high:], dtype)
    p_low = _doubling_sums(p_scaled[n_high:], dtype)

    best_value = -1
    best_high = 0
    best_low = 0
    for high in range(1 << n_high):
        w_high = 0
        p_high = 0
        for i in range(n_high):
            if (high >> (n_high - 1 - i)) & 1:
                w_high += w_scaled[i]
                p_high += p_scaled[i]
        if w_high > c_scaled:
            continue
        feasible = np.asarray(w_low + w_high <= c_scaled, dtype=bool)
        masked = np.where(feasible, p_low + p_high, -1)
        low = int(np.argmax(masked))
        value = int(masked[low])
        if value > best_value:
            best_value = value
            best_high = high
            best_low = low

    bits = [0] * n
    for i in range(n_high):
        bits[i] = (best_high >> (n_high - 1 - i)) & 1
    for i in range(n_high, n):
        bits[i] = (best_low >> (n - 1 - i)) & 1
    return OptimumCertificate(
        value=Fraction(best_value, p_scale),
        witness=Bitstring(tuple(bits)),
        method=METHOD_BRUTE_FORCE,
    )


def dp_opt(inst: KnapsackInstance) -> OptimumCertificate:
    """Weight-indexed dynamic program over the integer-scaled instance."""
    n = inst.n
    p_scaled, p_scale = scaled_profits(inst)
    w_scaled, c_scaled, _ = scaled_weights(inst)
    if c_scaled > DP_MAX_SCALED_CAPACITY:
        raise OracleLimitError(
            f"scaled capacity {c_scaled} exceeds the DP limit {DP_MAX_SCALED_CAPACITY}; "
            "try brute_force_opt for small n"
        )

    value_dtype = np.int64 if sum(p_scaled) < _INT64_SAFE else object
    mask_dtype = np.int64 if n <= 62 else object

    # best[j] = max profit with total weight <= j; packed[j] = its item set
    # as a bitmask with item 1 at the top bit (mask's binary = the bitstring).
    best = np.zeros(c_scaled + 1, dtype=value_dtype)
    packed = np.zeros(c_scaled + 1, dtype=mask_dtype)
    for i in range(n):
        w = w_scaled[i]
        if w > c_scaled:
            continue
        bit = 1 << (n - 1 - i)
        if mask_dtype is np.int64:
            bit = np.int64(bit)
        # snapshot first: each item may be taken at most once
        src_v = best[: c_scaled - w + 1].copy()
        src_m = packed[: c_scaled - w + 1].copy()
        cand = src_v + p_scaled[i]
        improved = np.asarray(cand > best[w:], dtype=bool)
        best[w:][improved] = cand[improved]
        packed[w:][improved] = src_m[improved] | bit

    mask = int(packed[c_scaled])
    bits = tuple((mask >> (n - 1 - i)) & 1 for i in range(n))
    return OptimumCertificate(
        value=Fraction(int(best[c_scaled]), p_scale),
        witness=Bitstring(bits),
        method=METHOD_DYNAMIC_PROGRAM,
    )


def greedy_baseline(inst: KnapsackInstance) -> GreedyBaseline:
    """The two-candidate greedy whose better value is >= OPT/2.

    a*: the singleton knapsack of the most profitable item with w_i <= C
    (all-zero if nothing fits; profit ties broken by lowest index).
    b*: scan items by decreasing p_i/w_i (ties by lower index) and add
    each item whose addition keeps the load within capacity; items that
    do not fit are skipped and the scan continues.
    """
    n = inst.n
    ratios = inst.ratios()

    a_index = -1
    for i in range(n):
        if inst.weights[i] <= inst.capacity:
            if a_index < 0 or inst.profits[i] > inst.profits[a_index]:
                a_index = i
    a_star = (
        Bitstring.from_indices(n, [a_index]) if a_index >= 0 else Bitstring.zeros(n)
    )

    order = sorted(range(n), key=lambda i: (-ratios[i], i))
    load = Fraction(0)
    b_bits = [0] * n
    for i in order:
        if load + inst.weights[i] <= inst.capacity:
            b_bits[i] = 1
            load += inst.weights[i]
    b_star = Bitstring(tuple(b_bits))

    value = max(fitness(inst, a_star), fitness(inst, b_star))
    return GreedyBaseline(a_star=a_star, b_star=b_star, value=value)


def approximation_ratio(
    inst: KnapsackInstance, x: Bitstring, opt: OptimumCertificate
) -> Rational:
    """fitness(x) / OPT, exact; requires a feasible x and a positive OPT."""
    if opt.value <= 0:
        raise ValueError("approximation ratio is undefined for a zero-value optimum")
    return fitness(inst, x) / opt.value


def solve(inst: KnapsackInstance) -> OptimumCertificate:
    """Pick an exact solver automatically: DP when it scales, else brute force."""
    _, c_scaled, _ = scaled_weights(inst)
    if c_scaled <= DP_MAX_SCALED_CAPACITY:
        return dp_opt(inst)
    return brute_force_opt(inst)


def _self_check(inst: KnapsackInstance, cert: OptimumCertificate) -> None:
    # internal debugging aid; not part of the public contract
    assert is_feasible(inst, cert.witness)
    assert fitness(inst, cert.witness) == cert.value
