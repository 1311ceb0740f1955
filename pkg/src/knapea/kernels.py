"""Integer-scaled generation-loop kernels shared by all three EA families.

Everything here operates on a scaled copy of the instance: profits are
multiplied by the lcm of their denominators, weights and the capacity by
the lcm of theirs.  Scaling preserves all fitness and feasibility
comparisons exactly, so the kernels do exact arithmetic in int64.  Ratio
comparisons cross-multiply instead of dividing; the h1/h2 helper values
are carried as (rank sum, count) pairs and compared the same way.
compile_instance guards every magnitude so no int64 operation can
overflow.

The random stream matches operators.py draw for draw:
  per generation: 1 parent draw, n mutation draws in index order, then
  iff the child is overweight: 1 mixture draw iff the mixture has more
  than one entry, plus 1 draw per eviction under random repair; then
  for truncation selection 1 draw iff the worst fitness is tied, or for
  multi-criteria selection 1 draw per fill slot.
The kernel resumes cleanly: when the improvement log fills up it
returns with suspended=1 and the caller re-enters with larger arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .backend import kernel
from .core import KnapsackInstance, profit_ranks, ratio_ranks
from .errors import ConfigError

U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
U64_MIX2 = np.uint64(0x94D049BB133111EB)

# conservative ceiling for every scaled sum and cross-product
INT64_GUARD = 2**62

METHOD_CODES = {"profit": 0, "ratio": 1, "random": 2}

FAMILY_TRUNCATION = 0
FAMILY_MULTI_CRITERIA = 1


@kernel
def rng_next(state):
    # splitmix64: state is a 1-element uint64 array mutated in place
    state[0] = state[0] + U64_GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * U64_MIX2
    return z ^ (z >> np.uint64(31))


@kernel
def rng_below(state, n):
    # residue draw in [0, n); bias is at most n * 2**-64
    z = rng_next(state)
    return np.int64(z % np.uint64(n))


@kernel
def rng_chance(state, num, den):
    # true with probability num/den (same residue convention)
    z = rng_next(state)
    return (z % np.uint64(den)) < np.uint64(num)


@kernel
def _key_gt(kind, a, b, f, h1s, h2s, h3):
    """Strictly-greater on the stage key: 0 -> f, 1 -> h1, 2 -> h2."""
    if kind == 0:
        return f[a] > f[b]
    da = h3[a] if h3[a] > 0 else 1
    db = h3[b] if h3[b] > 0 else 1
    if kind == 1:
        return h1s[a] * db > h1s[b] * da
    return h2s[a] * db > h2s[b] * da


@kernel
def _stable_sort_desc(idx, m, kind, f, h1s, h2s, h3):
    """Stable insertion sort of idx[:m], descending on the stage key."""
    for i in range(1, m):
        x = idx[i]
        j = i
        while j > 0 and _key_gt(kind, x, idx[j - 1], f, h1s, h2s, h3):
            idx[j] = idx[j - 1]
            j -= 1
        idx[j] = x


@kernel
def ea_run_kernel(
    p,
    w,
    c,
    pranks,
    rranks,
    family,
    mix_codes,
    mix_cum,
    mix_den,
    cand_bits,
    cand_f,
    cand_w,
    cand_h1s,
    cand_h2s,
    cand_h3,
    best_f0,
    eval_count0,
    gens_budget,
    stop_f,
    state,
    imp_evals,
    imp_f,
    idx,
    sel,
    scr_bits,
    scr_f,
    scr_w,
    scr_h1s,
    scr_h2s,
    scr_h3,
):
    """Run up to gens_budget generations; see the module docstring.

    cand_* hold the population in rows 0..N-1 and the child scratch in
    row N.  Returns (gens_done, n_improvements, best_f, suspended).
    """
    n = p.shape[0]
    pop_n = cand_bits.shape[0] - 1
    best_f = best_f0
    eval_count = eval_count0
    n_imp = 0
    g = 0
    while g < gens_budget:
        if stop_f >= 0 and best_f >= stop_f:
            return g, n_imp, best_f, 0

        parent = rng_below(state, pop_n)

        # bitwise mutation into the child row; n draws in index order
        load = 0
        for i in range(n):
            b = cand_bits[parent, i]
            if rng_chance(state, 1, n):
                b = 1 - b
            cand_bits[pop_n, i] = b
            if b == 1:
                load += w[i]

        if load > c:
            if mix_codes.shape[0] > 1:
                r = rng_below(state, mix_den)
                method = mix_codes[0]
                for k in range(mix_codes.shape[0]):
                    if r < mix_cum[k]:
                        method = mix_codes[k]
                        break
            else:
                method = mix_codes[0]
            while load > c:
                victim = -1
                if method == 2:
                    cnt = 0
                    for i in range(n):
                        if cand_bits[pop_n, i] == 1:
                            cnt += 1
                    t = rng_below(state, cnt)
                    seen = 0
                    for i in range(n):
                        if cand_bits[pop_n, i] == 1:
                            if seen == t:
                                victim = i
                                break
                            seen += 1
                elif method == 0:
                    # smallest profit, ties to the highest index
                    for i in range(n):
                        if cand_bits[pop_n, i] == 1 and (
                            victim < 0 or p[i] <= p[victim]
                        ):
                            victim = i
                else:
                    # smallest ratio by cross-multiplication
                    for i in range(n):
                        if cand_bits[pop_n, i] == 1 and (
                            victim < 0 or p[i] * w[victim] <= p[victim] * w[i]
                        ):
                            victim = i
                cand_bits[pop_n, victim] = 0
                load -= w[victim]

        f_child = 0
        for i in range(n):
            if cand_bits[pop_n, i] == 1:
                f_child += p[i]
        cand_f[pop_n] = f_child
        cand_w[pop_n] = load
        eval_count += 1

        if family == 1:
            h1s = 0
            h2s = 0
            h3 = 0
            for i in range(n):
                if cand_bits[pop_n, i] == 1:
                    h1s += pranks[i]
                    h2s += rranks[i]
                    h3 += 1
            cand_h1s[pop_n] = h1s
            cand_h2s[pop_n] = h2s
            cand_h3[pop_n] = h3

            cap3 = pop_n // 3
            count = 0
            for stage in range(3):
                for k in range(pop_n + 1):
                    idx[k] = k
                # stage 0 sorts on f, stage 1 on h1, stage 2 on h2
                _stable_sort_desc(
                    idx, pop_n + 1, stage, cand_f, cand_h1s, cand_h2s, cand_h3
                )
                last = idx[0]
                sel[count] = last
                count += 1
                chain_len = 1
                for t in range(1, pop_n + 1):
                    if chain_len >= cap3:
                        break
                    i = idx[t]
                    if stage == 0:
                        keep = _key_gt(
                            1, i, last, cand_f, cand_h1s, cand_h2s, cand_h3
                        ) or _key_gt(2, i, last, cand_f, cand_h1s, cand_h2s, cand_h3)
                    else:
                        keep = cand_h3[i] > cand_h3[last]
                    if keep:
                        sel[count] = i
                        count += 1
                        chain_len += 1
                        last = i
            while count < pop_n:
                sel[count] = rng_below(state, pop_n + 1)
                count += 1

            for k in range(pop_n):
                src = sel[k]
                for i in range(n):
                    scr_bits[k, i] = cand_bits[src, i]
                scr_f[k] = cand_f[src]
                scr_w[k] = cand_w[src]
                scr_h1s[k] = cand_h1s[src]
                scr_h2s[k] = cand_h2s[src]
                scr_h3[k] = cand_h3[src]
            for k in range(pop_n):
                for i in range(n):
                    cand_bits[k, i] = scr_bits[k, i]
                cand_f[k] = scr_f[k]
                cand_w[k] = scr_w[k]
                cand_h1s[k] = scr_h1s[k]
                cand_h2s[k] = scr_h2s[k]
                cand_h3[k] = scr_h3[k]
        else:
            # truncation: evict the worst of the N+1; tie -> uniform draw
            worst = cand_f[0]
            m = 1
            for k in range(1, pop_n + 1):
                if cand_f[k] < worst:
                    worst = cand_f[k]
                    m = 1
                elif cand_f[k] == worst:
                    m += 1
            if m > 1:
                t = rng_below(state, m)
            else:
                t = 0
            victim = -1
            seen = 0
            for k in range(pop_n + 1):
                if cand_f[k] == worst:
                    if seen == t:
                        victim = k
                        break
                    seen += 1
            if victim != pop_n:
                # survivors keep their relative order: parents with the
                # victim removed, then the child in the last slot
                for k in range(victim, pop_n - 1):
                    for i in range(n):
                        cand_bits[k, i] = cand_bits[k + 1, i]
                    cand_f[k] = cand_f[k + 1]
                    cand_w[k] = cand_w[k + 1]
                for i in range(n):
                    cand_bits[pop_n - 1, i] = cand_bits[pop_n, i]
                cand_f[pop_n - 1] = f_child
                cand_w[pop_n - 1] = load

        if f_child > best_f:
            # a strictly better child always survives selection: it is
            # never the truncation victim and heads the f-stage chain
            best_f = f_child
            if n_imp < imp_evals.shape[0]:
                imp_evals[n_imp] = eval_count
                imp_f[n_imp] = f_child
                n_imp += 1
            else:
                return g + 1, n_imp, best_f, 1
        g += 1
    return g, n_imp, best_f, 0


@dataclass(frozen=True)
class CompiledInstance:
    """Integer-scaled instance data ready for the kernels."""

    n: int
    p: np.ndarray
    w: np.ndarray
    c: int
    profit_scale: int
    weight_scale: int
    pranks: np.ndarray
    rranks: np.ndarray


@lru_cache(maxsize=128)
def compile_instance(inst: KnapsackInstance) -> CompiledInstance:
    """Scale an instance to int64 arrays, guarding against overflow."""
    profit_scale = math.lcm(*(x.denominator for x in inst.profits))
    weight_scale = math.lcm(
        inst.capacity.denominator, *(x.denominator for x in inst.weights)
    )
    p = [int(x * profit_scale) for x in inst.profits]
    w = [int(x * weight_scale) for x in inst.weights]
    c = int(inst.capacity * weight_scale)
    if sum(p) >= INT64_GUARD or sum(w) >= INT64_GUARD or c >= INT64_GUARD:
        raise ConfigError(
            "scaled instance data is too large for the 64-bit engine; "
            "reduce the magnitude or the denominators of the inputs"
        )
    if max(p) * max(w) >= INT64_GUARD:
        raise ConfigError(
            "scaled profit*weight cross products would overflow the 64-bit engine"
        )
    return CompiledInstance(
        n=inst.n,
        p=np.array(p, dtype=np.int64),
        w=np.array(w, dtype=np.int64),
        c=c,
        profit_scale=profit_scale,
        weight_scale=weight_scale,
        pranks=np.array(profit_ranks(inst), dtype=np.int64),
        rranks=np.array(ratio_ranks(inst), dtype=np.int64),
    )
