"""The three (N+1) evolutionary algorithm loops with seeded tracing.

A run is deterministic given (instance, config): the SplitMix64 stream
is consumed in a fixed, documented order.  Initialization happens in
exact Python arithmetic; the generational loop runs in the integer
kernels (see kernels.py for the per-generation draw order).

Initialization draws, in population order:
  random init: n draws per individual (bit = draw mod 2, index order),
  then, exactly as for children, iff the bitstring is overweight, one
  mixture draw iff the repair mixture has more than one entry, plus one
  draw per eviction under random repair.  zero/seeded inits draw only
  for repairs (seeded bitstrings are repaired if overweight).

Whatever the family, best fitness is non-decreasing along a run: the
child replaces only a worst individual under truncation selection, and
the fitness-stage chain head always survives multi-criteria selection.
A run may be told to stop early once best fitness reaches `stop_value`;
with stop_value = OPT this is lossless (nothing after the stop could
change any reported quantity), which is how the experiment harness keeps
large batches fast without touching the statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import (
    Bitstring,
    KnapsackInstance,
    Rational,
    as_rational,
    is_feasible,
    ratio_ranks,
)
from .errors import ConfigError, ShapeError
from .kernels import (
    FAMILY_MULTI_CRITERIA,
    FAMILY_TRUNCATION,
    METHOD_CODES,
    compile_instance,
    ea_run_kernel,
)
from .operators import (
    Individual,
    RepairMixture,
    make_individual,
    repair,
)
from .rng import MASK64, SplitMix64

FAMILY_PURE = "pure"
FAMILY_MIXED = "mixed"
FAMILY_MOEA = "moea"
FAMILIES = (FAMILY_PURE, FAMILY_MIXED, FAMILY_MOEA)

INIT_RANDOM = "random"
INIT_ZERO = "zero"
INIT_FILE = "file"
INIT_BITS = "bits"

# starting size of the kernel's improvement log; the run loop grows it
# whenever a kernel invocation fills it up mid-run
IMPROVEMENT_LOG_START = 256


@dataclass(frozen=True)
class InitMode:
    """How the initial population is built."""

    kind: str
    path: Optional[str] = None
    bits: Optional[tuple[Bitstring, ...]] = None

    @classmethod
    def random(cls) -> "InitMode":
        return cls(kind=INIT_RANDOM)

    @classmethod
    def zero(cls) -> "InitMode":
        return cls(kind=INIT_ZERO)

    @classmethod
    def from_file(cls, path) -> "InitMode":
        return cls(kind=INIT_FILE, path=str(path))

    @classmethod
    def from_bitstrings(cls, bitstrings: Sequence[Bitstring]) -> "InitMode":
        return cls(kind=INIT_BITS, bits=tuple(bitstrings))


@dataclass(frozen=True)
class AlgorithmConfig:
    family: str
    repair: RepairMixture
    pop_size: int
    seed: int
    budget: int
    init: InitMode = field(default_factory=InitMode.random)
    stop_value: Optional[Rational] = None
    first_hit_thresholds: tuple[Rational, ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown algorithm family {self.family!r}")
        if self.pop_size < 1:
            raise ConfigError("population size must be >= 1")
        if self.family == FAMILY_MOEA and self.pop_size < 3:
            raise ConfigError("the multi-objective family needs pop_size >= 3")
        if self.budget < self.pop_size:
            raise ConfigError(
                "budget must cover initialization: budget >= pop_size"
            )
        if self.family == FAMILY_PURE and len(self.repair.entries) != 1:
            raise ConfigError("the pure family takes a single repair method")
        if self.family == FAMILY_MIXED and len(self.repair.entries) < 2:
            raise ConfigError("the mixed family needs at least two repair methods")
        object.__setattr__(self, "seed", self.seed & MASK64)
        if self.stop_value is not None:
            object.__setattr__(self, "stop_value", as_rational(self.stop_value))
        object.__setattr__(
            self,
            "first_hit_thresholds",
            tuple(as_rational(t) for t in self.first_hit_thresholds),
        )


@dataclass(frozen=True)
class RunTrace:
    """Compressed record of one run.

    improvement_points holds (eval_count, best_f) for the initial
    population and for every strict improvement; best_f between points
    is constant, so this is the whole best-fitness curve.  generations()
    expands it back to one record per evaluation step.
    """

    rng_seed: int
    family: str
    pop_size: int
    budget: int
    n_evals: int
    improvement_points: tuple[tuple[int, Rational], ...]
    final_best: Individual
    first_hits: tuple[tuple[Rational, Optional[int]], ...]

    @property
    def best_f(self) -> Rational:
        return self.improvement_points[-1][1]

    def best_f_at(self, eval_count: int) -> Rational:
        """Best fitness after `eval_count` evaluations (>= pop_size)."""
        if eval_count < self.improvement_points[0][0]:
            raise ShapeError("best fitness is undefined before initialization")
        current = self.improvement_points[0][1]
        for at, value in self.improvement_points:
            if at > eval_count:
                break
            current = value
        return current

    def generations(self) -> Iterator[tuple[int, Rational]]:
        """(eval_count, best_f) for init and every executed generation."""
        k = 0
        points = self.improvement_points
        current = points[0][1]
        for eval_count in range(points[0][0], self.n_evals + 1):
            while k < len(points) and points[k][0] <= eval_count:
                current = points[k][1]
                k += 1
            yield eval_count, current

    def first_hit(self, threshold: Rational) -> Optional[int]:
        threshold = as_rational(threshold)
        for t, hit in self.first_hits:
            if t == threshold:
                return hit
        raise KeyError(f"threshold {threshold} was not recorded for this run")


def _initial_genomes(
    inst: KnapsackInstance, cfg: AlgorithmConfig, rng: SplitMix64
) -> list[Bitstring]:
    n = inst.n
    seeds: Optional[list[Bitstring]] = None
    if cfg.init.kind in (INIT_FILE, INIT_BITS):
        if cfg.init.kind == INIT_FILE:
            lines = [
                ln.strip()
                for ln in Path(cfg.init.path).read_text().splitlines()
                if ln.strip() and not ln.strip().startswith("#")
            ]
            seeds = [Bitstring.from_text(ln) for ln in lines]
        else:
            seeds = list(cfg.init.bits or ())
        if len(seeds) == 1:
            seeds = seeds * cfg.pop_size
        if len(seeds) != cfg.pop_size:
            raise ShapeError(
                f"seeded init needs 1 or pop_size={cfg.pop_size} bitstrings, "
                f"got {len(seeds)}"
            )
        for s in seeds:
            if len(s) != n:
                raise ShapeError(
                    f"seeded bitstring length {len(s)} does not match n={n}"
                )
    out = []
    # each individual finishes its bit draws and its repair draws before
    # the next individual starts; this interleaving is part of the
    # seeded-stream contract
    for j in range(cfg.pop_size):
        if cfg.init.kind == INIT_ZERO:
            genome = Bitstring.zeros(n)
        elif cfg.init.kind == INIT_RANDOM:
            genome = Bitstring(tuple(rng.randrange(2) for _ in range(n)))
        else:
            genome = seeds[j]
        if not is_feasible(inst, genome):
            method = cfg.repair.draw(rng)
            genome = repair(inst, genome, method, rng)
        out.append(genome)
    return out


def run(inst: KnapsackInstance, cfg: AlgorithmConfig) -> RunTrace:
    """Execute one seeded run and return its trace."""
    comp = compile_instance(inst)
    n = comp.n
    pop_n = cfg.pop_size
    rng = SplitMix64(cfg.seed)

    genomes = _initial_genomes(inst, cfg, rng)

    # population arrays; row pop_n is the child scratch slot
    cand_bits = np.zeros((pop_n + 1, n), dtype=np.uint8)
    cand_f = np.zeros(pop_n + 1, dtype=np.int64)
    cand_w = np.zeros(pop_n + 1, dtype=np.int64)
    cand_h1s = np.zeros(pop_n + 1, dtype=np.int64)
    cand_h2s = np.zeros(pop_n + 1, dtype=np.int64)
    cand_h3 = np.zeros(pop_n + 1, dtype=np.int64)
    for k, genome in enumerate(genomes):
        row = np.array(genome.bits, dtype=np.uint8)
        cand_bits[k, :] = row
        packed = row == 1
        cand_f[k] = int(comp.p[packed].sum())
        cand_w[k] = int(comp.w[packed].sum())
        cand_h1s[k] = int(comp.pranks[packed].sum())
        cand_h2s[k] = int(comp.rranks[packed].sum())
        cand_h3[k] = int(packed.sum())

    family_code = (
        FAMILY_MULTI_CRITERIA if cfg.family == FAMILY_MOEA else FAMILY_TRUNCATION
    )
    mix_codes = np.array(
        [METHOD_CODES[m] for m, _ in cfg.repair.entries], dtype=np.int64
    )
    mix_cum = np.array(cfg.repair.cumulative_numerators(), dtype=np.int64)
    mix_den = cfg.repair.common_denominator

    if family_code == FAMILY_MULTI_CRITERIA:
        idx = np.zeros(pop_n + 1, dtype=np.int64)
        sel = np.zeros(pop_n, dtype=np.int64)
        scr_bits = np.zeros((pop_n, n), dtype=np.uint8)
        scr_f = np.zeros(pop_n, dtype=np.int64)
        scr_w = np.zeros(pop_n, dtype=np.int64)
        scr_h1s = np.zeros(pop_n, dtype=np.int64)
        scr_h2s = np.zeros(pop_n, dtype=np.int64)
        scr_h3 = np.zeros(pop_n, dtype=np.int64)
    else:
        idx = np.zeros(1, dtype=np.int64)
        sel = np.zeros(1, dtype=np.int64)
        scr_bits = np.zeros((1, 1), dtype=np.uint8)
        scr_f = np.zeros(1, dtype=np.int64)
        scr_w = np.zeros(1, dtype=np.int64)
        scr_h1s = np.zeros(1, dtype=np.int64)
        scr_h2s = np.zeros(1, dtype=np.int64)
        scr_h3 = np.zeros(1, dtype=np.int64)

    best_scaled = int(cand_f[:pop_n].max())
    eval_count = pop_n
    points_scaled: list[tuple[int, int]] = [(eval_count, best_scaled)]

    if cfg.stop_value is not None:
        stop_frac = as_rational(cfg.stop_value) * comp.profit_scale
        # the engine compares scaled integers; round the threshold up so
        # crossing it in exact arithmetic and in scaled arithmetic agree
        stop_f = -(-stop_frac.numerator // stop_frac.denominator)
    else:
        stop_f = -1

    state = np.array([rng.state], dtype=np.uint64)
    gens_left = cfg.budget - pop_n
    imp_cap = IMPROVEMENT_LOG_START
    while gens_left > 0:
        if stop_f >= 0 and best_scaled >= stop_f:
            break
        imp_evals = np.zeros(imp_cap, dtype=np.int64)
        imp_f = np.zeros(imp_cap, dtype=np.int64)
        gens_done, n_imp, best_scaled, suspended = ea_run_kernel(
            comp.p,
            comp.w,
            np.int64(comp.c),
            comp.pranks,
            comp.rranks,
            np.int64(family_code),
            mix_codes,
            mix_cum,
            np.int64(mix_den),
            cand_bits,
            cand_f,
            cand_w,
            cand_h1s,
            cand_h2s,
            cand_h3,
            np.int64(best_scaled),
            np.int64(eval_count),
            np.int64(gens_left),
            np.int64(stop_f),
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
        )
        gens_done = int(gens_done)
        n_imp = int(n_imp)
        best_scaled = int(best_scaled)
        for k in range(n_imp):
            points_scaled.append((int(imp_evals[k]), int(imp_f[k])))
        eval_count += gens_done
        gens_left -= gens_done
        if suspended:
            # the improvement log filled up mid-run; the overflowing
            # point is carried in the return values
            points_scaled.append((eval_count, best_scaled))
            imp_cap *= 4
            continue
        break

    scale = comp.profit_scale
    points = tuple((at, Fraction(val, scale)) for at, val in points_scaled)

    pop_best = int(np.argmax(cand_f[:pop_n]))
    final_best = make_individual(
        inst, Bitstring(tuple(int(b) for b in cand_bits[pop_best]))
    )

    first_hits = []
    for threshold in cfg.first_hit_thresholds:
        hit = None
        for at, value in points:
            if value >= threshold:
                hit = at
                break
        first_hits.append((threshold, hit))

    return RunTrace(
        rng_seed=cfg.seed,
        family=cfg.family,
        pop_size=pop_n,
        budget=cfg.budget,
        n_evals=eval_count,
        improvement_points=points,
        final_best=final_best,
        first_hits=tuple(first_hits),
    )


def drift_distance(inst: KnapsackInstance, pop: Sequence[Individual]) -> Rational:
    """min over the population of h2(reference) - h2(x).

    The reference point is the singleton knapsack of the best-ratio item
    (ties broken by lowest index); its h2 is the top ratio rank.  This
    is a diagnostic for watching a run climb toward the ratio-greedy
    fill; selection never sees it.
    """
    if not pop:
        raise ShapeError("drift distance needs a non-empty population")
    rr = ratio_ranks(inst)
    reference = Fraction(max(rr))
    best = None
    for ind in pop:
        d = reference - ind.h2
        if best is None or d < best:
            best = d
    return best
