"""Exact representation and evaluation of 0-1 knapsack instances.

All profits, weights, and capacities are ``fractions.Fraction`` values.
Exactness is not cosmetic: the adversarial instances carry weights such
as ``1/(a*n)`` whose feasibility boundary must be decided without any
rounding, so nothing in this module (or anywhere downstream) ever touches
floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import FeasibilityError, ShapeError

# The one rational number type used throughout the package.  Fraction
# already guarantees lowest terms and a positive denominator.
Rational = Fraction

RationalLike = Union[Rational, int, str]


def as_rational(value: RationalLike) -> Rational:
    """Coerce an int, ``"num/den"`` string, or Fraction to a Fraction.

    Floats are rejected on purpose; they have no business near the
    feasibility boundary.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected int, Fraction or 'num/den' string, got {type(value).__name__}")


def format_rational(value: Rational) -> str:
    """Serialize as ``"num/den"``, or just ``"num"`` for integers."""
    return str(value)


@dataclass(frozen=True)
class Bitstring:
    """Candidate solution: a fixed-length vector over {0, 1}."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ShapeError("bitstring entries must be 0 or 1")

    @classmethod
    def from_text(cls, text: str) -> "Bitstring":
        text = text.strip()
        if not text or any(c not in "01" for c in text):
            raise ShapeError(f"not a bitstring: {text!r}")
        return cls(tuple(int(c) for c in text))

    @classmethod
    def zeros(cls, n: int) -> "Bitstring":
        return cls((0,) * n)

    @classmethod
    def ones(cls, n: int) -> "Bitstring":
        return cls((1,) * n)

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "Bitstring":
        bits = [0] * n
        for i in indices:
            bits[i] = 1
        return cls(tuple(bits))

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    def ones_count(self) -> int:
        return sum(self.bits)

    def packed_indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def with_flipped(self, index: int) -> "Bitstring":
        bits = list(self.bits)
        bits[index] ^= 1
        return Bitstring(tuple(bits))


@dataclass(frozen=True)
class KnapsackInstance:
    """A 0-1 knapsack instance with exact rational data.

    Items with weight above the capacity are allowed (they can simply
    never be packed); weight exactly equal to the capacity is feasible
    on its own.
    """

    profits: tuple[Rational, ...]
    weights: tuple[Rational, ...]
    capacity: Rational

    def __post_init__(self):
        object.__setattr__(self, "profits", tuple(as_rational(p) for p in self.profits))
        object.__setattr__(self, "weights", tuple(as_rational(w) for w in self.weights))
        object.__setattr__(self, "capacity", as_rational(self.capacity))
        if len(self.profits) != len(self.weights):
            raise ShapeError("profits and weights must have the same length")
        if len(self.profits) < 1:
            raise ShapeError("an instance needs at least one item")
        if any(p <= 0 for p in self.profits):
            raise ShapeError("all profits must be positive")
        if any(w <= 0 for w in self.weights):
            raise ShapeError("all weights must be positive")
        if self.capacity <= 0:
            raise ShapeError("capacity must be positive")

    @classmethod
    def of(
        cls,
        profits: Sequence[RationalLike],
        weights: Sequence[RationalLike],
        capacity: RationalLike,
    ) -> "KnapsackInstance":
        return cls(tuple(profits), tuple(weights), capacity)  # type: ignore[arg-type]

    @property
    def n(self) -> int:
        return len(self.profits)

    def ratios(self) -> tuple[Rational, ...]:
        return tuple(p / w for p, w in zip(self.profits, self.weights))


def _check_length(inst: KnapsackInstance, x: Bitstring) -> None:
    if len(x) != inst.n:
        raise ShapeError(f"bitstring length {len(x)} does not match instance size {inst.n}")


def total_weight(inst: KnapsackInstance, x: Bitstring) -> Rational:
    """Exact total weight of the packed items."""
    _check_length(inst, x)
    return sum((w for w, b in zip(inst.weights, x.bits) if b), Fraction(0))


def is_feasible(inst: KnapsackInstance, x: Bitstring) -> bool:
    """True iff the packed weight does not exceed the capacity."""
    return total_weight(inst, x) <= inst.capacity


def fitness(inst: KnapsackInstance, x: Bitstring) -> Rational:
    """Exact total profit of a feasible solution.

    Raises FeasibilityError on infeasible input: callers are expected to
    repair first, never to score an overweight knapsack.
    """
    _check_length(inst, x)
    if not is_feasible(inst, x):
        raise FeasibilityError("fitness of an infeasible solution is undefined; repair first")
    return sum((p for p, b in zip(inst.profits, x.bits) if b), Fraction(0))


def dense_ranks(values: Sequence[Rational]) -> tuple[int, ...]:
    """Dense ranking: the k-th smallest distinct value gets rank k.

    Tied values share a rank and ranks of distinct values are consecutive,
    so the maximum rank equals the number of distinct values.
    """
    distinct = sorted(set(values))
    rank_of = {v: k for k, v in enumerate(distinct, start=1)}
    return tuple(rank_of[v] for v in values)


def profit_ranks(inst: KnapsackInstance) -> tuple[int, ...]:
    """Dense ranks of the item profits (rank 1 = smallest profit)."""
    return dense_ranks(inst.profits)


def ratio_ranks(inst: KnapsackInstance) -> tuple[int, ...]:
    """Dense ranks of the profit-to-weight ratios, compared exactly."""
    return dense_ranks(inst.ratios())


# ---------------------------------------------------------------------------
# Instance file format (the single canonical serialization used by the CLI):
#   line 1: n
#   line 2: capacity
#   then n lines: "<profit> <weight>"
# Tokens are integers or "num/den" fractions; lines whose first non-blank
# character is '#' are comments.
# ---------------------------------------------------------------------------


def dumps_instance(inst: KnapsackInstance) -> str:
    lines = [str(inst.n), format_rational(inst.capacity)]
    for p, w in zip(inst.profits, inst.weights):
        lines.append(f"{format_rational(p)} {format_rational(w)}")
    return "\n".join(lines) + "\n"


def loads_instance(text: str) -> KnapsackInstance:
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rows.append(line.split())
    if len(rows) < 2:
        raise ShapeError("instance file needs an item count line and a capacity line")
    if len(rows[0]) != 1:
        raise ShapeError("first data line must hold the item count only")
    try:
        n = int(rows[0][0])
    except ValueError as exc:
        raise ShapeError(f"bad item count: {rows[0][0]!r}") from exc
    if len(rows) != 2 + n:
        raise ShapeError(f"expected {n} item lines, found {len(rows) - 2}")
    if len(rows[1]) != 1:
        raise ShapeError("capacity line must hold a single value")
    capacity = as_rational(rows[1][0])
    profits, weights = [], []
    for row in rows[2:]:
        if len(row) != 2:
            raise ShapeError(f"item line must be '<profit> <weight>', got {' '.join(row)!r}")
        profits.append(as_rational(row[0]))
        weights.append(as_rational(row[1]))
    return KnapsackInstance.of(profits, weights, capacity)


def save_instance(inst: KnapsackInstance, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_instance(inst))


def load_instance(path: Union[str, Path]) -> KnapsackInstance:
    return loads_instance(Path(path).read_text())
