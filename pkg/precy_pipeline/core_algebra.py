"""
Exact scalars, graded signs, linear combinations and sparse exact linear algebra.

Everything downstream works over the rationals (``fractions.Fraction``); no
floating point is used anywhere in the package.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import (
    Any, Callable, Dict, Generic, Hashable, Iterable, Iterator, List, Mapping,
    Optional, Sequence, Tuple, TypeVar, Union,
)

from precy_pipeline.logger import (
    InconsistentSystem, ValidationError, log_function_calls, record_stats,
)

logger = logging.getLogger(__name__)

Scalar = Fraction
B = TypeVar("B", bound=Hashable)
ScalarLike = Union[int, Fraction, str]


def to_scalar(value: ScalarLike) -> Fraction:
    """Parses ints, Fractions and "p/q" strings into a reduced Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"not a scalar: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValidationError(f"bad rational {value!r}: {e}") from e
    raise ValidationError(f"not a scalar: {value!r}")


def scalar_str(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class LinComb(Generic[B]):
    """Finite linear combination of basis elements with no stored zeros."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[B, ScalarLike]] = None) -> None:
        clean: Dict[B, Fraction] = {}
        if terms:
            for b, c in terms.items():
                c = to_scalar(c)
                if c:
                    clean[b] = c
        self._terms = clean

    @classmethod
    def basis(cls, b: B, coeff: ScalarLike = 1) -> "LinComb[B]":
        return cls({b: coeff})

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[B, ScalarLike]]) -> "LinComb[B]":
        acc: Dict[B, Fraction] = {}
        for b, c in pairs:
            accumulate(acc, b, to_scalar(c))
        return cls._wrap(acc)

    @classmethod
    def _wrap(cls, acc: Dict[B, Fraction]) -> "LinComb[B]":
        out: LinComb[B] = cls()
        out._terms = {b: c for b, c in acc.items() if c}
        return out

    def items(self) -> Iterator[Tuple[B, Fraction]]:
        return iter(self._terms.items())

    def keys(self) -> Iterator[B]:
        return iter(self._terms.keys())

    def coeff(self, b: B) -> Fraction:
        return self._terms.get(b, Fraction(0))

    def to_dict(self) -> Dict[B, Fraction]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __add__(self, other: "LinComb[B]") -> "LinComb[B]":
        acc = dict(self._terms)
        for b, c in other._terms.items():
            accumulate(acc, b, c)
        return LinComb._wrap(acc)

    def __sub__(self, other: "LinComb[B]") -> "LinComb[B]":
        return self + other * -1

    def __neg__(self) -> "LinComb[B]":
        return self * -1

    def __mul__(self, scalar: ScalarLike) -> "LinComb[B]":
        s = to_scalar(scalar)
        if not s:
            return LinComb()
        return LinComb._wrap({b: c * s for b, c in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int) and other == 0:
            return not self._terms
        if not isinstance(other, LinComb):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def apply(self, f: Callable[[B], "LinComb[Any]"]) -> "LinComb[Any]":
        """Extends ``f`` linearly."""
        acc: Dict[Any, Fraction] = {}
        for b, c in self._terms.items():
            for b2, c2 in f(b).items():
                accumulate(acc, b2, c * c2)
        return LinComb._wrap(acc)

    def sorted_items(self) -> List[Tuple[B, Fraction]]:
        return sorted(self._terms.items(), key=lambda bc: str(bc[0]))

    def __repr__(self) -> str:
        if not self._terms:
            return "0"
        parts = [f"{scalar_str(c)}*{b}" for b, c in self.sorted_items()]
        return " + ".join(parts)


def accumulate(acc: Dict[Any, Fraction], key: Any, value: Fraction) -> None:
    """acc[key] += value, deleting the key when it cancels."""
    if not value:
        return
    new = acc.get(key, Fraction(0)) + value
    if new:
        acc[key] = new
    else:
        acc.pop(key, None)


def lin_sum(parts: Iterable[LinComb[B]]) -> LinComb[B]:
    acc: Dict[B, Fraction] = {}
    for part in parts:
        for b, c in part.items():
            accumulate(acc, b, c)
    return LinComb._wrap(acc)


# ---------------------------------------------------------------------------
# Signs
# ---------------------------------------------------------------------------

def koszul_sign(order: Sequence[int], degrees: Sequence[int]) -> int:
    """
    Sign of reordering graded elements.

    ``order[k]`` is the original index of the element placed at position k,
    ``degrees[i]`` the degree of original element i. Returns the product of
    (-1)^(deg a * deg b) over inverted pairs.
    """
    if len(order) != len(degrees) or sorted(order) != list(range(len(degrees))):
        raise ValidationError("koszul_sign: order is not a permutation of the degrees")
    parity = 0
    odd_to_the_right = []
    for idx in reversed(order):
        if degrees[idx] % 2:
            # odd elements already placed after idx but originally before it
            parity += sum(1 for j in odd_to_the_right if j < idx)
            odd_to_the_right.append(idx)
    return -1 if parity % 2 else 1


@dataclass(frozen=True)
class OrientationWord:
    """Ordered edge/vertex symbols of a d-orientation with an overall sign."""

    symbols: Tuple[str, ...]
    kinds: Tuple[str, ...]
    sign: int = 1

    def __post_init__(self) -> None:
        if len(self.symbols) != len(self.kinds):
            raise ValidationError("orientation word: symbols and kinds differ in length")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValidationError("orientation word: repeated symbol")
        if any(k not in ("edge", "vertex") for k in self.kinds):
            raise ValidationError("orientation word: kind must be 'edge' or 'vertex'")

    def weight(self, position: int, d: int) -> int:
        return d - 1 if self.kinds[position] == "edge" else d


def reorder_orientation(word: OrientationWord, target: OrientationWord, d: int) -> int:
    """
    Sign relating two orientation words on the same symbols.

    Edges weigh d-1 and vertices weigh d. The returned sign s satisfies
    word = s * target as orientations (stored signs included).
    """
    if sorted(word.symbols) != sorted(target.symbols):
        raise ValidationError("reorder_orientation: symbol sets differ")
    index = {s: i for i, s in enumerate(word.symbols)}
    order = [index[s] for s in target.symbols]
    degrees = [word.weight(i, d) for i in range(len(word.symbols))]
    return koszul_sign(order, degrees) * word.sign * target.sign


# ---------------------------------------------------------------------------
# Sparse exact linear algebra
# ---------------------------------------------------------------------------

_RHS = ("__rhs__",)
Row = Dict[Hashable, Fraction]


class _Eliminator:
    """Incremental Gaussian elimination over the rationals."""

    def __init__(self, column_key: Callable[[Hashable], Any] = str) -> None:
        self.pivots: Dict[Hashable, Row] = {}
        self.created: Dict[Hashable, int] = {}
        self.column_key = column_key

    def reduce(self, row: Row) -> Row:
        row = {c: v for c, v in row.items() if v}
        while True:
            hits = [c for c in row if c in self.pivots]
            if not hits:
                return row
            col = min(hits, key=lambda c: self.created[c])
            factor = row[col]
            for c, v in self.pivots[col].items():
                accumulate(row, c, -factor * v)

    def add(self, row: Row) -> Optional[Hashable]:
        """Adds a row; returns the new pivot column or None if dependent."""
        reduced = self.reduce(row)
        candidates = [c for c in reduced if c != _RHS]
        if not candidates:
            if reduced.get(_RHS):
                raise InconsistentSystem("row reduces to 0 = nonzero")
            return None
        col = min(candidates, key=self.column_key)
        inv = 1 / reduced[col]
        self.pivots[col] = {c: v * inv for c, v in reduced.items()}
        self.created[col] = len(self.created)
        return col


@log_function_calls(category="LINALG")
def sparse_rank(rows: Iterable[Mapping[Hashable, ScalarLike]]) -> int:
    """Exact rank of a matrix given as an iterable of sparse rows."""
    elim = _Eliminator()
    rank = 0
    for row in rows:
        if elim.add({c: to_scalar(v) for c, v in row.items()}) is not None:
            rank += 1
    record_stats("rank_calls")
    return rank


@log_function_calls(category="LINALG")
def solve(rows: Sequence[Mapping[Hashable, ScalarLike]],
          rhs: Sequence[ScalarLike]) -> Optional[Dict[Hashable, Fraction]]:
    """
    Particular solution of M x = rhs, free variables set to 0.

    ``rows[i]`` holds the sparse coefficients of equation i. Returns None when
    the system is inconsistent.
    """
    if len(rows) != len(rhs):
        raise ValidationError("solve: number of rows and right-hand sides differ")
    elim = _Eliminator()
    try:
        for row, value in zip(rows, rhs):
            augmented: Row = {c: to_scalar(v) for c, v in row.items()}
            b = to_scalar(value)
            if b:
                augmented[_RHS] = b
            elim.add(augmented)
    except InconsistentSystem:
        return None
    record_stats("solve_calls")
    solution: Dict[Hashable, Fraction] = {}
    for col in sorted(elim.pivots, key=lambda c: elim.created[c], reverse=True):
        pivot_row = elim.pivots[col]
        value = pivot_row.get(_RHS, Fraction(0))
        for c, v in pivot_row.items():
            if c != col and c != _RHS:
                value -= v * solution.get(c, Fraction(0))
        if value:
            solution[col] = value
    return solution


def solve_or_raise(rows: Sequence[Mapping[Hashable, ScalarLike]],
                   rhs: Sequence[ScalarLike]) -> Dict[Hashable, Fraction]:
    solution = solve(rows, rhs)
    if solution is None:
        raise InconsistentSystem(f"no solution for a {len(rows)}-equation system")
    return solution


def solve_linear_map(
    unknowns: Sequence[B],
    image: Callable[[B], LinComb[Any]],
    target: LinComb[Any],
) -> Optional[LinComb[B]]:
    """
    Finds x in the span of ``unknowns`` with image(x) == target.

    The map is given on basis elements; equations are indexed by the basis
    of the codomain.
    """
    columns: Dict[Any, Dict[Hashable, Fraction]] = {}
    for u in unknowns:
        for out, c in image(u).items():
            columns.setdefault(out, {})[u] = c
    for out, _ in target.items():
        columns.setdefault(out, {})
    keys = sorted(columns, key=str)
    rows = [columns[k] for k in keys]
    rhs = [target.coeff(k) for k in keys]
    solution = solve(rows, rhs)
    if solution is None:
        return None
    return LinComb({u: c for u, c in solution.items()})
