"""
Path dg category of an ordered simplicial complex.

Morphisms are necklaces: composable words of simplices (v0...vn), of degree
1 - n, and formal inverses of 1-simplices, of degree 0. Composition is written
left to right, so ``01*12`` is the path 0 -> 1 -> 2. Adjacent pairs
``s * s^-1`` and ``s^-1 * s`` cancel.
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from precy_pipeline.core_algebra import LinComb, accumulate
from precy_pipeline.logger import ValidationError, log_function_calls, record_stats
from precy_pipeline.simplicial import OrderedComplex, Simplex, simplex_key

logger = logging.getLogger(__name__)

COUNTER_CLOCKWISE = "counter-clockwise"
CLOCKWISE = "clockwise"
IDENTITY = "identity"


@dataclass(frozen=True)
class Bead:
    simplex: Simplex
    inverse: bool = False

    def __post_init__(self) -> None:
        if self.simplex.dim < 1:
            raise ValidationError("beads need dimension >= 1")
        if self.inverse and self.simplex.dim != 1:
            raise ValidationError("only 1-simplices have formal inverses")

    @property
    def source(self) -> int:
        v = self.simplex.vertices
        return v[-1] if self.inverse else v[0]

    @property
    def target(self) -> int:
        v = self.simplex.vertices
        return v[0] if self.inverse else v[-1]

    @property
    def degree(self) -> int:
        return 0 if self.inverse else 1 - self.simplex.dim

    def inverted(self) -> "Bead":
        return Bead(self.simplex, not self.inverse)

    def __str__(self) -> str:
        verts = self.simplex.vertices[::-1] if self.inverse else self.simplex.vertices
        body = "".join(map(str, verts)) if all(0 <= v < 10 for v in verts) else ".".join(map(str, verts))
        return body + (f"_{self.simplex.tag}" if self.simplex.tag else "")


def simplex_bead(*vertices: int, tag: Optional[str] = None) -> Bead:
    return Bead(Simplex(tuple(vertices), tag))


@dataclass(frozen=True)
class Necklace:
    """Normal-form morphism; an empty bead tuple is the identity of ``source``."""

    source: int
    target: int
    beads: Tuple[Bead, ...] = ()

    @property
    def is_identity(self) -> bool:
        return not self.beads

    @property
    def degree(self) -> int:
        return sum(b.degree for b in self.beads)

    def __str__(self) -> str:
        if not self.beads:
            return f"e{self.source}"
        return "*".join(str(b) for b in self.beads)

    def __repr__(self) -> str:
        return str(self)

    def sort_key(self) -> Tuple[int, str]:
        return (len(self.beads), str(self))


def identity(obj: int) -> Necklace:
    return Necklace(obj, obj)


def reduce_word(beads: Sequence[Bead]) -> Tuple[Bead, ...]:
    """Cancels adjacent inverse pairs; the stack reduction is confluent."""
    stack: List[Bead] = []
    for b in beads:
        if stack and stack[-1].inverse != b.inverse and stack[-1].simplex == b.simplex:
            stack.pop()
        else:
            stack.append(b)
    return tuple(stack)


def make_necklace(beads: Sequence[Bead], source: Optional[int] = None) -> Necklace:
    """Builds the normal form of a composable word of beads."""
    for a, b in zip(beads, beads[1:]):
        if a.target != b.source:
            raise ValidationError(f"beads {a} and {b} are not composable")
    if not beads:
        if source is None:
            raise ValidationError("empty word needs an object")
        return identity(source)
    reduced = reduce_word(beads)
    return Necklace(beads[0].source, beads[-1].target, reduced)


def compose_necklaces(x: Necklace, y: Necklace) -> Necklace:
    if x.target != y.source:
        raise ValidationError(f"cannot compose {x} ({x.source}->{x.target}) with {y} ({y.source}->{y.target})")
    if not x.beads:
        return y
    if not y.beads:
        return x
    return Necklace(x.source, y.target, reduce_word(x.beads + y.beads))


def compose(x: LinComb[Necklace], y: LinComb[Necklace]) -> LinComb[Necklace]:
    """Bilinear composition of morphism elements."""
    acc: Dict[Necklace, Fraction] = {}
    for a, ca in x.items():
        for b, cb in y.items():
            accumulate(acc, compose_necklaces(a, b), ca * cb)
    return LinComb(acc)


_TOKEN = re.compile(r"^(\d+)(?:_(\w+))?$")


def parse_bead(token: str) -> Bead:
    m = _TOKEN.match(token.strip())
    if not m:
        raise ValidationError(f"bad bead token {token!r}")
    verts = tuple(int(ch) for ch in m.group(1))
    tag = m.group(2)
    if len(verts) == 2 and verts[0] > verts[1]:
        return Bead(Simplex((verts[1], verts[0]), tag), inverse=True)
    if any(a >= b for a, b in zip(verts, verts[1:])) or len(verts) < 2:
        raise ValidationError(f"bead {token!r} is neither a simplex nor an inverse edge")
    return Bead(Simplex(verts, tag))


def parse_necklace(text: str) -> Necklace:
    """Parses the shorthand ``01*12*20``; ``e0`` is the identity at 0."""
    text = text.strip()
    if text.startswith("e") and text[1:].isdigit():
        return identity(int(text[1:]))
    return make_necklace([parse_bead(t) for t in text.split("*")])


def nk(text: str) -> LinComb[Necklace]:
    """Morphism element with a single necklace, from shorthand."""
    return LinComb.basis(parse_necklace(text))


def bead_differential(bead: Bead) -> List[Tuple[Tuple[Bead, ...], int]]:
    """d(v0..vn) = sum_{i=1}^{n-1} (-1)^i (face_i - (v0..vi)*(vi..vn))."""
    n = bead.simplex.dim
    if bead.inverse or n < 2:
        return []
    v = bead.simplex.vertices
    terms: List[Tuple[Tuple[Bead, ...], int]] = []
    for i in range(1, n):
        sign = -1 if i % 2 else 1
        terms.append(((Bead(Simplex(v[:i] + v[i + 1:])),), sign))
        terms.append(((Bead(Simplex(v[:i + 1])), Bead(Simplex(v[i:]))), -sign))
    return terms


def necklace_differential(x: Necklace) -> LinComb[Necklace]:
    """Leibniz rule: d(ab) = da*b + (-1)^|a| a*db."""
    acc: Dict[Necklace, Fraction] = {}
    prefix_degree = 0
    for k, bead in enumerate(x.beads):
        sign = -1 if prefix_degree % 2 else 1
        for replacement, s in bead_differential(bead):
            word = x.beads[:k] + replacement + x.beads[k + 1:]
            accumulate(acc, make_necklace(word), Fraction(sign * s))
        prefix_degree += bead.degree
    return LinComb(acc)


def differential(x: LinComb[Necklace]) -> LinComb[Necklace]:
    return x.apply(necklace_differential)


class PathCategory:
    """Objects, beads and bounded bases of the path dg category of a complex."""

    def __init__(self, complex_: OrderedComplex) -> None:
        self.complex = complex_
        beads: List[Bead] = []
        for s in sorted(complex_.simplices, key=simplex_key):
            beads.append(Bead(s))
            if s.dim == 1:
                beads.append(Bead(s, inverse=True))
        self.beads = beads
        self._by_source: Dict[int, List[Bead]] = {}
        for b in beads:
            self._by_source.setdefault(b.source, []).append(b)
        self._cache: Dict[Tuple[int, int, Optional[int], int], List[Necklace]] = {}

    @property
    def objects(self) -> Tuple[int, ...]:
        return self.complex.vertices

    def words_from(self, s: int, size_bound: int) -> Iterable[Necklace]:
        """All reduced necklaces out of ``s`` with at most ``size_bound`` beads."""
        yield identity(s)
        stack: List[Tuple[Bead, ...]] = [(b,) for b in reversed(self._by_source.get(s, []))]
        while stack:
            word = stack.pop()
            yield Necklace(s, word[-1].target, word)
            if len(word) >= size_bound:
                continue
            last = word[-1]
            for b in reversed(self._by_source.get(last.target, [])):
                if b.simplex == last.simplex and b.inverse != last.inverse:
                    continue
                stack.append(word + (b,))

    @log_function_calls(category="PATHCAT")
    def enumerate_basis(self, s: int, t: int, degree: Optional[int], size_bound: int) -> List[Necklace]:
        """Normal-form necklaces s -> t of the given degree (None: any) within the bound."""
        if size_bound < 0:
            raise ValidationError("size_bound must be >= 0")
        key = (s, t, degree, size_bound)
        if key not in self._cache:
            found = [
                n for n in self.words_from(s, size_bound)
                if n.target == t and (degree is None or n.degree == degree)
            ]
            self._cache[key] = sorted(found, key=Necklace.sort_key)
            record_stats("necklaces_enumerated", len(found))
        return list(self._cache[key])

    def all_morphisms(self, size_bound: int, degree: Optional[int] = None) -> List[Necklace]:
        out: List[Necklace] = []
        for s in self.objects:
            for t in self.objects:
                out.extend(self.enumerate_basis(s, t, degree, size_bound))
        return out


def is_triangle_boundary(K: OrderedComplex) -> bool:
    edges = {s.vertices for s in K.simplices}
    return K.vertices == (0, 1, 2) and edges == {(0, 1), (1, 2), (0, 2)} and all(
        s.tag is None for s in K.simplices)


def winding(P: Necklace) -> int:
    """Signed number of counter-clockwise steps around 0 -> 1 -> 2 -> 0."""
    total = 0
    for b in P.beads:
        step = -1 if b.simplex.vertices == (0, 2) else 1
        total += -step if b.inverse else step
    return total


def classify_orientation(P: Necklace, K: Optional[OrderedComplex] = None) -> str:
    if K is not None and not is_triangle_boundary(K):
        raise ValidationError("orientation classes are defined on the triangle boundary only")
    if any(b.simplex.dim != 1 or b.simplex.vertices not in ((0, 1), (1, 2), (0, 2)) for b in P.beads):
        raise ValidationError(f"{P} is not a path on the triangle boundary")
    w = winding(P)
    if w > 0:
        return COUNTER_CLOCKWISE
    if w < 0:
        return CLOCKWISE
    return IDENTITY
