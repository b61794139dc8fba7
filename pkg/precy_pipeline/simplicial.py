"""
Ordered simplicial complexes, simplicial chains and their JSON format.

Schema::

    {"vertices": [0, 1, 2],
     "simplices": [[0, 1], [1, 2], [0, 2], {"vertices": [0, 1], "tag": "s2"}],
     "fundamental_chain": [{"simplex": [0, 1], "coeff": "1"}, ...]}
"""

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

from precy_pipeline.core_algebra import LinComb, scalar_str, to_scalar
from precy_pipeline.logger import ValidationError, log_function_calls

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Simplex:
    vertices: Tuple[int, ...]
    tag: Optional[str] = None

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def face(self, i: int) -> "Simplex":
        """i-th face: drop vertex i. Faces carry no multiplicity tag."""
        return Simplex(self.vertices[:i] + self.vertices[i + 1:])

    def __str__(self) -> str:
        body = "".join(str(v) for v in self.vertices) if all(
            0 <= v < 10 for v in self.vertices) else ",".join(map(str, self.vertices))
        return f"({body})" + (f"_{self.tag}" if self.tag else "")



def simplex_key(s: Simplex) -> Tuple[Tuple[int, ...], str]:
    return (s.vertices, s.tag or "")


@dataclass(frozen=True)
class SimplicialChain:
    terms: LinComb[Simplex]
    degree: int

    def __post_init__(self) -> None:
        if any(s.dim != self.degree for s, _ in self.terms.items()):
            raise ValidationError("simplicial chain mixes dimensions")

    @classmethod
    def from_dict(cls, terms: Dict[Simplex, Any], degree: Optional[int] = None) -> "SimplicialChain":
        lc = LinComb(terms)
        if degree is None:
            dims = {s.dim for s, _ in lc.items()}
            degree = dims.pop() if len(dims) == 1 else 0
        return cls(lc, degree)


@dataclass(frozen=True)
class OrderedComplex:
    vertices: Tuple[int, ...]
    simplices: FrozenSet[Simplex]
    fundamental_chain: Optional[SimplicialChain] = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return max((s.dim for s in self.simplices), default=0)

    def simplices_of_dim(self, n: int) -> List[Simplex]:
        if n == 0:
            return [Simplex((v,)) for v in self.vertices]
        return sorted((s for s in self.simplices if s.dim == n), key=simplex_key)

    def contains(self, s: Simplex) -> bool:
        if s.dim == 0:
            return s.vertices[0] in self.vertices
        return s in self.simplices

    def edges(self) -> List[Simplex]:
        return self.simplices_of_dim(1)


@dataclass
class ChainReport:
    is_cycle: bool
    top_dimensional: bool
    degenerate: bool
    message: str

    @property
    def valid(self) -> bool:
        return self.is_cycle and self.top_dimensional


def boundary(c: SimplicialChain, complex_: Optional[OrderedComplex] = None) -> SimplicialChain:
    """Alternating-sum boundary; checks faces against ``complex_`` when given."""
    if c.degree < 1:
        raise ValidationError("boundary needs degree >= 1")
    acc: Dict[Simplex, Fraction] = {}
    for s, coeff in c.terms.items():
        for i in range(s.dim + 1):
            f = s.face(i)
            if complex_ is not None and not complex_.contains(f):
                raise ValidationError(f"simplex {s} is missing the face {f}")
            acc[f] = acc.get(f, Fraction(0)) + (coeff if i % 2 == 0 else -coeff)
    return SimplicialChain(LinComb(acc), c.degree - 1)


def validate_fundamental_chain(K: OrderedComplex, c: SimplicialChain) -> ChainReport:
    if c.terms.is_zero():
        return ChainReport(True, c.degree == K.dim, True, "empty chain")
    top = c.degree == K.dim and all(K.contains(s) for s, _ in c.terms.items())
    try:
        cycle = c.degree == 0 or boundary(c, K).terms.is_zero()
    except ValidationError as e:
        return ChainReport(False, top, False, str(e))
    msg = "valid fundamental chain" if cycle and top else (
        "boundary is nonzero" if not cycle else "chain is not top-dimensional")
    return ChainReport(cycle, top, False, msg)


def _parse_simplex(raw: Any) -> Simplex:
    if isinstance(raw, dict):
        verts, tag = raw.get("vertices"), raw.get("tag")
    else:
        verts, tag = raw, None
    if not isinstance(verts, list) or not verts or not all(isinstance(v, int) for v in verts):
        raise ValidationError(f"bad simplex entry: {raw!r}")
    if any(a >= b for a, b in zip(verts, verts[1:])):
        raise ValidationError(f"vertex list not strictly increasing: {verts}")
    return Simplex(tuple(verts), tag)


@log_function_calls(category="SIMPLICIAL")
def load_complex(text: str) -> OrderedComplex:
    """Parses the JSON document and verifies face closure."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"malformed JSON: {e}") from e
    if not isinstance(doc, dict) or "vertices" not in doc or "simplices" not in doc:
        raise ValidationError("document needs 'vertices' and 'simplices'")
    vertices = doc["vertices"]
    if not all(isinstance(v, int) for v in vertices) or vertices != sorted(set(vertices)):
        raise ValidationError("vertices must be sorted distinct integers")
    simplices = frozenset(s for s in map(_parse_simplex, doc["simplices"]) if s.dim >= 1)
    K = OrderedComplex(tuple(vertices), simplices)
    for s in simplices:
        for v in s.vertices:
            if v not in K.vertices:
                raise ValidationError(f"simplex {s} uses unknown vertex {v}")
        for i in range(s.dim + 1):
            if s.dim >= 2 and not K.contains(s.face(i)):
                raise ValidationError(f"not face-closed: {s} is missing {s.face(i)}")
    chain = None
    if "fundamental_chain" in doc:
        terms: Dict[Simplex, Fraction] = {}
        for entry in doc["fundamental_chain"]:
            s = _parse_simplex(entry.get("simplex"))
            terms[s] = terms.get(s, Fraction(0)) + to_scalar(entry.get("coeff", "1"))
        chain = SimplicialChain.from_dict(terms)
    logger.info(f"Loaded complex: {len(vertices)} vertices, {len(simplices)} simplices")
    return OrderedComplex(K.vertices, K.simplices, chain)


def serialize_complex(K: OrderedComplex) -> str:
    def enc(s: Simplex) -> Any:
        return {"vertices": list(s.vertices), "tag": s.tag} if s.tag else list(s.vertices)

    doc: Dict[str, Any] = {
        "vertices": list(K.vertices),
        "simplices": [enc(s) for s in sorted(K.simplices, key=simplex_key)],
    }
    if K.fundamental_chain is not None:
        doc["fundamental_chain"] = [
            {"simplex": list(s.vertices), "coeff": scalar_str(c)}
            for s, c in K.fundamental_chain.terms.sorted_items()
        ]
    return json.dumps(doc, sort_keys=True)


def triangle_boundary() -> OrderedComplex:
    """The circle as the boundary of (012), with chain (01) + (12) - (02)."""
    edges = [Simplex((0, 1)), Simplex((1, 2)), Simplex((0, 2))]
    chain = SimplicialChain.from_dict({edges[0]: 1, edges[1]: 1, edges[2]: -1}, 1)
    return OrderedComplex((0, 1, 2), frozenset(edges), chain)


def filled_triangle() -> OrderedComplex:
    """The 2-simplex (012) with all its faces."""
    simplices = [Simplex((0, 1)), Simplex((1, 2)), Simplex((0, 2)), Simplex((0, 1, 2))]
    return OrderedComplex((0, 1, 2), frozenset(simplices))

