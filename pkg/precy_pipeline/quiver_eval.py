"""
Evaluation of tube quivers on Hochschild chains.

A chain a0[a1|...|an] is inserted at the source: a0 travels along ``e`` and
a1..an are distributed over the corners of the inner face, read from the
source onwards. The inputs of the result's angle A_j are distributed over
the outer corners between outputs o_(j-1) and o_j. Every internal vertex
then applies the cochain assigned to its number of outgoing edges, its
angles being cut out of the rotation by the outgoing half-edges (angle 1
ends at the first outgoing half-edge in the rotation).

The canonical orientation word evaluates with sign +1; graded inputs add the
Koszul sign of their consumption order.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from precy_pipeline.core_algebra import LinComb, accumulate, koszul_sign
from precy_pipeline.hochschild import (
    Angle, CochainBundle, Config, HigherCochain, HochChain, HochWord, NegCyclicChain, Outputs,
    config_str, connes_B, hoch_b, make_angle, mu_cochain, necklace_bracket_components, shifted,
)
from precy_pipeline.logger import BoundOverflow, ValidationError, log_function_calls, record_stats
from precy_pipeline.pathcat import Necklace
from precy_pipeline.quiver import (
    INTERNAL, CyclicQuiverChain, RibbonQuiver, TubeQuiver, boundary_del, classify_edge_or_vertex,
    degree_d, rotation_R,
)

logger = logging.getLogger(__name__)

Corner = Tuple[str, int]
Atom = Tuple[int, Necklace]


@dataclass
class VertexAssignment:
    """Cochains by number of outgoing edges, with optional per-vertex overrides."""

    bundle: CochainBundle
    named: Dict[str, HigherCochain] = field(default_factory=dict)
    strict: bool = True

    def covers(self, q: TubeQuiver) -> bool:
        return all(v in self.named or self.bundle.component(k) is not None
                   for v, k in q.out_degrees().items())

    def cochain_for(self, vertex: str, out_degree: int) -> HigherCochain:
        if vertex in self.named:
            F = self.named[vertex]
        else:
            F = self.bundle.component(out_degree)  # type: ignore[assignment]
        if F is None:
            raise ValidationError(f"no cochain assigned to vertex {vertex} with {out_degree} outputs")
        if F.arity != out_degree:
            raise ValidationError(f"vertex {vertex} has {out_degree} outputs, cochain {F.name} has {F.arity}")
        return F


def _next_corner(rq: RibbonQuiver, corner: Corner) -> Corner:
    v, i = corner
    rot = rq.rotation[v]
    half = rot[(i + 1) % len(rot)]
    other = (half[0], "h" if half[1] == "t" else "t")
    w = rq.vertex_of(other)
    return (w, rq.rotation[w].index(other))


def face_walk(rq: RibbonQuiver, start: Corner) -> List[Corner]:
    """Corners of the face through ``start``, beginning right after it."""
    walk: List[Corner] = []
    corner = _next_corner(rq, start)
    while corner != start:
        walk.append(corner)
        corner = _next_corner(rq, corner)
        if len(walk) > 4 * len(rq.edges) + 4:
            raise ValidationError("face walk does not close")
    return walk


@dataclass(frozen=True)
class _Layout:
    rq: RibbonQuiver
    order: Tuple[str, ...]
    segments: Tuple[Tuple[Corner, ...], ...]
    inner: Tuple[Corner, ...]
    output_edges: Tuple[str, ...]


def _layout(q: TubeQuiver) -> _Layout:
    rq = q.to_ribbon()
    leaves = {f"o{j}": j for j in range(1, q.ell + 1)}
    walk = face_walk(rq, ("o1", 0))
    segments: List[List[Corner]] = [[] for _ in range(q.ell)]
    current = 1  # after o_1 comes the angle A_2
    for corner in walk:
        v = corner[0]
        if v in leaves:
            current = leaves[v]
            continue
        if rq.kinds[v] == INTERNAL:
            segments[current % q.ell].append(corner)
    inner = tuple(c for c in face_walk(rq, ("s", 0)) if rq.kinds[c[0]] == INTERNAL)
    order = tuple(v for v in nx.topological_sort(rq.digraph()) if rq.kinds[v] == INTERNAL)
    output_edges = tuple(rq.rotation[f"o{j}"][0][0] for j in range(1, q.ell + 1))
    return _Layout(rq, order, tuple(tuple(s) for s in segments), inner, output_edges)


def _splits(atoms: Sequence[Atom], slots: int) -> Iterator[Tuple[Tuple[Atom, ...], ...]]:
    if slots == 0:
        if not atoms:
            yield ()
        return
    if slots == 1:
        yield (tuple(atoms),)
        return
    for k in range(len(atoms) + 1):
        for rest in _splits(atoms[k:], slots - 1):
            yield (tuple(atoms[:k]),) + rest


def _place(corners: Sequence[Corner], pieces: Sequence[Tuple[Atom, ...]], start_obj: int,
           inputs: Dict[Corner, Tuple[Atom, ...]], objects: Dict[Corner, int]) -> None:
    obj = start_obj
    for corner, piece in zip(corners, pieces):
        inputs[corner] = piece
        objects[corner] = obj
        if piece:
            obj = piece[-1][1].target


class _Evaluator:
    def __init__(self, q: TubeQuiver, assign: VertexAssignment) -> None:
        self.q = q
        self.assign = assign
        self.lay = _layout(q)

    def _vertex_config(self, v: str, values: Dict[str, Necklace], inputs: Dict[Corner, Tuple[Atom, ...]],
                       objects: Dict[Corner, int], consumed: List[int]) -> Tuple[Config, List[str]]:
        rot = self.lay.rq.rotation[v]
        n = len(rot)
        outgoing = [i for i, h in enumerate(rot) if h[1] == "t"]
        angles: List[Angle] = []
        for r, cur in enumerate(outgoing):
            prev = outgoing[r - 1]
            word: List[Necklace] = []
            for idx, x in inputs.get((v, prev), ()):
                word.append(x)
                consumed.append(idx)
            i = (prev + 1) % n
            while i != cur:
                word.append(values[rot[i][0]])
                for idx, x in inputs.get((v, i), ()):
                    word.append(x)
                    consumed.append(idx)
                i = (i + 1) % n
            angles.append(make_angle(word, objects.get((v, prev))))
        return tuple(angles), [rot[i][0] for i in outgoing]

    def run(self, config: Config, w: HochWord, coeff: Fraction, acc: Dict[Outputs, Fraction]) -> None:
        lay = self.lay
        atoms: List[Atom] = []
        per_angle: List[List[Atom]] = []
        for a in config:
            per_angle.append([(len(atoms) + k, x) for k, x in enumerate(a.inputs)])
            atoms.extend(per_angle[-1])
        a0_index = len(atoms)
        atoms.append((a0_index, w.a0))
        bar = [(a0_index + 1 + k, x) for k, x in enumerate(w.bar)]
        atoms.extend(bar)
        degrees = [shifted(x) for _, x in atoms]

        def placements() -> Iterator[Tuple[Dict[Corner, Tuple[Atom, ...]], Dict[Corner, int]]]:
            choices = [list(_splits(per_angle[j], len(lay.segments[j]))) for j in range(len(config))]

            def rec(j: int, inputs: Dict[Corner, Tuple[Atom, ...]], objects: Dict[Corner, int]
                    ) -> Iterator[Tuple[Dict[Corner, Tuple[Atom, ...]], Dict[Corner, int]]]:
                if j == len(config):
                    for pieces in _splits(bar, len(lay.inner)):
                        ins, objs = dict(inputs), dict(objects)
                        _place(lay.inner, pieces, w.a0.target, ins, objs)
                        yield ins, objs
                    return
                for pieces in choices[j]:
                    ins, objs = dict(inputs), dict(objects)
                    _place(lay.segments[j], pieces, config[j].start, ins, objs)
                    yield from rec(j + 1, ins, objs)

            yield from rec(0, {}, {})

        for inputs, objects in placements():
            self._branch(0, {"e": w.a0}, inputs, objects, [a0_index], coeff, degrees, acc)

    def _branch(self, k: int, values: Dict[str, Necklace], inputs: Dict[Corner, Tuple[Atom, ...]],
                objects: Dict[Corner, int], consumed: List[int], coeff: Fraction, degrees: List[int],
                acc: Dict[Outputs, Fraction]) -> None:
        lay = self.lay
        if k == len(lay.order):
            if sorted(consumed) != list(range(len(degrees))):
                return
            sign = koszul_sign(consumed, degrees)
            outs = tuple(values[e] for e in lay.output_edges)
            accumulate(acc, outs, coeff * sign)
            return
        v = lay.order[k]
        used = list(consumed)
        try:
            config, out_edges = self._vertex_config(v, values, inputs, objects, used)
        except ValidationError:
            return
        F = self.assign.cochain_for(v, len(out_edges))
        for outs, c in F(config).items():
            nv = dict(values)
            nv.update(zip(out_edges, outs))
            self._branch(k + 1, nv, inputs, objects, used, coeff * c, degrees, acc)


@log_function_calls(category="EVAL")
def evaluate(q: TubeQuiver, assign: VertexAssignment, lam: HochChain, lie_degree: int = 1,
             max_beads: Optional[int] = None) -> HigherCochain:
    """E(q, lam) as an l-output cochain, multilinear in lam and the assigned cochains."""
    if not assign.strict and not assign.covers(q):
        return HigherCochain.zero(q.ell, lie_degree, assign.bundle.d)
    ev = _Evaluator(q, assign)
    cache: Dict[Config, LinComb[Outputs]] = {}
    terms = list(lam.items())

    def rule(config: Config) -> LinComb[Outputs]:
        if config not in cache:
            acc: Dict[Outputs, Fraction] = {}
            for w, c in terms:
                ev.run(config, w, c, acc)
            value = LinComb(acc)
            if max_beads is not None and any(len(o.beads) > max_beads for outs in value.keys() for o in outs):
                raise BoundOverflow(f"evaluation at {config_str(config)} leaves the bead bound {max_beads}")
            cache[config] = value
            record_stats("evaluations")
        return cache[config]

    return HigherCochain(q.ell, lie_degree, rule, assign.bundle.d, reduced=False, name=f"E({q})")


def evaluate_chain(c: LinComb[TubeQuiver], assign: VertexAssignment, lam: HochChain,
                   lie_degree: int = 1) -> Optional[HigherCochain]:
    total: Optional[HigherCochain] = None
    for q, coeff in c.sorted_items():
        term = evaluate(q, assign, lam, lie_degree) * coeff
        total = term if total is None else total + term
    return total


def evaluate_cyclic(gamma: CyclicQuiverChain, assign: VertexAssignment, lam: NegCyclicChain,
                    lie_degree: int = 1) -> Optional[HigherCochain]:
    """Degree-zero part in u: sum_i E(Gamma^i, lambda_i)."""
    if lam.order < gamma.depth - 1:
        raise BoundOverflow(f"u-truncation {lam.order} is below the chain depth {gamma.depth - 1}")
    total: Optional[HigherCochain] = None
    for i in range(gamma.depth):
        part = evaluate_chain(gamma.coefficient(i), assign, lam.coefficient(i), lie_degree)
        if part is not None:
            total = part if total is None else total + part
    return total


# ---------------------------------------------------------------------------
# Compatibility checks
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    name: str
    checked: int = 0
    failures: List[Tuple[str, str]] = field(default_factory=list)
    bounds: Dict[str, int] = field(default_factory=dict)
    threads: int = 1

    @property
    def passed(self) -> bool:
        return not self.failures

    def compare(self, F: Optional[HigherCochain], G: Optional[HigherCochain], configs: Sequence[Config]) -> None:
        """Evaluates both sides on ``threads`` workers; failures keep the order of ``configs``."""
        def sides(c: Config) -> Tuple[Config, LinComb[Outputs], LinComb[Outputs]]:
            return c, F(c) if F is not None else LinComb(), G(c) if G is not None else LinComb()

        with ThreadPoolExecutor(max_workers=max(1, self.threads)) as pool:
            results = list(pool.map(sides, configs))
        for c, left, right in results:
            self.checked += 1
            if left != right:
                self.failures.append((config_str(c), f"{left} != {right}"))

    def as_dict(self) -> Dict[str, object]:
        return {"name": self.name, "checked": self.checked, "passed": self.passed,
                "failures": [list(f) for f in self.failures[:20]], "bounds": self.bounds}


def _sum(parts: Sequence[Optional[HigherCochain]]) -> Optional[HigherCochain]:
    total: Optional[HigherCochain] = None
    for p in parts:
        if p is not None:
            total = p if total is None else total + p
    return total


def check_del_compatibility(q: TubeQuiver, assign: VertexAssignment, lam: HochChain,
                            configs: Sequence[Config], d: int) -> VerificationReport:
    """[mu, E(q, lam)] = E(del q, lam) + (-1)^deg(q) E(q, b lam) on ``configs``."""
    report = VerificationReport(f"del-compatibility {q}")
    left = necklace_bracket_components(mu_cochain(d), evaluate(q, assign, lam))
    sign = -1 if degree_d(q, d) % 2 else 1
    right = _sum([
        evaluate_chain(boundary_del(LinComb.basis(q), d), assign, lam),
        evaluate(q, assign, hoch_b(lam)) * sign,
    ])
    report.compare(left, right, configs)
    return report


def check_rotation_unit(q: TubeQuiver, assign: VertexAssignment, lam: HochChain,
                        configs: Sequence[Config], d: int) -> VerificationReport:
    """E(R q, lam) = (-1)^deg(q) E(q, B lam) for an edge-type quiver."""
    if classify_edge_or_vertex(q) != "edge":
        raise ValidationError("rotation-unit identity needs an edge-type quiver")
    report = VerificationReport(f"rotation-unit {q}")
    sign = -1 if degree_d(q, d) % 2 else 1
    left = evaluate_chain(rotation_R(LinComb.basis(q), d), assign, lam)
    right = evaluate(q, assign, connes_B(lam)) * sign
    report.compare(left, right, configs)
    return report


def default_assignment(components: Dict[int, HigherCochain], d: int = 1) -> VertexAssignment:
    """mu on one-output vertices plus the given higher components."""
    merged = {1: mu_cochain(d)}
    merged.update(components)
    return VertexAssignment(CochainBundle(merged, d))


def bubble_quiver() -> TubeQuiver:
    """
    One-output diagram: a two-output source on the cycle feeds the vertex where
    e lands and the vertex carrying o_1.
    """
    return TubeQuiver(1, (True, False, True), ((), ((True, ()),), ()), 0)
