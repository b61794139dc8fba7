"""
Tube quivers with d-orientations and their differentials.

A tube quiver is a connected, acyclically oriented ribbon quiver with as
many vertices as edges and two boundary components: the source ``s`` (with
its single edge ``e``) sits inside the unique cycle, the outputs o_1..o_l
hang off planar trees outside it.

Canonical form. The cycle is listed clockwise starting at the vertex where
``e`` lands; each cycle vertex carries its outer subtrees clockwise; a tree
node is ``(down, children)`` with ``down`` true when its parent edge points
towards it. Canonical names:

    c<k>    cycle vertices          a<k>  cycle edge between c<k> and c<k+1>
    n<path> internal tree nodes     x<path> edge from the parent to <path>
    o<i>    outputs                 e, s

and the canonical orientation word is
``(o_1 .. o_l, c.., n.., a.., x.., e, s)``. A basis element of a quiver
chain is a canonical quiver with its canonical word; any other word is
absorbed into the coefficient.

Rotation systems list half-edges clockwise. At a cycle vertex the order is
(previous cycle edge, outer subtrees, next cycle edge, inner side), the inner
side holding ``e`` at the landing vertex and nothing elsewhere.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from precy_pipeline.core_algebra import (
    LinComb, OrientationWord, accumulate, reorder_orientation, solve_linear_map, sparse_rank,
)
from precy_pipeline.logger import (
    BoundOverflow, ValidationError, WindowTooSmall, log_function_calls, record_stats,
)

logger = logging.getLogger(__name__)

SOURCE = "source"
OUTPUT = "output"
INTERNAL = "internal"

Node = Tuple[bool, Tuple[Any, ...]]
HalfEdge = Tuple[str, str]
Window = Optional[Tuple[int, int]]


def _flip(half: HalfEdge) -> HalfEdge:
    return (half[0], "h" if half[1] == "t" else "t")


# ---------------------------------------------------------------------------
# Named ribbon quivers
# ---------------------------------------------------------------------------

@dataclass
class RibbonQuiver:
    """Mutable ribbon quiver with arbitrary names; used for local surgery."""

    kinds: Dict[str, str]
    edges: Dict[str, Tuple[str, str]]
    rotation: Dict[str, List[HalfEdge]]
    labels: Dict[str, int] = field(default_factory=dict)

    def copy(self) -> "RibbonQuiver":
        return RibbonQuiver(dict(self.kinds), dict(self.edges),
                            {v: list(r) for v, r in self.rotation.items()}, dict(self.labels))

    def vertex_of(self, half: HalfEdge) -> str:
        tail, head = self.edges[half[0]]
        return tail if half[1] == "t" else head

    def in_out(self, v: str) -> Tuple[int, int]:
        rot = self.rotation[v]
        return sum(1 for h in rot if h[1] == "h"), sum(1 for h in rot if h[1] == "t")

    def kind_of(self, name: str) -> str:
        return "edge" if name in self.edges else "vertex"

    def word(self, symbols: Sequence[str], sign: int = 1) -> OrientationWord:
        return OrientationWord(tuple(symbols), tuple(self.kind_of(s) for s in symbols), sign)

    def digraph(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.kinds)
        for name, (tail, head) in self.edges.items():
            g.add_edge(tail, head, key=name)
        return g

    def contract(self, edge: str, merged: str) -> "RibbonQuiver":
        """Merges the endpoints of ``edge`` into ``merged``, splicing rotations."""
        u, v = self.edges[edge]
        if u == v:
            raise ValidationError(f"cannot contract the loop {edge}")
        out = self.copy()
        rot_u, rot_v = out.rotation.pop(u), out.rotation.pop(v)
        iu, iv = rot_u.index((edge, "t")), rot_v.index((edge, "h"))
        spliced = rot_u[:iu] + rot_v[iv + 1:] + rot_v[:iv] + rot_u[iu + 1:]
        out.rotation[merged] = spliced
        del out.edges[edge]
        del out.kinds[u], out.kinds[v]
        out.kinds[merged] = INTERNAL
        for name, (t, h) in list(out.edges.items()):
            out.edges[name] = (merged if t in (u, v) else t, merged if h in (u, v) else h)
        return out


@dataclass(frozen=True)
class _Traversal:
    directions: Tuple[bool, ...]
    trees: Tuple[Tuple[Node, ...], ...]
    leaves: Tuple[str, ...]
    names: Dict[str, str]


def _traverse(rq: RibbonQuiver) -> _Traversal:
    """Reads off the canonical structure; output names are left to the caller."""
    sources = [v for v, k in rq.kinds.items() if k == SOURCE]
    if len(sources) != 1:
        raise ValidationError("a tube quiver has exactly one source vertex")
    s = sources[0]
    if len(rq.rotation[s]) != 1 or rq.rotation[s][0][1] != "t":
        raise ValidationError("the source has exactly one outgoing edge")
    e = rq.rotation[s][0][0]
    if len(rq.kinds) != len(rq.edges):
        raise ValidationError("a tube quiver has as many vertices as edges")
    for name, (t, h) in rq.edges.items():
        if t == h:
            raise ValidationError(f"edge {name} is a loop")
    for v, k in rq.kinds.items():
        if k == OUTPUT and (len(rq.rotation[v]) != 1 or rq.rotation[v][0][1] != "h"):
            raise ValidationError(f"output {v} needs exactly one incoming edge")

    # the cycle: strip leaves
    degree = {v: len(r) for v, r in rq.rotation.items()}
    removed = set()
    stack = [v for v, dv in degree.items() if dv == 1]
    while stack:
        v = stack.pop()
        if v in removed:
            continue
        removed.add(v)
        for edge, end in rq.rotation[v]:
            t, h = rq.edges[edge]
            other = h if end == "t" else t
            if other not in removed:
                degree[other] -= 1
                if degree[other] == 1:
                    stack.append(other)
    cycle = set(rq.kinds) - removed
    if not cycle:
        raise ValidationError("quiver has no cycle")

    def on_cycle(half: HalfEdge) -> bool:
        t, h = rq.edges[half[0]]
        return t in cycle and h in cycle

    c0 = rq.edges[e][1]
    if c0 not in cycle:
        raise ValidationError("the source edge must land on the cycle")

    names: Dict[str, str] = {s: "s", e: "e"}
    leaves: List[str] = []
    visited = set(cycle) | {s}

    def subtree(parent_half: HalfEdge, path: str) -> Node:
        edge = parent_half[0]
        t, h = rq.edges[edge]
        down = parent_half[1] == "t"
        child = h if down else t
        names[edge] = f"x{path}"
        if child in visited:
            raise ValidationError("trees outside the cycle must be disjoint")
        visited.add(child)
        if rq.kinds[child] == OUTPUT:
            if not down:
                raise ValidationError("output edges point to the output")
            leaves.append(child)
            return (True, ())
        if rq.kinds[child] != INTERNAL:
            raise ValidationError(f"unexpected vertex {child} in a tree")
        names[child] = f"n{path}"
        rot = rq.rotation[child]
        i = rot.index(_flip(parent_half))
        seq = rot[i + 1:] + rot[:i]
        return (down, tuple(subtree(hh, f"{path}.{j}") for j, hh in enumerate(seq)))

    directions: List[bool] = []
    trees: List[Tuple[Node, ...]] = []
    rot = rq.rotation[c0]
    i = rot.index((e, "h"))
    seq = rot[i + 1:] + rot[:i]
    marks = [j for j, hh in enumerate(seq) if on_cycle(hh)]
    if len(marks) != 2 or marks[0] != 0 or marks[1] != len(seq) - 1:
        raise ValidationError("the landing vertex must have the source edge alone on its inner side")
    entry = seq[0]
    current, outer, next_half = c0, seq[1:-1], seq[-1]
    k = 0
    while True:
        names[current] = f"c{k}"
        trees.append(tuple(subtree(hh, f"{k}.{j}") for j, hh in enumerate(outer)))
        names[next_half[0]] = f"a{k}"
        directions.append(next_half[1] == "t")
        arrive = _flip(next_half)
        current = rq.vertex_of(arrive)
        if current == c0:
            if arrive != entry:
                raise ValidationError("cycle does not close up consistently")
            break
        k += 1
        if k > len(cycle):
            raise ValidationError("cycle walk did not terminate")
        rot = rq.rotation[current]
        i = rot.index(arrive)
        seq = rot[i + 1:] + rot[:i]
        marks = [j for j, hh in enumerate(seq) if on_cycle(hh)]
        if len(marks) != 1 or marks[0] != len(seq) - 1:
            raise ValidationError("only the landing vertex has edges on the inner side")
        outer, next_half = seq[:-1], seq[-1]
    if len(directions) != len(cycle):
        raise ValidationError("cycle vertices must be visited once")
    if len(visited) != len(rq.kinds):
        raise ValidationError("quiver is not connected")
    return _Traversal(tuple(directions), tuple(trees), tuple(leaves), names)


def canonicalize(rq: RibbonQuiver) -> Tuple["TubeQuiver", Dict[str, str]]:
    """Canonical tube quiver plus the renaming of every vertex and edge."""
    tr = _traverse(rq)
    ell = len(tr.leaves)
    labels = [rq.labels.get(v) for v in tr.leaves]
    if sorted(labels) != list(range(1, ell + 1)):  # type: ignore[type-var]
        raise ValidationError(f"outputs must be labelled 1..{ell}")
    first = labels.index(1)
    for t in range(ell):
        if labels[(first + t) % ell] != t + 1:
            raise ValidationError("output labels must follow the clockwise order")
    names = dict(tr.names)
    for v in tr.leaves:
        names[v] = f"o{rq.labels[v]}"
    tq = TubeQuiver(ell, tr.directions, tr.trees, first)
    problems = tq.problems()
    if problems:
        raise ValidationError("; ".join(problems))
    return tq, names


# ---------------------------------------------------------------------------
# Canonical tube quivers
# ---------------------------------------------------------------------------

def _node_in_out(node: Node) -> Tuple[int, int]:
    down, children = node
    ins = (1 if down else 0) + sum(1 for c in children if not c[0])
    outs = (0 if down else 1) + sum(1 for c in children if c[0])
    return ins, outs


def _vertex_ok(ins: int, outs: int) -> bool:
    return outs >= 1 and (ins + outs >= 3 or (ins == 0 and outs == 2))


@dataclass(frozen=True)
class TubeQuiver:
    ell: int
    directions: Tuple[bool, ...]
    trees: Tuple[Tuple[Node, ...], ...]
    first: int = 0

    def __str__(self) -> str:
        arrows = "".join(">" if d else "<" for d in self.directions)
        return f"T{self.ell}[{arrows}|{self.trees}|{self.first}]"

    def __repr__(self) -> str:
        return str(self)

    def sort_key(self) -> str:
        return str(self)

    @property
    def cycle_length(self) -> int:
        return len(self.directions)

    def cycle_in_out(self, k: int) -> Tuple[int, int]:
        ins = (1 if self.directions[k - 1] else 0) + (0 if self.directions[k] else 1)
        outs = 2 - ins
        ins += 1 if k == 0 else 0
        for node in self.trees[k]:
            if node[0]:
                outs += 1
            else:
                ins += 1
        return ins, outs

    def problems(self) -> List[str]:
        out = []
        m = self.cycle_length
        if m < 2:
            out.append("cycle needs at least two vertices")
            return out
        if all(self.directions) or not any(self.directions):
            out.append("orientation has a directed cycle")
        if len(self.trees) != m:
            out.append("one forest per cycle vertex")
            return out
        if not 0 <= self.first < max(self.ell, 1):
            out.append("first output out of range")
        for k in range(m):
            if not _vertex_ok(*self.cycle_in_out(k)):
                out.append(f"cycle vertex {k} has bad valence")

        def walk(node: Node) -> None:
            down, children = node
            if not children:
                if not down:
                    out.append("output edge points inwards")
                return
            if not _vertex_ok(*_node_in_out(node)):
                out.append("tree vertex has bad valence")
            for c in children:
                walk(c)

        for forest in self.trees:
            for node in forest:
                walk(node)
        return out

    @cached_property
    def _layout(self) -> RibbonQuiver:
        m = self.cycle_length
        kinds: Dict[str, str] = {"s": SOURCE}
        edges: Dict[str, Tuple[str, str]] = {"e": ("s", "c0")}
        rotation: Dict[str, List[HalfEdge]] = {"s": [("e", "t")]}
        labels: Dict[str, int] = {}
        leaf_paths: List[str] = []

        def collect(node: Node, path: str) -> None:
            if not node[1]:
                leaf_paths.append(path)
            for j, c in enumerate(node[1]):
                collect(c, f"{path}.{j}")

        for k, forest in enumerate(self.trees):
            for j, node in enumerate(forest):
                collect(node, f"{k}.{j}")
        leaf_name = {p: f"o{(i - self.first) % self.ell + 1}" for i, p in enumerate(leaf_paths)}

        for k in range(m):
            kinds[f"c{k}"] = INTERNAL
            nxt = (k + 1) % m
            edges[f"a{k}"] = (f"c{k}", f"c{nxt}") if self.directions[k] else (f"c{nxt}", f"c{k}")

        def half_at(edge: str, vertex: str) -> HalfEdge:
            return (edge, "t" if edges[edge][0] == vertex else "h")

        def place(node: Node, path: str, parent: str) -> str:
            down, children = node
            name = leaf_name[path] if not children else f"n{path}"
            kinds[name] = OUTPUT if not children else INTERNAL
            if not children:
                labels[name] = int(name[1:])
            edge = f"x{path}"
            edges[edge] = (parent, name) if down else (name, parent)
            kids = [place(c, f"{path}.{j}", name) for j, c in enumerate(children)]
            rotation[name] = [half_at(edge, name)] + [half_at(f"x{path}.{j}", name) for j in range(len(kids))]
            return name

        for k in range(m):
            c = f"c{k}"
            roots = [place(node, f"{k}.{j}", c) for j, node in enumerate(self.trees[k])]
            rot = [half_at(f"a{(k - 1) % m}", c)]
            rot += [half_at(f"x{k}.{j}", c) for j in range(len(roots))]
            rot.append(half_at(f"a{k}", c))
            if k == 0:
                rot.append(("e", "h"))
            rotation[c] = rot
        return RibbonQuiver(kinds, edges, rotation, labels)

    def to_ribbon(self) -> RibbonQuiver:
        return self._layout.copy()

    @cached_property
    def internal_vertices(self) -> Tuple[str, ...]:
        rq = self._layout
        cyc = [f"c{k}" for k in range(self.cycle_length)]
        tree = sorted((v for v, k in rq.kinds.items() if k == INTERNAL and v.startswith("n")),
                      key=_path_key)
        return tuple(cyc + tree)

    @cached_property
    def canonical_symbols(self) -> Tuple[str, ...]:
        rq = self._layout
        outputs = [f"o{i}" for i in range(1, self.ell + 1)]
        cyc_edges = [f"a{k}" for k in range(self.cycle_length)]
        tree_edges = sorted((name for name in rq.edges if name.startswith("x")), key=_path_key)
        return tuple(outputs) + self.internal_vertices + tuple(cyc_edges + tree_edges) + ("e", "s")

    def canonical_word(self) -> OrientationWord:
        return self._layout.word(self.canonical_symbols)

    def in_out(self, v: str) -> Tuple[int, int]:
        return self._layout.in_out(v)

    def out_degrees(self) -> Dict[str, int]:
        return {v: self.in_out(v)[1] for v in self.internal_vertices}


def _path_key(name: str) -> Tuple[int, ...]:
    return tuple(int(p) for p in name[1:].split("."))


# ---------------------------------------------------------------------------
# Degree and classification
# ---------------------------------------------------------------------------

def degree_d(q: TubeQuiver, d: int) -> int:
    """sum over internal vertices of (2 - d) out + d + in - 4."""
    total = 0
    for v in q.internal_vertices:
        ins, outs = q.in_out(v)
        total += (2 - d) * outs + d + ins - 4
    return total


def classify_edge_or_vertex(q: TubeQuiver) -> str:
    """'edge' when e lands on a trivalent vertex with two inputs and one output."""
    m = q.cycle_length
    if not q.trees[0] and q.directions[m - 1] == q.directions[0]:
        return "edge"
    return "vertex"


def chain_degree(c: LinComb[TubeQuiver], d: int) -> Optional[int]:
    degrees = {degree_d(q, d) for q in c.keys()}
    if len(degrees) > 1:
        raise ValidationError(f"quiver chain mixes degrees {sorted(degrees)}")
    return degrees.pop() if degrees else None


def max_internal_vertices(ell: int) -> int:
    """Every tube quiver with l outputs has at most 2l + 1 internal vertices."""
    return 2 * ell + 1


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _trees(leaves: int, budget: int) -> Tuple[Tuple[Node, int], ...]:
    out: List[Tuple[Node, int]] = []
    if leaves == 1:
        out.append(((True, ()), 0))
    if budget >= 1:
        for down in (True, False):
            for forest, used in _forests(leaves, budget - 1, True):
                node = (down, forest)
                if _vertex_ok(*_node_in_out(node)):
                    out.append((node, used + 1))
    return tuple(out)


@lru_cache(maxsize=None)
def _forests(leaves: int, budget: int, nonempty: bool) -> Tuple[Tuple[Tuple[Node, ...], int], ...]:
    if leaves == 0:
        return () if nonempty else (((), 0),)
    out: List[Tuple[Tuple[Node, ...], int]] = []
    for head_leaves in range(1, leaves + 1):
        for tree, used in _trees(head_leaves, budget):
            for rest, used_rest in _forests(leaves - head_leaves, budget - used, False):
                out.append(((tree,) + rest, used + used_rest))
    return tuple(out)


def _cycle_forests(directions: Tuple[bool, ...], ell: int, budget: int
                   ) -> Iterator[Tuple[Tuple[Tuple[Node, ...], ...], int]]:
    m = len(directions)

    def rec(k: int, leaves_left: int, budget_left: int) -> Iterator[Tuple[Tuple[Tuple[Node, ...], ...], int]]:
        if k == m:
            if leaves_left == 0:
                yield (), 0
            return
        ins = (1 if directions[k - 1] else 0) + (0 if directions[k] else 1) + (1 if k == 0 else 0)
        outs = (0 if directions[k - 1] else 1) + (1 if directions[k] else 0)
        for count in range(leaves_left + 1):
            for forest, used in _forests(count, budget_left, False):
                fin = ins + sum(1 for n in forest if not n[0])
                fout = outs + sum(1 for n in forest if n[0])
                if not _vertex_ok(fin, fout):
                    continue
                for rest, used_rest in rec(k + 1, leaves_left - count, budget_left - used):
                    yield (forest,) + rest, used + used_rest

    yield from rec(0, ell, budget)


@log_function_calls(category="QUIVER")
def enumerate_tube_quivers(ell: int, d: int, degree_window: Window = None,
                           size_bound: int = 7) -> List[TubeQuiver]:
    """Canonical tube quivers with at most ``size_bound`` internal vertices in the window."""
    if ell < 1:
        raise ValidationError("tube quivers need at least one output")
    found: List[TubeQuiver] = []
    for m in range(2, size_bound + 1):
        for directions in product((True, False), repeat=m):
            if all(directions) or not any(directions):
                continue
            for forests, _ in _cycle_forests(directions, ell, size_bound - m):
                for first in range(ell):
                    q = TubeQuiver(ell, directions, forests, first)
                    if degree_window is not None:
                        deg = degree_d(q, d)
                        if not degree_window[0] <= deg <= degree_window[1]:
                            continue
                    found.append(q)
    found.sort(key=TubeQuiver.sort_key)
    record_stats("quivers_enumerated", len(found))
    logger.debug(f"Enumerated {len(found)} tube quivers (l={ell}, d={d}, bound={size_bound})")
    return found


# ---------------------------------------------------------------------------
# Oriented surgery helpers
# ---------------------------------------------------------------------------

def oriented_term(rq: RibbonQuiver, symbols: Sequence[str], sign: int, d: int
                  ) -> Tuple[TubeQuiver, int]:
    """Canonical basis element and coefficient of (rq, word)."""
    tq, names = canonicalize(rq)
    mapped = rq.word([names[s] for s in symbols], sign)
    renamed = OrientationWord(mapped.symbols, tuple(
        "edge" if s in tq._layout.edges else "vertex" for s in mapped.symbols), sign)
    return tq, reorder_orientation(renamed, tq.canonical_word(), d)


def chain_from_ribbon(rq: RibbonQuiver, symbols: Sequence[str], d: int,
                      coeff: Fraction = Fraction(1)) -> LinComb[TubeQuiver]:
    tq, s = oriented_term(rq, symbols, 1, d)
    return LinComb.basis(tq, coeff * s)


def _moved_to_front(word: OrientationWord, front: Sequence[str], d: int) -> Tuple[int, List[str]]:
    """Sign of rewriting ``word`` as (front, rest) and the rest in order."""
    rest = [s for s in word.symbols if s not in front]
    target = OrientationWord(tuple(front) + tuple(rest),
                             tuple(word.kinds[word.symbols.index(s)] for s in tuple(front) + tuple(rest)))
    return reorder_orientation(word, target, d), rest


def contraction_terms(q: TubeQuiver, d: int) -> LinComb[TubeQuiver]:
    """
    Contraction differential: each internal edge f = (u -> v) is contracted
    after rewriting the word as (f, u, v, ...); the merged vertex takes the
    front position.
    """
    rq = q._layout
    word = q.canonical_word()
    acc: Dict[TubeQuiver, Fraction] = {}
    for f, (u, v) in rq.edges.items():
        if rq.kinds[u] != INTERNAL or rq.kinds[v] != INTERNAL:
            continue
        sign, rest = _moved_to_front(word, (f, u, v), d)
        merged = rq.contract(f, "w")
        try:
            tq, s2 = oriented_term(merged, ["w"] + rest, sign, d)
        except ValidationError:
            continue
        accumulate(acc, tq, Fraction(s2))
    return LinComb(acc)


class QuiverComplex:
    """All tube quivers with l outputs within a vertex bound, with the chain differential."""

    def __init__(self, ell: int, d: int, size_bound: int, threads: int = 1) -> None:
        self.ell = ell
        self.d = d
        self.size_bound = size_bound
        self.complete = size_bound >= max_internal_vertices(ell)
        self.basis = enumerate_tube_quivers(ell, d, None, size_bound)
        self.index = {q: i for i, q in enumerate(self.basis)}
        self.by_degree: Dict[int, List[TubeQuiver]] = {}
        for q in self.basis:
            self.by_degree.setdefault(degree_d(q, d), []).append(q)
        self._del: Dict[TubeQuiver, Dict[TubeQuiver, Fraction]] = {q: {} for q in self.basis}
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            contractions = list(pool.map(lambda q: contraction_terms(q, d), self.basis))
        for q, terms in zip(self.basis, contractions):
            for small, c in terms.items():
                if small in self._del:
                    self._del[small][q] = self._del[small].get(q, Fraction(0)) + c
        if not self.complete:
            logger.warning(f"Vertex bound {size_bound} < {max_internal_vertices(ell)}: "
                           f"splittings of the largest quivers are cut off")

    def degrees(self) -> List[int]:
        return sorted(self.by_degree)

    def boundary_of(self, q: TubeQuiver) -> LinComb[TubeQuiver]:
        if q not in self._del:
            raise BoundOverflow(f"{q} is outside the enumerated window")
        return LinComb(self._del[q])

    def boundary(self, c: LinComb[TubeQuiver]) -> LinComb[TubeQuiver]:
        return c.apply(self.boundary_of)


_COMPLEXES: Dict[Tuple[int, int, int], QuiverComplex] = {}


def get_complex(ell: int, d: int, size_bound: int, threads: int = 1) -> QuiverComplex:
    """Cached by (l, d, bound); ``threads`` only matters for the first build."""
    key = (ell, d, size_bound)
    if key not in _COMPLEXES:
        _COMPLEXES[key] = QuiverComplex(ell, d, size_bound, threads)
    return _COMPLEXES[key]


def _group_by_ell(c: LinComb[TubeQuiver]) -> Dict[int, LinComb[TubeQuiver]]:
    groups: Dict[int, Dict[TubeQuiver, Fraction]] = {}
    for q, coeff in c.items():
        groups.setdefault(q.ell, {})[q] = coeff
    return {ell: LinComb(terms) for ell, terms in groups.items()}


def boundary_del(c: LinComb[TubeQuiver], d: int, size_bound: Optional[int] = None) -> LinComb[TubeQuiver]:
    """Vertex-separation differential (transpose of contraction), degree -1."""
    out: LinComb[TubeQuiver] = LinComb()
    for ell, part in _group_by_ell(c).items():
        bound = size_bound if size_bound is not None else max_internal_vertices(ell)
        out = out + get_complex(ell, d, bound).boundary(part)
    return out


def _rotation_terms(q: TubeQuiver, d: int) -> LinComb[TubeQuiver]:
    if classify_edge_or_vertex(q) != "edge":
        return LinComb()
    m = q.cycle_length
    if m < 3:
        return LinComb()
    clockwise = q.directions[0]
    a, b = (f"a{m - 1}", "a0") if clockwise else ("a0", f"a{m - 1}")
    sharp = 0 if clockwise else 1
    word = q.canonical_word()
    sign, rest = _moved_to_front(word, (b, "c0"), d)
    sign *= -1 if (q.ell + sharp) % 2 else 1

    base = q.to_ribbon()
    head_b = base.edges[b][1]
    tail_a = base.edges[a][0]
    rot = base.rotation[head_b]
    rot[rot.index((b, "h"))] = (a, "h")
    base.edges[a] = (tail_a, head_b)
    del base.edges[b]
    del base.rotation["c0"]
    del base.kinds["c0"]
    acc: Dict[TubeQuiver, Fraction] = {}
    for k in range(1, m):
        g = base.copy()
        target = f"c{k}"
        g.edges["e"] = ("s", target)
        position = 2 + len(q.trees[k])
        g.rotation[target].insert(position, ("e", "h"))
        try:
            tq, s2 = oriented_term(g, rest, sign, d)
        except ValidationError:
            continue
        accumulate(acc, tq, Fraction(s2))
    return LinComb(acc)


def rotation_R(c: LinComb[TubeQuiver], d: int) -> LinComb[TubeQuiver]:
    """Rotation differential: move e from an edge to every other cycle vertex, degree +1."""
    return c.apply(lambda q: _rotation_terms(q, d))


def rotate_zl(q: TubeQuiver) -> TubeQuiver:
    """Relabels o_k -> o_(k+1); outputs are read by label, so the word is unchanged."""
    return TubeQuiver(q.ell, q.directions, q.trees, (q.first - 1) % q.ell)


def rotate_chain(c: LinComb[TubeQuiver], d: int) -> LinComb[TubeQuiver]:
    """Generator of the dimension-d action, including the extra (-1)^((d-1)(l-1))."""
    acc: Dict[TubeQuiver, Fraction] = {}
    for q, coeff in c.items():
        sign = -1 if ((d - 1) * (q.ell - 1)) % 2 else 1
        accumulate(acc, rotate_zl(q), coeff * sign)
    return LinComb(acc)


def symmetrize_zl(c: LinComb[TubeQuiver], d: int) -> LinComb[TubeQuiver]:
    """(1/l) sum of the l rotations; idempotent."""
    out: LinComb[TubeQuiver] = LinComb()
    for ell, part in _group_by_ell(c).items():
        total, current = part, part
        for _ in range(ell - 1):
            current = rotate_chain(current, d)
            total = total + current
        out = out + total * Fraction(1, ell)
    return out


# ---------------------------------------------------------------------------
# Arity-raising differentials
# ---------------------------------------------------------------------------

def _relabel_from(rq: RibbonQuiver, start: str) -> None:
    """Labels outputs 1, 2, ... clockwise starting at ``start``."""
    leaves = list(_traverse(rq).leaves)
    i = leaves.index(start)
    order = leaves[i:] + leaves[:i]
    rq.labels = {v: k + 1 for k, v in enumerate(order)}


def _slot_sign(label: int, k: int) -> int:
    """Koszul sign of inserting k - 1 new outputs after ``label - 1`` old ones; outputs are odd."""
    return -1 if ((label - 1) * (k - 1)) % 2 else 1


def _graft_terms(q: TubeQuiver, k: int, d: int) -> LinComb[TubeQuiver]:
    word = q.canonical_word()
    acc: Dict[TubeQuiver, Fraction] = {}
    new_leaves = [f"n_new{i}" for i in range(k)]
    new_edges = [f"g_new{i}" for i in range(k)]
    # a vertex with k outgoing legs grafted onto an output
    for j in range(1, q.ell + 1):
        g = q.to_ribbon()
        out = f"o{j}"
        g.kinds[out] = INTERNAL
        del g.labels[out]
        for leaf, edge in zip(new_leaves, new_edges):
            g.kinds[leaf] = OUTPUT
            g.edges[edge] = (out, leaf)
            g.rotation[leaf] = [(edge, "h")]
            g.rotation[out].append((edge, "t"))
            g.labels[leaf] = 0
        start = new_leaves[0] if j == 1 else "o1"
        _relabel_from(g, start)
        symbols = new_leaves + new_edges + list(word.symbols)
        try:
            tq, s = oriented_term(g, symbols, _slot_sign(j, k), d)
        except ValidationError:
            continue
        accumulate(acc, tq, Fraction(s))
    # a source with k outgoing legs, one of them landing in an outer corner
    source_sign = 1 if d % 2 else -1
    rq = q._layout
    for x in q.internal_vertices:
        rot = rq.rotation[x]
        if x.startswith("c"):
            kk = int(x[1:])
            corners = range(1, len(q.trees[kk]) + 2)
        else:
            corners = range(1, len(rot) + 1)
        for corner in corners:
            g = q.to_ribbon()
            g.kinds["w_new"] = INTERNAL
            g.edges["h_new"] = ("w_new", x)
            g.rotation[x].insert(corner, ("h_new", "h"))
            g.rotation["w_new"] = [("h_new", "t")]
            for leaf, edge in zip(new_leaves[:k - 1], new_edges[:k - 1]):
                g.kinds[leaf] = OUTPUT
                g.edges[edge] = ("w_new", leaf)
                g.rotation[leaf] = [(edge, "h")]
                g.rotation["w_new"].append((edge, "t"))
                g.labels[leaf] = 0
            _relabel_from(g, "o1")
            symbols = new_leaves[:k - 1] + new_edges[:k - 1] + ["w_new", "h_new"] + list(word.symbols)
            sign = source_sign * _slot_sign(g.labels[new_leaves[0]], k)
            try:
                tq, s = oriented_term(g, symbols, sign, d)
            except ValidationError:
                continue
            accumulate(acc, tq, Fraction(s))
    return LinComb(acc)


def del_k(c: LinComb[TubeQuiver], k: int, d: int) -> LinComb[TubeQuiver]:
    """
    Bracket with a vertex of k outgoing legs: arity l -> l + k - 1.

    Each graft carries the Koszul sign of placing its new outputs in their
    label slots (an output with its leg is odd), the source family an extra
    (-1)^(d+1); the result is projected onto the Z/(l+k-1)-invariant part.
    """
    if k < 2:
        raise ValidationError("del_k needs k >= 2")
    return symmetrize_zl(c.apply(lambda q: _graft_terms(q, k, d)), d)


# ---------------------------------------------------------------------------
# Cyclic chains
# ---------------------------------------------------------------------------

@dataclass
class CyclicQuiverChain:
    """Gamma^0 + Gamma^1 u^-1 + ...; coefficient i multiplies u^(-i)."""

    coeffs: List[LinComb[TubeQuiver]]
    d: int

    def coefficient(self, i: int) -> LinComb[TubeQuiver]:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else LinComb()

    @property
    def depth(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __add__(self, other: "CyclicQuiverChain") -> "CyclicQuiverChain":
        n = max(self.depth, other.depth)
        return CyclicQuiverChain([self.coefficient(i) + other.coefficient(i) for i in range(n)], self.d)

    def __sub__(self, other: "CyclicQuiverChain") -> "CyclicQuiverChain":
        return self + other.scaled(-1)

    def scaled(self, s: Any) -> "CyclicQuiverChain":
        return CyclicQuiverChain([c * s for c in self.coeffs], self.d)

    def map(self, f: Any) -> "CyclicQuiverChain":
        return CyclicQuiverChain([f(c) for c in self.coeffs], self.d)

    def trimmed(self) -> "CyclicQuiverChain":
        coeffs = list(self.coeffs)
        while coeffs and coeffs[-1].is_zero():
            coeffs.pop()
        return CyclicQuiverChain(coeffs, self.d)


def cyclic_d(c: CyclicQuiverChain, size_bound: Optional[int] = None) -> CyclicQuiverChain:
    """(del - uR): the u^-i part is del Gamma^i - R Gamma^(i+1)."""
    out = []
    for i in range(c.depth):
        out.append(boundary_del(c.coefficient(i), c.d, size_bound) - rotation_R(c.coefficient(i + 1), c.d))
    return CyclicQuiverChain(out, c.d).trimmed()


def del_k_cyclic(c: CyclicQuiverChain, k: int) -> CyclicQuiverChain:
    """del_k on every power of u; for even k the u^-i part of a degree-n quiver picks up (-1)^(n+i)."""
    coeffs = []
    for i, part in enumerate(c.coeffs):
        if k % 2 == 0:
            part = LinComb({q: x * (-1 if (degree_d(q, c.d) + i) % 2 else 1) for q, x in part.items()})
        coeffs.append(del_k(part, k, c.d))
    return CyclicQuiverChain(coeffs, c.d)


def total_d(chains: Dict[int, CyclicQuiverChain], max_arity: int,
            size_bound: Optional[int] = None) -> Dict[int, CyclicQuiverChain]:
    """(del - uR + del_2 + del_3 + ...) on a family indexed by arity, up to ``max_arity``."""
    out: Dict[int, CyclicQuiverChain] = {}
    for ell, chain in chains.items():
        if ell <= max_arity:
            out[ell] = cyclic_d(chain, size_bound)
    for ell, chain in chains.items():
        for k in range(2, max_arity - ell + 2):
            image = del_k_cyclic(chain, k)
            target = ell + k - 1
            out[target] = out[target] + image if target in out else image
    return {ell: c.trimmed() for ell, c in out.items() if not c.trimmed().is_zero()}


# ---------------------------------------------------------------------------
# Homology
# ---------------------------------------------------------------------------

@dataclass
class HomologyReport:
    ell: int
    d: int
    window: Tuple[int, int]
    cyclic: bool
    betti: Dict[int, int]
    dims: Dict[int, int]
    complete: bool
    size_bound: int

    def as_dict(self) -> Dict[str, Any]:
        return {
            "ell": self.ell, "d": self.d, "window": list(self.window), "cyclic": self.cyclic,
            "betti": {str(k): v for k, v in sorted(self.betti.items())},
            "dims": {str(k): v for k, v in sorted(self.dims.items())},
            "complete": self.complete, "size_bound": self.size_bound,
        }


def _cyclic_basis(cx: QuiverComplex, n: int) -> List[Tuple[TubeQuiver, int]]:
    out = []
    for deg, qs in cx.by_degree.items():
        if deg <= n and (n - deg) % 2 == 0:
            out.extend((q, (n - deg) // 2) for q in qs)
    return out


def _cyclic_image(cx: QuiverComplex, q: TubeQuiver, i: int) -> Dict[Any, Fraction]:
    row: Dict[Any, Fraction] = {}
    for q2, c in cx.boundary_of(q).items():
        accumulate(row, (q2, i), c)
    if i >= 1:
        for q2, c in _rotation_terms(q, cx.d).items():
            accumulate(row, (q2, i - 1), -c)
    return row


@log_function_calls(category="QUIVER")
def homology(ell: int, d: int, degree_window: Tuple[int, int], size_bound: int = 7,
             cyclic: bool = False, threads: int = 1) -> HomologyReport:
    """Betti numbers of (T, del) or (CT, del - uR) in the interior of the window.

    Ranks of the degree blocks are computed on ``threads`` workers.
    """
    lo, hi = degree_window
    if hi - lo < 2:
        raise WindowTooSmall(f"window {degree_window} has no interior degree")
    cx = get_complex(ell, d, size_bound, threads)

    def basis(n: int) -> List[Any]:
        if cyclic:
            return _cyclic_basis(cx, n)
        return [(q, 0) for q in cx.by_degree.get(n, [])]

    def rank(n: int) -> int:
        rows = [_cyclic_image(cx, q, i) if cyclic else {(q2, 0): c for q2, c in cx.boundary_of(q).items()}
                for q, i in basis(n)]
        return sparse_rank(rows)

    degrees = list(range(lo + 1, hi + 1))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        ranks = dict(zip(degrees, pool.map(rank, degrees)))
    betti: Dict[int, int] = {}
    dims: Dict[int, int] = {}
    for n in range(lo + 1, hi):
        dims[n] = len(basis(n))
        betti[n] = dims[n] - ranks[n] - ranks[n + 1]
    report = HomologyReport(ell, d, (lo, hi), cyclic, betti, dims, cx.complete, size_bound)
    logger.info(f"Homology l={ell} d={d} cyclic={cyclic}: {report.betti}")
    return report


# ---------------------------------------------------------------------------
# Paths between quivers, cocycles, serialization
# ---------------------------------------------------------------------------

def has_full_output_vertex(q: TubeQuiver, ell: Optional[int] = None) -> bool:
    """True when some internal vertex has ``ell`` (default: all) outgoing legs."""
    target = q.ell if ell is None else ell
    return any(outs >= target for outs in q.out_degrees().values())


def _strip_lower(c: LinComb[TubeQuiver]) -> LinComb[TubeQuiver]:
    return LinComb({q: x for q, x in c.items() if has_full_output_vertex(q)})


@log_function_calls(category="QUIVER")
def contract_expand_path(q1: TubeQuiver, q2: TubeQuiver, d: int, size_bound: Optional[int] = None,
                         max_rounds: int = 6) -> Tuple[LinComb[TubeQuiver], int]:
    """
    Chain G with del G = q1 + sign q2 modulo quivers without an l-output vertex.

    The unknowns grow breadth-first through single contraction moves; each
    round solves the linear system exactly. Returns (G, sign).
    """
    if q1 == q2:
        return LinComb(), -1
    if q1.ell != q2.ell:
        raise ValidationError("quivers with different numbers of outputs")
    cx = get_complex(q1.ell, d, size_bound or max_internal_vertices(q1.ell))
    frontier = [q1]
    seen_q = {q1}
    unknowns: List[TubeQuiver] = []
    for _ in range(max_rounds):
        new_frontier: List[TubeQuiver] = []
        for q in frontier:
            for p in sorted(contraction_terms(q, d).keys(), key=TubeQuiver.sort_key):
                if p in unknowns or not has_full_output_vertex(p):
                    continue
                unknowns.append(p)
                for q3 in sorted(cx.boundary_of(p).keys(), key=TubeQuiver.sort_key):
                    if q3 not in seen_q and has_full_output_vertex(q3):
                        seen_q.add(q3)
                        new_frontier.append(q3)
        for sign in (1, -1):
            target = LinComb({q1: 1}) + LinComb({q2: sign})
            found = solve_linear_map(unknowns, lambda p: _strip_lower(cx.boundary_of(p)), target)
            if found is not None:
                return found, sign
        if not new_frontier:
            break
        frontier = new_frontier
    raise BoundOverflow("no contraction-expansion path found within the search bound")


def cocycle_s_adjacent(q: TubeQuiver) -> int:
    """1 when the cycle vertex closest to o_1 is the one joined to the source."""
    leaves_before = 0
    for k, forest in enumerate(q.trees):
        count = sum(_leaf_count(n) for n in forest)
        if leaves_before <= q.first < leaves_before + count:
            return 1 if k == 0 else 0
        leaves_before += count
    return 0


def _leaf_count(node: Node) -> int:
    return 1 if not node[1] else sum(_leaf_count(c) for c in node[1])


def pair_with_cocycle(c: LinComb[TubeQuiver]) -> Fraction:
    return sum((x for q, x in c.items() if cocycle_s_adjacent(q)), Fraction(0))


def serialize_quiver(q: TubeQuiver) -> Dict[str, Any]:
    """JSON adjacency-plus-ribbon form with the canonical orientation word."""
    rq = q._layout
    return {
        "ell": q.ell,
        "vertices": [
            {"name": v, "kind": rq.kinds[v], "label": rq.labels.get(v),
             "rotation": [list(h) for h in rq.rotation[v]]}
            for v in sorted(rq.kinds)
        ],
        "edges": [{"name": n, "tail": t, "head": h} for n, (t, h) in sorted(rq.edges.items())],
        "orientation": list(q.canonical_symbols),
    }


def deserialize_quiver(doc: Dict[str, Any], d: int) -> Tuple[TubeQuiver, int]:
    """Reads the JSON form; returns the canonical quiver and the orientation sign."""
    try:
        kinds = {v["name"]: v["kind"] for v in doc["vertices"]}
        labels = {v["name"]: v["label"] for v in doc["vertices"] if v.get("label") is not None}
        rotation = {v["name"]: [tuple(h) for h in v["rotation"]] for v in doc["vertices"]}
        edges = {e["name"]: (e["tail"], e["head"]) for e in doc["edges"]}
        symbols = doc["orientation"]
    except (KeyError, TypeError) as e:
        raise ValidationError(f"malformed quiver document: {e}") from e
    rq = RibbonQuiver(kinds, edges, rotation, labels)  # type: ignore[arg-type]
    if sorted(symbols) != sorted(list(kinds) + list(edges)):
        raise ValidationError("orientation must list every vertex and edge once")
    return oriented_term(rq, symbols, 1, d)


def chain_to_json(c: LinComb[TubeQuiver]) -> List[Dict[str, Any]]:
    return [{"coeff": str(x), "quiver": serialize_quiver(q)}
            for q, x in sorted(c.items(), key=lambda qx: qx[0].sort_key())]


def chain_from_json(items: Iterable[Dict[str, Any]], d: int) -> LinComb[TubeQuiver]:
    acc: Dict[TubeQuiver, Fraction] = {}
    for item in items:
        q, s = deserialize_quiver(item["quiver"], d)
        accumulate(acc, q, Fraction(item["coeff"]) * s)
    return LinComb(acc)
