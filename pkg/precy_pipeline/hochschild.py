"""
Reduced Hochschild chains, the Connes operator, negative cyclic chains and
higher Hochschild cochains with the necklace bracket.

Sign conventions. For a morphism a of cohomological degree |a| the shifted
degree is ||a|| = |a| - 1. The category is the dg category with
mu^1 = d and mu^2(a, b) = (-1)^|a| a*b (composition left to right), and no
higher mu. A chain a0[a1|...|an] has homological degree n - sum |a_i|.

A higher cochain with l outputs is evaluated on l angles A_1..A_l read
clockwise; output o_k sits between A_k and A_{k+1} and is a morphism from
start(A_{k+1}) to end(A_k). An empty angle carries the object of its region.
"""

import logging
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from precy_pipeline.core_algebra import LinComb, ScalarLike, accumulate, koszul_sign, lin_sum, to_scalar
from precy_pipeline.logger import BoundOverflow, ValidationError, log_function_calls, record_stats
from precy_pipeline.pathcat import (
    Necklace, PathCategory, compose_necklaces, differential, identity, parse_necklace,
)
from precy_pipeline.simplicial import OrderedComplex, SimplicialChain

logger = logging.getLogger(__name__)


def shifted(a: Necklace) -> int:
    return a.degree - 1


def _parity_sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


# ---------------------------------------------------------------------------
# The dg structure as maps on necklaces
# ---------------------------------------------------------------------------

def mu_values(inputs: Sequence[Necklace]) -> LinComb[Necklace]:
    """mu^1 and mu^2 of the path category; mu^k = 0 for k = 0 and k >= 3."""
    if len(inputs) == 1:
        return differential(LinComb.basis(inputs[0]))
    if len(inputs) == 2:
        a, b = inputs
        return LinComb.basis(compose_necklaces(a, b), _parity_sign(a.degree))
    return LinComb()


# ---------------------------------------------------------------------------
# Hochschild chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HochWord:
    """Cyclic word a0[a1|...|an] of composable necklaces."""

    terms: Tuple[Necklace, ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValidationError("a Hochschild word needs a0")
        n = len(self.terms)
        for k in range(n):
            a, b = self.terms[k], self.terms[(k + 1) % n]
            if a.target != b.source:
                raise ValidationError(f"{self} does not close up: {a} then {b}")

    @property
    def a0(self) -> Necklace:
        return self.terms[0]

    @property
    def bar(self) -> Tuple[Necklace, ...]:
        return self.terms[1:]

    @property
    def length(self) -> int:
        return len(self.terms) - 1

    @property
    def degree(self) -> int:
        return self.length - sum(a.degree for a in self.terms)

    @property
    def is_reduced(self) -> bool:
        return not any(a.is_identity for a in self.bar)

    def __str__(self) -> str:
        return f"{self.a0}[{'|'.join(str(a) for a in self.bar)}]"

    def __repr__(self) -> str:
        return str(self)


HochChain = LinComb[HochWord]


def hword(*terms: Necklace) -> HochWord:
    return HochWord(tuple(terms))


_TERM = re.compile(r"^\((\d+(?:/\d+)?)\)(.*)$")


def parse_hoch_word(text: str) -> HochWord:
    """``01*12[21|10]``, ``e0[]`` or a bare a0 such as ``012*20``."""
    text = text.strip()
    if "[" not in text:
        return HochWord((parse_necklace(text),))
    if not text.endswith("]"):
        raise ValidationError(f"bad Hochschild word {text!r}")
    head, body = text[:-1].split("[", 1)
    bar = [parse_necklace(t) for t in body.split("|")] if body.strip() else []
    return HochWord((parse_necklace(head),) + tuple(bar))


def parse_hoch_chain(text: str) -> HochChain:
    """Sums such as ``01[10] + 12[21] - (1/2)02[20]``."""
    acc: Dict[HochWord, Fraction] = {}
    for sign, term in re.findall(r"([+-]?)\s*([^+-]+)", text.replace(" ", "")):
        m = _TERM.match(term)
        coeff = to_scalar(m.group(1)) if m and m.group(1) else Fraction(1)
        word = parse_hoch_word(m.group(2) if m else term)
        accumulate(acc, word, -coeff if sign == "-" else coeff)
    return LinComb(acc)


def _b_word(w: HochWord) -> HochChain:
    a = w.terms
    n = len(a) - 1
    acc: Dict[HochWord, Fraction] = {}
    # blocks inside the bar
    prefix = 0
    for i in range(n):
        prefix += shifted(a[i])
        sign = _parity_sign(prefix)
        for k in (1, 2):
            if i + k > n:
                break
            for v, c in mu_values(a[i + 1:i + 1 + k]).items():
                if v.is_identity:
                    continue
                accumulate(acc, HochWord(a[:i + 1] + (v,) + a[i + 1 + k:]), sign * c)
    # blocks wrapping through a0: a_j..a_n, a_0..a_i
    for j in range(1, n + 2):
        tail = a[j:]
        for i in range(0, j):
            block = tail + a[:i + 1]
            if len(block) > 2:
                break
            before = sum(shifted(x) for x in a[:j])
            after = sum(shifted(x) for x in tail)
            sign = _parity_sign(before * after)
            for v, c in mu_values(block).items():
                accumulate(acc, HochWord((v,) + a[i + 1:j]), sign * c)
    return LinComb(acc)


def hoch_b(c: HochChain) -> HochChain:
    """Hochschild differential on reduced chains, homological degree -1."""
    return c.apply(_b_word)


def _connes_word(w: HochWord) -> HochChain:
    a = w.terms
    if a[0].is_identity:
        return LinComb()
    acc: Dict[HochWord, Fraction] = {}
    for i in range(len(a)):
        moved, rest = a[i:], a[:i]
        sign = _parity_sign(sum(map(shifted, moved)) * sum(map(shifted, rest)))
        accumulate(acc, HochWord((identity(a[i].source),) + moved + rest), Fraction(sign))
    return LinComb(acc)


def connes_B(c: HochChain) -> HochChain:
    """Normalized Connes operator, homological degree +1."""
    return c.apply(_connes_word)


def chain_degree(c: HochChain) -> Optional[int]:
    degrees = {w.degree for w in c.keys()}
    if len(degrees) > 1:
        raise ValidationError(f"chain is not homogeneous: degrees {sorted(degrees)}")
    return degrees.pop() if degrees else None


@dataclass
class NegCyclicChain:
    """lambda_0 + lambda_1 u + ... + lambda_N u^N, truncated at order N."""

    coeffs: List[HochChain]
    order: int

    def __post_init__(self) -> None:
        if self.order < 0:
            raise ValidationError("u-order must be >= 0")
        self.coeffs = (list(self.coeffs) + [LinComb()] * (self.order + 1))[:self.order + 1]

    def coefficient(self, i: int) -> HochChain:
        return self.coeffs[i] if 0 <= i <= self.order else LinComb()

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def truncated(self, order: int) -> "NegCyclicChain":
        return NegCyclicChain(self.coeffs[:order + 1], order)

    def __sub__(self, other: "NegCyclicChain") -> "NegCyclicChain":
        order = min(self.order, other.order)
        return NegCyclicChain([self.coefficient(i) - other.coefficient(i) for i in range(order + 1)], order)

    def __str__(self) -> str:
        return " + ".join(f"({c})u^{i}" for i, c in enumerate(self.coeffs) if c) or "0"


def neg_cyclic_d(c: NegCyclicChain) -> NegCyclicChain:
    """(b + uB) coefficient-wise; the u^i part is b(lambda_i) + B(lambda_{i-1})."""
    out = [hoch_b(c.coefficient(0))]
    for i in range(1, c.order + 1):
        out.append(hoch_b(c.coefficient(i)) + connes_B(c.coefficient(i - 1)))
    return NegCyclicChain(out, c.order)


def iota_one_simplex(source: int, target: int, order: int, tag: Optional[str] = None) -> NegCyclicChain:
    """
    Negative cyclic lift of the 1-simplex (source target).

    The u^k coefficient is (-1)^k k! (st)[(ts)|(st)|...|(ts)] with 2k+1 bar
    entries. B of the u^(k-1) word returns each of its k rotations starting
    at s, so b + uB only cancels with the factorial. The lift of one edge
    still has b = e_s[] - e_t[] at u^0.
    """
    forward = parse_necklace(f"{source}{target}" + (f"_{tag}" if tag else ""))
    if forward.beads[0].inverse:
        raise ValidationError("iota_one_simplex expects source < target")
    backward = Necklace(target, source, (forward.beads[0].inverted(),))
    coeffs: List[HochChain] = []
    for k in range(order + 1):
        bar = (backward, forward) * k + (backward,)
        coeffs.append(LinComb.basis(HochWord((forward,) + bar), (-1) ** k * math.factorial(k)))
    return NegCyclicChain(coeffs, order)


@log_function_calls(category="HOCHSCHILD")
def iota_fundamental(K: OrderedComplex, chain: Optional[SimplicialChain] = None,
                     order: int = 2) -> NegCyclicChain:
    """Sum of 1-simplex lifts along a fundamental 1-cycle of a 1-dimensional complex."""
    chain = chain or K.fundamental_chain
    if chain is None:
        raise ValidationError("complex has no fundamental chain")
    if K.dim != 1 or chain.degree != 1:
        raise ValidationError("iota_fundamental is implemented for 1-dimensional complexes")
    coeffs: List[HochChain] = [LinComb() for _ in range(order + 1)]
    for s, c in chain.terms.sorted_items():
        lift = iota_one_simplex(s.vertices[0], s.vertices[1], order, s.tag)
        for k in range(order + 1):
            coeffs[k] = coeffs[k] + lift.coeffs[k] * c
    return NegCyclicChain(coeffs, order)


# ---------------------------------------------------------------------------
# Higher cochains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Angle:
    """Inputs placed between two consecutive outputs; ``label`` names an empty region."""

    inputs: Tuple[Necklace, ...] = ()
    label: Optional[int] = None

    def __post_init__(self) -> None:
        if self.inputs:
            if self.label is not None:
                raise ValidationError("a non-empty angle carries no label")
            for a, b in zip(self.inputs, self.inputs[1:]):
                if a.target != b.source:
                    raise ValidationError(f"angle inputs {a}, {b} are not composable")
        elif self.label is None:
            raise ValidationError("an empty angle needs an object label")

    @property
    def start(self) -> int:
        return self.inputs[0].source if self.inputs else self.label  # type: ignore[return-value]

    @property
    def end(self) -> int:
        return self.inputs[-1].target if self.inputs else self.label  # type: ignore[return-value]

    @property
    def weight(self) -> int:
        return sum(shifted(x) for x in self.inputs)

    def split(self, p: int) -> Tuple["Angle", "Angle"]:
        """Cuts after the first p inputs; empty halves get the object at the cut."""
        obj = self.inputs[p - 1].target if p > 0 else self.start
        return make_angle(self.inputs[:p], obj), make_angle(self.inputs[p:], obj)

    def __str__(self) -> str:
        if not self.inputs:
            return f"<{self.label}>"
        return "(" + ",".join(str(x) for x in self.inputs) + ")"


def make_angle(inputs: Sequence[Necklace], obj: Optional[int] = None) -> Angle:
    return Angle(tuple(inputs)) if inputs else Angle((), obj)


def join_angles(left: Angle, right: Angle) -> Angle:
    if left.end != right.start:
        raise ValidationError(f"angles {left} and {right} do not meet")
    if not left.inputs and not right.inputs:
        return left
    return Angle(left.inputs + right.inputs)


Config = Tuple[Angle, ...]
Outputs = Tuple[Necklace, ...]
Rule = Callable[[Config], LinComb[Outputs]]


def config_str(config: Config) -> str:
    return " ".join(str(a) for a in config)


def outputs_str(outputs: Outputs) -> str:
    return " ⊗ ".join(str(o) for o in outputs)


def output_slots(config: Config) -> List[Tuple[int, int]]:
    """(source, target) of each output for the given angles."""
    n = len(config)
    return [(config[(k + 1) % n].start, config[k].end) for k in range(n)]


class HigherCochain:
    """
    Cochain with ``arity`` cyclically ordered outputs, given by a rule.

    ``lie_degree`` is the degree in the shifted Lie algebra (1 for mu, alpha
    and the higher structure maps). Reduced cochains vanish on identity inputs.
    """

    def __init__(self, arity: int, lie_degree: int, rule: Rule, d: int = 1,
                 reduced: bool = True, name: str = "") -> None:
        if arity < 1:
            raise ValidationError("a cochain needs at least one output")
        self.arity = arity
        self.lie_degree = lie_degree
        self.rule = rule
        self.d = d
        self.reduced = reduced
        self.name = name

    def __call__(self, config: Config) -> LinComb[Outputs]:
        if len(config) != self.arity:
            raise ValidationError(f"{self.name or 'cochain'} has {self.arity} angles, got {len(config)}")
        if self.reduced and any(x.is_identity for a in config for x in a.inputs):
            return LinComb()
        return self.rule(config)

    def __repr__(self) -> str:
        return f"HigherCochain({self.name or '?'}, arity={self.arity}, lie_degree={self.lie_degree})"

    @classmethod
    def zero(cls, arity: int, lie_degree: int = 1, d: int = 1) -> "HigherCochain":
        return cls(arity, lie_degree, lambda c: LinComb(), d, name="0")

    @classmethod
    def from_table(cls, arity: int, lie_degree: int, table: Dict[Config, LinComb[Outputs]],
                   d: int = 1, name: str = "") -> "HigherCochain":
        frozen = {c: v for c, v in table.items() if v}
        return cls(arity, lie_degree, lambda c: frozen.get(c, LinComb()), d, name=name)

    def _check(self, other: "HigherCochain") -> None:
        if other.arity != self.arity:
            raise ValidationError("cannot add cochains of different arity")

    def __add__(self, other: "HigherCochain") -> "HigherCochain":
        self._check(other)
        return HigherCochain(self.arity, self.lie_degree, lambda c: self(c) + other(c), self.d,
                             self.reduced and other.reduced, f"({self.name}+{other.name})")

    def __sub__(self, other: "HigherCochain") -> "HigherCochain":
        return self + other * -1

    def __mul__(self, scalar: ScalarLike) -> "HigherCochain":
        s = to_scalar(scalar)
        return HigherCochain(self.arity, self.lie_degree, lambda c: self(c) * s, self.d,
                             self.reduced, f"{s}*{self.name}")

    __rmul__ = __mul__

    def __neg__(self) -> "HigherCochain":
        return self * -1

    def tabulate(self, configs: Iterable[Config], max_beads: Optional[int] = None) -> Dict[Config, LinComb[Outputs]]:
        """Values on the given configurations; BoundOverflow if outputs exceed ``max_beads``."""
        table: Dict[Config, LinComb[Outputs]] = {}
        for c in configs:
            value = self(c)
            if not value:
                continue
            if max_beads is not None and any(len(o.beads) > max_beads for outs in value.keys() for o in outs):
                raise BoundOverflow(f"{self.name} at {config_str(c)} leaves the bead bound {max_beads}")
            table[c] = value
        return table


def differences(F: HigherCochain, G: HigherCochain, configs: Iterable[Config]) -> List[Tuple[Config, LinComb[Outputs]]]:
    """Configurations on which F and G disagree, with F - G there."""
    out = []
    for c in configs:
        diff = F(c) - G(c)
        if diff:
            out.append((c, diff))
    return out


def mu_cochain(d: int = 1) -> HigherCochain:
    """The dg structure mu = mu^1 + mu^2 as a one-output cochain (not reduced)."""

    def rule(config: Config) -> LinComb[Outputs]:
        inputs = config[0].inputs
        return LinComb({(v,): c for v, c in mu_values(inputs).items()})

    return HigherCochain(1, 1, rule, d, reduced=False, name="mu")


def unit_cochain(d: int = 1) -> HigherCochain:
    """Zero inputs to the identity of the region: the unit of Hochschild cohomology."""

    def rule(config: Config) -> LinComb[Outputs]:
        angle = config[0]
        if angle.inputs:
            return LinComb()
        return LinComb.basis((identity(angle.label),))  # type: ignore[arg-type]

    return HigherCochain(1, -1, rule, d, name="1")


# ---------------------------------------------------------------------------
# The cyclic action
# ---------------------------------------------------------------------------

def rotation_sign(config: Config, outputs: Outputs, d: int) -> int:
    """
    Sign of the rotation taking F(A_2..A_l, A_1) to the value at A_1..A_l.

    Koszul sign of moving the last output to the front and the first angle's
    inputs to the back, times the extra (-1)^((d-1)(l-1)).
    """
    l = len(outputs)
    w_last = shifted(outputs[-1])
    w_rest = sum(shifted(o) for o in outputs[:-1])
    w_first = config[0].weight
    w_others = sum(a.weight for a in config[1:])
    return _parity_sign((d - 1) * (l - 1) + w_last * w_rest + w_first * w_others)


def rotate_cochain(F: HigherCochain, d: Optional[int] = None) -> HigherCochain:
    """Generator of the Z/l action: (tau F)(A_1..A_l) = sign * rot F(A_2..A_l, A_1)."""
    dd = F.d if d is None else d
    if F.arity == 1:
        return F

    def rule(config: Config) -> LinComb[Outputs]:
        rotated = config[1:] + config[:1]
        acc: Dict[Outputs, Fraction] = {}
        for outs, c in F(rotated).items():
            accumulate(acc, (outs[-1],) + outs[:-1], c * rotation_sign(config, outs, dd))
        return LinComb(acc)

    return HigherCochain(F.arity, F.lie_degree, rule, dd, F.reduced, f"tau({F.name})")


def zl_symmetrize(F: HigherCochain, d: Optional[int] = None) -> HigherCochain:
    """Projection (1/l) sum_k tau^k F onto the (Z/l, d)-invariants."""
    dd = F.d if d is None else d
    powers = [F]
    for _ in range(F.arity - 1):
        powers.append(rotate_cochain(powers[-1], dd))
    l = F.arity

    def rule(config: Config) -> LinComb[Outputs]:
        return lin_sum(P(config) for P in powers) * Fraction(1, l)

    return HigherCochain(F.arity, F.lie_degree, rule, dd, F.reduced, f"sym({F.name})")


# ---------------------------------------------------------------------------
# Necklace composition and brackets
# ---------------------------------------------------------------------------

def _raw_insertions(F: HigherCochain, G: HigherCochain, config: Config) -> LinComb[Outputs]:
    """Sum over F-angles r, G-outputs j and cut points of F(.., G(..)_j, ..)."""
    lF, lG = F.arity, G.arity
    acc: Dict[Outputs, Fraction] = {}
    for r in range(lF):
        before_r = sum(a.weight for a in config[:r])
        if lG == 1:
            host = config[r]
            n = len(host.inputs)
            for p in range(n + 1):
                for p2 in range(p, n + 1):
                    left, rest = host.split(p)
                    middle, right = rest.split(p2 - p)
                    sign = _parity_sign(G.lie_degree * (before_r + left.weight))
                    for (q,), cq in G((middle,)).items():
                        a_r = make_angle(left.inputs + (q,) + right.inputs)
                        f_config = config[:r] + (a_r,) + config[r + 1:]
                        for outs, cf in F(f_config).items():
                            accumulate(acc, outs, sign * cq * cf)
            continue
        first, last = config[r], config[r + lG - 1]
        middle_angles = config[r + 1:r + lG - 1]
        tail = config[r + lG:]
        for j in range(lG):
            for p in range(len(first.inputs) + 1):
                x_left, b_next = first.split(p)
                for p2 in range(len(last.inputs) + 1):
                    b_j, x_right = last.split(p2)
                    b = [None] * lG  # type: List[Optional[Angle]]
                    b[j] = b_j
                    b[(j + 1) % lG] = b_next
                    for t, angle in enumerate(middle_angles):
                        b[(j + 2 + t) % lG] = angle
                    g_config = tuple(b)  # type: ignore[arg-type]
                    head_w = sum(a.weight for a in g_config[:j + 1])  # type: ignore[union-attr]
                    tail_w = sum(a.weight for a in g_config[j + 1:])  # type: ignore[union-attr]
                    sign = _parity_sign(G.lie_degree * (before_r + x_left.weight) + head_w * tail_w)
                    for q, cq in G(g_config).items():  # type: ignore[arg-type]
                        a_r = make_angle(x_left.inputs + (q[j],) + x_right.inputs)
                        f_config = config[:r] + (a_r,) + tail
                        rest_q = [q[(j + 1 + t) % lG] for t in range(lG - 1)]
                        for o, cf in F(f_config).items():
                            outs = o[:r] + tuple(rest_q) + o[r:]
                            s = sign * _merge_sign(o, q, r, j) * _extraction_sign(
                                F.lie_degree + before_r + x_left.weight, o, q, j)
                            accumulate(acc, outs, s * cq * cf)
    return LinComb(acc)


def _merge_sign(o: Outputs, q: Outputs, r: int, j: int) -> int:
    """Koszul sign from (o_1..o_lF, q without q_j) to the composite output order."""
    lF, lG = len(o), len(q)
    natural = list(o) + [q[t] for t in range(lG) if t != j]
    q_index = {t: lF + (t if t < j else t - 1) for t in range(lG) if t != j}
    order = list(range(r)) + [q_index[(j + 1 + t) % lG] for t in range(lG - 1)] + list(range(r, lF))
    return koszul_sign(order, [shifted(x) for x in natural])


def _extraction_sign(passed: int, o: Outputs, q: Outputs, j: int) -> int:
    """
    Koszul sign of pulling the outputs of G other than q_j out in front of F.

    They pass F, everything left of the insertion point (``passed``) and the
    later outputs of G pass q_j; afterwards they sit in front of F's outputs.
    """
    w_rest = sum(shifted(x) for t, x in enumerate(q) if t != j)
    w_after = sum(shifted(x) for x in q[j + 1:])
    w_o = sum(shifted(x) for x in o)
    return _parity_sign(w_rest * (passed + w_o) + shifted(q[j]) * w_after)


def necklace_compose(F: HigherCochain, G: HigherCochain) -> HigherCochain:
    """
    F o G: one output of G plugged into one input slot of F.

    All insertion points and all rotations of the result are summed, weighted
    1/(lF lG). For one output each this is the Gerstenhaber composition.
    """
    if F.d != G.d:
        raise ValidationError("cochains of different dimension d")
    arity = F.arity + G.arity - 1
    raw = HigherCochain(arity, F.lie_degree + G.lie_degree,
                        lambda c: _raw_insertions(F, G, c), F.d, reduced=False,
                        name=f"raw({F.name}o{G.name})")
    weight = Fraction(1, F.arity * G.arity)
    if arity == 1:
        composite = raw
    else:
        powers = [raw]
        for _ in range(arity - 1):
            powers.append(rotate_cochain(powers[-1]))
        composite = HigherCochain(arity, raw.lie_degree,
                                  lambda c: lin_sum(P(c) for P in powers), F.d, reduced=False)
    reduced = F.reduced and G.reduced
    return HigherCochain(arity, F.lie_degree + G.lie_degree,
                         lambda c: composite(c) * weight, F.d, reduced, f"{F.name}o{G.name}")


def necklace_bracket_components(F: HigherCochain, G: HigherCochain) -> HigherCochain:
    """[F, G] = F o G - (-1)^(|F||G|) G o F in the shifted Lie grading."""
    sign = _parity_sign(F.lie_degree * G.lie_degree)
    bracket = necklace_compose(F, G) - necklace_compose(G, F) * sign
    bracket.name = f"[{F.name},{G.name}]"
    return bracket


def gerstenhaber_bracket(f: HigherCochain, g: HigherCochain) -> HigherCochain:
    if f.arity != 1 or g.arity != 1:
        raise ValidationError("the Gerstenhaber bracket takes one-output cochains")
    return necklace_bracket_components(f, g)


@dataclass
class CochainBundle:
    """Family of higher cochains indexed by the number of outputs."""

    components: Dict[int, HigherCochain] = field(default_factory=dict)
    d: int = 1
    symmetric: bool = False

    def component(self, l: int) -> Optional[HigherCochain]:
        return self.components.get(l)

    def arities(self) -> List[int]:
        return sorted(self.components)

    def __add__(self, other: "CochainBundle") -> "CochainBundle":
        merged = dict(self.components)
        for l, F in other.components.items():
            merged[l] = merged[l] + F if l in merged else F
        return CochainBundle(merged, self.d, self.symmetric and other.symmetric)

    def scaled_by_arity(self, weight: Callable[[int], ScalarLike]) -> "CochainBundle":
        return CochainBundle({l: F * weight(l) for l, F in self.components.items()
                              if to_scalar(weight(l))}, self.d, self.symmetric)


def necklace_bracket(F: CochainBundle, G: CochainBundle, max_arity: Optional[int] = None) -> CochainBundle:
    """Componentwise bracket; [F_i, G_j] lands in arity i + j - 1."""
    if F.d != G.d:
        raise ValidationError("bundles of different dimension d")
    parts: Dict[int, List[HigherCochain]] = {}
    for i, Fi in F.components.items():
        for j, Gj in G.components.items():
            l = i + j - 1
            if max_arity is not None and l > max_arity:
                continue
            parts.setdefault(l, []).append(necklace_bracket_components(Fi, Gj))
    out: Dict[int, HigherCochain] = {}
    for l, terms in parts.items():
        total = terms[0]
        for t in terms[1:]:
            total = total + t
        out[l] = total
    record_stats("necklace_brackets")
    return CochainBundle(out, F.d, F.symmetric and G.symmetric)


# ---------------------------------------------------------------------------
# Bounded input domains
# ---------------------------------------------------------------------------

def _angle_words(pc: PathCategory, count: int, size_bound: int) -> Iterator[Tuple[Necklace, ...]]:
    pool = [n for n in pc.all_morphisms(size_bound) if not n.is_identity]
    by_source: Dict[int, List[Necklace]] = {}
    for n in pool:
        by_source.setdefault(n.source, []).append(n)

    def extend(word: Tuple[Necklace, ...]) -> Iterator[Tuple[Necklace, ...]]:
        if len(word) == count:
            yield word
            return
        candidates = pool if not word else by_source.get(word[-1].target, [])
        for n in candidates:
            yield from extend(word + (n,))

    yield from extend(())


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@log_function_calls(category="HOCHSCHILD")
def enumerate_configs(pc: PathCategory, arity: int, n_inputs: int, size_bound: int) -> List[Config]:
    """All angle configurations with exactly ``n_inputs`` non-identity inputs."""
    configs: List[Config] = []
    for split in _compositions(n_inputs, arity):
        choices: List[List[Angle]] = []
        for m in split:
            if m == 0:
                choices.append([Angle((), obj) for obj in pc.objects])
            else:
                choices.append([Angle(w) for w in _angle_words(pc, m, size_bound)])
        configs.extend(product(*choices))
    record_stats("configs_enumerated", len(configs))
    return configs


def configs_up_to(pc: PathCategory, arity: int, max_inputs: int, size_bound: int) -> List[Config]:
    out: List[Config] = []
    for n in range(max_inputs + 1):
        out.extend(enumerate_configs(pc, arity, n, size_bound))
    return out


def enumerate_hoch_words(pc: PathCategory, degree: int, max_length: int, size_bound: int) -> List[HochWord]:
    """Reduced words a0[a1|...|an] of the given degree, n <= max_length."""
    pool = pc.all_morphisms(size_bound)
    bar_pool = [n for n in pool if not n.is_identity]
    by_source: Dict[int, List[Necklace]] = {}
    for n in bar_pool:
        by_source.setdefault(n.source, []).append(n)
    found: List[HochWord] = []

    def extend(word: Tuple[Necklace, ...], n: int) -> None:
        if len(word) - 1 == n:
            if word[-1].target == word[0].source:
                w = HochWord(word)
                if w.degree == degree:
                    found.append(w)
            return
        for x in by_source.get(word[-1].target, []):
            extend(word + (x,), n)

    for n in range(max_length + 1):
        for a0 in pool:
            extend((a0,), n)
    record_stats("hoch_words_enumerated", len(found))
    return sorted(found, key=str)
