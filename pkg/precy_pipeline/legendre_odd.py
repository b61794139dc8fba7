"""
Odd Legendre transform between polyvector-field series and form series.

Calculations happen in the tensor algebra: a p-vector is written
(1/p!) gamma_p^I alpha_I summed over ordered index words I, with gamma_p
antisymmetric. For p >= 3 the tensor pairs with the word in reverse order
(the outermost letters contract first); gamma_1 and gamma_2 pair straight.
Forms pair straight in every degree. Substitutions alpha_i -> f_i(beta)
are algebra maps of the free algebra. Antisymmetrizing at the end lands in the exterior algebra,
which is where the Schouten-Nijenhuis bracket and the de Rham differential
are computed.

Coefficients are sympy expressions, rational numbers or polynomials in the
base coordinates x0, x1, ...
"""

import json
import logging
from dataclasses import dataclass, field
from itertools import permutations, product
from math import factorial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from precy_pipeline.logger import (
    InconsistentSystem, SingularMatrixError, ValidationError, log_function_calls,
)

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]
Terms = Dict[Word, sp.Expr]


def base_symbols(dim: int) -> List[sp.Symbol]:
    return list(sp.symbols(f"x0:{dim}"))


def _clean(terms: Terms) -> Terms:
    out = {}
    for w, c in terms.items():
        c = sp.simplify(c)
        if c != 0:
            out[w] = c
    return out


def _perm_sign(word: Word) -> Tuple[int, Word]:
    """Sign of sorting ``word``; 0 when an index repeats."""
    if len(set(word)) != len(word):
        return 0, word
    sign = 1
    items = list(word)
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


def antisymmetric_tensor(dim: int, p: int, values: Dict[Word, Any]) -> Terms:
    """Full antisymmetric p-tensor from its values on increasing index words."""
    out: Terms = {}
    for key, v in values.items():
        if len(key) != p or list(key) != sorted(set(key)) or any(not 0 <= k < dim for k in key):
            raise ValidationError(f"antisymmetric data needs increasing indices below {dim}, got {key}")
        for perm in permutations(range(p)):
            w = tuple(key[i] for i in perm)
            s, _ = _perm_sign(w)
            out[w] = sp.nsimplify(v) * s
    return out


def is_antisymmetric(terms: Terms) -> bool:
    for w, c in terms.items():
        s, key = _perm_sign(w)
        if s == 0 or sp.simplify(terms.get(key, 0) * s - c) != 0:
            return False
    return True


# ---------------------------------------------------------------------------
# Free algebra series
# ---------------------------------------------------------------------------

@dataclass
class FreeSeries:
    """Element of the tensor algebra on ``dim`` generators, truncated by word length."""

    dim: int
    terms: Terms = field(default_factory=dict)

    @classmethod
    def generator(cls, dim: int, i: int) -> "FreeSeries":
        return cls(dim, {(i,): sp.Integer(1)})

    def __add__(self, other: "FreeSeries") -> "FreeSeries":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return FreeSeries(self.dim, {w: c for w, c in out.items() if c != 0})

    def __sub__(self, other: "FreeSeries") -> "FreeSeries":
        return self + other.scaled(-1)

    def scaled(self, s: Any) -> "FreeSeries":
        return FreeSeries(self.dim, {w: c * s for w, c in self.terms.items() if c * s != 0})

    def mul(self, other: "FreeSeries", order: int) -> "FreeSeries":
        out: Terms = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                if len(w1) + len(w2) <= order:
                    w = w1 + w2
                    out[w] = out.get(w, 0) + c1 * c2
        return FreeSeries(self.dim, {w: c for w, c in out.items() if c != 0})

    def degree_part(self, p: int) -> Terms:
        return {w: c for w, c in self.terms.items() if len(w) == p}

    def truncated(self, order: int) -> "FreeSeries":
        return FreeSeries(self.dim, {w: c for w, c in self.terms.items() if len(w) <= order})

    def simplified(self) -> "FreeSeries":
        return FreeSeries(self.dim, _clean(self.terms))

    def substitute(self, images: Sequence["FreeSeries"], order: int) -> "FreeSeries":
        """Replaces generator i by images[i]; products are truncated at ``order``."""
        out = FreeSeries(images[0].dim if images else self.dim)
        cache: Dict[Word, FreeSeries] = {(): FreeSeries(out.dim, {(): sp.Integer(1)})}
        for w in sorted(self.terms, key=len):
            if w not in cache:
                prefix = cache.get(w[:-1])
                if prefix is None:
                    prefix = FreeSeries(out.dim, {(): sp.Integer(1)})
                    for i in w[:-1]:
                        prefix = prefix.mul(images[i], order)
                    cache[w[:-1]] = prefix
                cache[w] = prefix.mul(images[w[-1]], order)
            out = out + cache[w].scaled(self.terms[w])
        return out

    def antisymmetrized(self) -> "Grassmann":
        out: Terms = {}
        for w, c in self.terms.items():
            s, key = _perm_sign(w)
            if s:
                out[key] = out.get(key, 0) + c * s
        return Grassmann(self.dim, {w: c for w, c in out.items() if sp.simplify(c) != 0})


# ---------------------------------------------------------------------------
# Exterior algebra over polynomial (or rational) coefficients
# ---------------------------------------------------------------------------

@dataclass
class Grassmann:
    """Exterior algebra element; keys are increasing index tuples."""

    dim: int
    terms: Terms = field(default_factory=dict)

    def __add__(self, other: "Grassmann") -> "Grassmann":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return Grassmann(self.dim, {w: c for w, c in out.items() if sp.simplify(c) != 0})

    def scaled(self, s: Any) -> "Grassmann":
        return Grassmann(self.dim, {w: c * s for w, c in self.terms.items() if c * s != 0})

    def __mul__(self, other: "Grassmann") -> "Grassmann":
        out: Terms = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                s, key = _perm_sign(w1 + w2)
                if s:
                    out[key] = out.get(key, 0) + s * c1 * c2
        return Grassmann(self.dim, {w: c for w, c in out.items() if sp.simplify(c) != 0})

    def odd_derivative(self, i: int) -> "Grassmann":
        out: Terms = {}
        for w, c in self.terms.items():
            if i in w:
                n = w.index(i)
                rest = w[:n] + w[n + 1:]
                out[rest] = out.get(rest, 0) + c * (-1) ** n
        return Grassmann(self.dim, out)

    def x_derivative(self, x: sp.Symbol) -> "Grassmann":
        return Grassmann(self.dim, {w: sp.diff(c, x) for w, c in self.terms.items() if sp.diff(c, x) != 0})

    def homogeneous(self, p: int) -> "Grassmann":
        return Grassmann(self.dim, {w: c for w, c in self.terms.items() if len(w) == p})

    def degrees(self) -> List[int]:
        return sorted({len(w) for w in self.terms})

    def is_zero(self) -> bool:
        return all(sp.simplify(c) == 0 for c in self.terms.values())


def _generator(dim: int, i: int) -> Grassmann:
    return Grassmann(dim, {(i,): sp.Integer(1)})


# ---------------------------------------------------------------------------
# Series types
# ---------------------------------------------------------------------------

@dataclass
class PolyvectorSeries:
    """gamma = sum_p (1/p!) gamma_p^I alpha_I; components are full tensors, read reversed for p >= 3."""

    dim: int
    components: Dict[int, Terms] = field(default_factory=dict)

    @classmethod
    def from_data(cls, dim: int, data: Dict[int, Any]) -> "PolyvectorSeries":
        """p = 2 may be given as a matrix; higher p as {increasing word: value}."""
        comps: Dict[int, Terms] = {}
        for p, value in data.items():
            if p == 1:
                comps[1] = {(i,): sp.nsimplify(v) for i, v in enumerate(value) if v != 0}
            elif p == 2 and not isinstance(value, dict):
                comps[2] = {(i, j): sp.nsimplify(value[i][j])
                            for i in range(dim) for j in range(dim) if value[i][j] != 0}
            else:
                comps[p] = antisymmetric_tensor(dim, p, value)
        return cls(dim, comps)

    @property
    def order(self) -> int:
        return max(self.components, default=0)

    def gamma2_matrix(self) -> sp.Matrix:
        g = self.components.get(2, {})
        return sp.Matrix(self.dim, self.dim, lambda i, j: g.get((i, j), 0))

    def as_series(self) -> FreeSeries:
        """The antisymmetric embedding into the tensor algebra."""
        terms: Terms = {}
        for p, comp in self.components.items():
            for w, c in comp.items():
                word = w[::-1] if p >= 3 else w
                terms[word] = terms.get(word, 0) + sp.Rational(1, factorial(p)) * c
        return FreeSeries(self.dim, terms)

    def as_grassmann(self) -> Grassmann:
        return self.as_series().antisymmetrized()

    def scaled_by_degree(self, weight: Any) -> "PolyvectorSeries":
        return PolyvectorSeries(self.dim, {
            p: {w: c * weight(p) for w, c in comp.items()}
            for p, comp in self.components.items() if weight(p) != 0
        })


@dataclass
class FormSeries:
    """lambda = sum_p (1/p!) lambda^p_I beta^I."""

    dim: int
    components: Dict[int, Terms] = field(default_factory=dict)

    @classmethod
    def from_series(cls, s: FreeSeries) -> "FormSeries":
        comps: Dict[int, Terms] = {}
        for w, c in s.terms.items():
            comps.setdefault(len(w), {})[w] = c * factorial(len(w))
        return cls(s.dim, {p: _clean(t) for p, t in comps.items() if _clean(t)})

    def as_series(self) -> FreeSeries:
        terms: Terms = {}
        for p, comp in self.components.items():
            for w, c in comp.items():
                terms[w] = terms.get(w, 0) + sp.Rational(1, factorial(p)) * c
        return FreeSeries(self.dim, terms)

    def as_grassmann(self) -> Grassmann:
        return self.as_series().antisymmetrized()

    def lambda2_matrix(self) -> sp.Matrix:
        g = self.components.get(2, {})
        return sp.Matrix(self.dim, self.dim, lambda i, j: g.get((i, j), 0))


# ---------------------------------------------------------------------------
# The transform
# ---------------------------------------------------------------------------

def slot_derivative(series: FreeSeries, i: int, slot: int) -> FreeSeries:
    """
    Removes alpha_i from position ``slot`` of every length-p word holding it
    there, with weight p (-1)^slot.

    On antisymmetric coefficients every slot gives the same result.
    """
    terms: Terms = {}
    for w, c in series.terms.items():
        if len(w) > slot and w[slot] == i:
            rest = w[:slot] + w[slot + 1:]
            terms[rest] = terms.get(rest, 0) + c * len(w) * (-1) ** slot
    return FreeSeries(series.dim, {w: c for w, c in terms.items() if c != 0})


def odd_derivative(gamma: PolyvectorSeries, i: int) -> FreeSeries:
    """d gamma / d alpha_i: the slot rule at slot 0 of the embedded series."""
    return slot_derivative(gamma.as_series(), i, 0)


def fiberwise_derivative(gamma: PolyvectorSeries) -> List[FreeSeries]:
    """beta^i = gamma_2^(ij) alpha_j + (gamma_3^(ijk) / 2!) alpha_j alpha_k + ..."""
    return [odd_derivative(gamma, i).simplified() for i in range(gamma.dim)]


def _inverse(matrix: sp.Matrix) -> sp.Matrix:
    det = sp.simplify(matrix.det())
    if det == 0:
        raise SingularMatrixError("gamma_2 is not invertible")
    return sp.simplify(matrix.inv())


@log_function_calls(category="LEGENDRE")
def invert_fiber_map(gamma: PolyvectorSeries, order: Optional[int] = None) -> List[FreeSeries]:
    """
    f with beta(f(beta)) = beta through ``order``, by the fixed-point iteration
    f = M (beta - sum_(p>=3) gamma_p^(.J) f_J / (p-1)!), M = gamma_2^-1.
    """
    if gamma.components.get(1):
        raise ValidationError("the fiber map is inverted around a critical point: gamma_1 must vanish")
    n = gamma.dim
    order = order or max(gamma.order, 2)
    M = _inverse(gamma.gamma2_matrix())
    beta = [FreeSeries.generator(n, i) for i in range(n)]
    higher = [FreeSeries(n, {w: c for w, c in b.terms.items() if len(w) >= 2})
              for b in fiberwise_derivative(gamma)]
    f = [lin_combination(M, i, beta) for i in range(n)]
    for _ in range(order):
        corrections = [h.substitute(f, order) for h in higher]
        residual = [beta[j] - corrections[j] for j in range(n)]
        f = [lin_combination(M, i, residual).truncated(order).simplified() for i in range(n)]
    return f


def lin_combination(M: sp.Matrix, i: int, vectors: Sequence[FreeSeries]) -> FreeSeries:
    out = FreeSeries(vectors[0].dim)
    for j, v in enumerate(vectors):
        if M[i, j] != 0:
            out = out + v.scaled(M[i, j])
    return out


def energy(gamma: PolyvectorSeries) -> PolyvectorSeries:
    """e_gamma = alpha_i d gamma / d alpha_i - gamma: degree p scaled by p - 1."""
    return gamma.scaled_by_degree(lambda p: p - 1)


def energy_by_derivatives(gamma: PolyvectorSeries) -> FreeSeries:
    """The same energy computed literally, for cross-checking."""
    series = gamma.as_series()
    total = FreeSeries(gamma.dim)
    order = max(gamma.order, 1)
    for i in range(gamma.dim):
        total = total + FreeSeries.generator(gamma.dim, i).mul(odd_derivative(gamma, i), order)
    return (total - series).simplified()


@log_function_calls(category="LEGENDRE")
def legendre(gamma: PolyvectorSeries, order: Optional[int] = None) -> FormSeries:
    """lambda = e_gamma(alpha -> f(beta)); the quadratic part is (gamma_2^T)^-1."""
    order = order or max(gamma.order, 2)
    f = invert_fiber_map(gamma, order)
    lam = energy(gamma).as_series().substitute(f, order).truncated(order)
    return FormSeries.from_series(lam.simplified())


def apply_form(lam: FormSeries, beta_of_alpha: Sequence[FreeSeries], order: int) -> FreeSeries:
    """(F gamma)(lambda): substitute beta = d gamma / d alpha into lambda."""
    return lam.as_series().substitute(beta_of_alpha, order).truncated(order)


@log_function_calls(category="LEGENDRE")
def inverse_legendre_implicit(gamma2: Any, lam: FormSeries, order: int) -> PolyvectorSeries:
    """
    Solves e_gamma = (F gamma)(lambda) for gamma_3..gamma_order, one degree
    at a time, with antisymmetric unknowns and the given gamma_2.
    """
    n = lam.dim
    gamma = PolyvectorSeries.from_data(n, {2: gamma2})
    G = gamma.gamma2_matrix()
    expected = _inverse(G.T)
    if sp.simplify(lam.lambda2_matrix() - expected) != sp.zeros(n, n):
        raise ValidationError("lambda_2 is not the inverse of gamma_2 under the pairing")
    for p in range(3, order + 1):
        keys = [k for k in product(range(n), repeat=p) if list(k) == sorted(set(k))]
        if not keys:
            continue
        unknowns = sp.symbols(f"g{p}_0:{len(keys)}")
        trial = dict(gamma.components)
        trial[p] = antisymmetric_tensor(n, p, dict(zip(keys, unknowns)))
        candidate = PolyvectorSeries(n, trial)
        lhs = energy(candidate).as_series().degree_part(p)
        rhs = apply_form(lam, fiberwise_derivative(candidate), p).degree_part(p)
        equations = [sp.expand(lhs.get(w, 0) - rhs.get(w, 0)) for w in set(lhs) | set(rhs)]
        equations = [e for e in equations if e != 0]
        solutions = sp.linsolve(equations, list(unknowns)) if equations else {tuple([sp.Integer(0)] * len(keys))}
        if solutions == sp.S.EmptySet:
            raise InconsistentSystem(f"no gamma_{p} solves the order-{p} equation")
        values = next(iter(solutions))
        solved = {k: sp.simplify(v.subs({u: 0 for u in unknowns})) for k, v in zip(keys, values)}
        gamma.components[p] = {w: c for w, c in antisymmetric_tensor(n, p, solved).items() if c != 0}
        logger.debug(f"Solved gamma_{p}: {len(gamma.components[p])} non-zero entries")
    return gamma


def order3_closed_form(gamma2: Any, lam: FormSeries) -> Terms:
    """gamma_3^(ijk) = lambda^3_(abc) gamma_2^(ai) gamma_2^(bj) gamma_2^(ck) for symmetric gamma_2."""
    n = lam.dim
    G = sp.Matrix(gamma2)
    lam3 = lam.components.get(3, {})
    out: Terms = {}
    for i, j, k in product(range(n), repeat=3):
        total = sum((c * G[a, i] * G[b, j] * G[cc, k] for (a, b, cc), c in lam3.items()), sp.Integer(0))
        total = sp.simplify(total)
        if total != 0:
            out[(i, j, k)] = total
    return out


# ---------------------------------------------------------------------------
# Brackets and differentials on the exterior side
# ---------------------------------------------------------------------------

def sn_bracket(P: PolyvectorSeries, Q: PolyvectorSeries) -> Grassmann:
    """Schouten-Nijenhuis bracket, homogeneous parts bracketed pairwise."""
    xs = base_symbols(P.dim)
    Pg, Qg = P.as_grassmann(), Q.as_grassmann()
    out = Grassmann(P.dim)
    for p in Pg.degrees():
        for q in Qg.degrees():
            Pp, Qq = Pg.homogeneous(p), Qg.homogeneous(q)
            sign = (-1) ** ((p - 1) * (q - 1))
            for i, x in enumerate(xs):
                out = out + Pp.odd_derivative(i) * Qq.x_derivative(x)
                out = out + (Qq.odd_derivative(i) * Pp.x_derivative(x)).scaled(-sign)
    return out


def de_rham(form: Grassmann) -> Grassmann:
    """d = beta^i d/dx^i."""
    out = Grassmann(form.dim)
    for i, x in enumerate(base_symbols(form.dim)):
        out = out + _generator(form.dim, i) * form.x_derivative(x)
    return out


def interior(vector: Sequence[Any], form: Grassmann) -> Grassmann:
    out = Grassmann(form.dim)
    for i, v in enumerate(vector):
        if v != 0:
            out = out + form.odd_derivative(i).scaled(v)
    return out


def lie_derivative(vector: Sequence[Any], form: Grassmann) -> Grassmann:
    """Cartan: L_v = i_v d + d i_v."""
    return interior(vector, de_rham(form)) + de_rham(interior(vector, form))


def lie_derivative_check(gamma: PolyvectorSeries, gamma1: Sequence[Any],
                         order: Optional[int] = None) -> Grassmann:
    """(d - Lie_gamma1) of the transform; first order in gamma_1."""
    form = legendre(gamma, order).as_grassmann()
    return de_rham(form) + lie_derivative(gamma1, form).scaled(-1)


def variational_identity(gamma: PolyvectorSeries, change: PolyvectorSeries,
                         order: Optional[int] = None) -> FreeSeries:
    """
    d/dt L(gamma + t change) at t = 0 plus change(alpha -> f(beta)).

    Vanishes where the transform is stationary in the fiber variables.
    """
    order = order or max(gamma.order, change.order, 2)
    t = sp.Symbol("t")
    moved = PolyvectorSeries(gamma.dim, {
        p: {w: gamma.components.get(p, {}).get(w, 0) + t * change.components.get(p, {}).get(w, 0)
            for w in set(gamma.components.get(p, {})) | set(change.components.get(p, {}))}
        for p in set(gamma.components) | set(change.components)
    })
    lam_t = legendre(moved, order).as_series()
    derivative = FreeSeries(gamma.dim, {w: sp.diff(c, t).subs(t, 0) for w, c in lam_t.terms.items()})
    f = invert_fiber_map(gamma, order)
    pulled = change.as_series().substitute(f, order).truncated(order)
    return (derivative + pulled).simplified()


def fiber_roundtrip(gamma: PolyvectorSeries, order: Optional[int] = None) -> List[FreeSeries]:
    """beta(f(beta)) - beta, which vanishes through ``order``."""
    order = order or max(gamma.order, 2)
    f = invert_fiber_map(gamma, order)
    beta = fiberwise_derivative(gamma)
    return [(b.substitute(f, order).truncated(order) - FreeSeries.generator(gamma.dim, i)).simplified()
            for i, b in enumerate(beta)]


# ---------------------------------------------------------------------------
# Random instances and JSON
# ---------------------------------------------------------------------------

def random_polyvector(dim: int, order: int, seed: int = 0, low: int = -3, high: int = 3) -> PolyvectorSeries:
    """Symmetric invertible gamma_2 plus random antisymmetric higher terms."""
    rng = np.random.default_rng(seed)
    while True:
        a = rng.integers(low, high + 1, size=(dim, dim))
        g2 = a + a.T + np.eye(dim, dtype=int) * (2 * dim)
        if round(float(np.linalg.det(g2))) != 0:
            break
    data: Dict[int, Any] = {2: [[sp.Rational(int(g2[i, j]), 2) for j in range(dim)] for i in range(dim)]}
    for p in range(3, order + 1):
        keys = [k for k in product(range(dim), repeat=p) if list(k) == sorted(set(k))]
        if keys:
            vals = rng.integers(low, high + 1, size=len(keys))
            den = rng.integers(1, 4, size=len(keys))
            data[p] = {k: sp.Rational(int(v), int(q)) for k, v, q in zip(keys, vals, den)}
    return PolyvectorSeries.from_data(dim, data)


def _parse_word(key: str) -> Word:
    return tuple(int(ch) for ch in key) if "," not in key else tuple(int(x) for x in key.split(","))


def polyvector_from_json(text: str) -> PolyvectorSeries:
    """{"dim": N, "gamma": {"2": [[...]], "3": {"012": "1/2"}}}."""
    try:
        doc = json.loads(text)
        dim = int(doc["dim"])
        raw = doc["gamma"]
        data: Dict[int, Any] = {}
        for p_text, value in raw.items():
            p = int(p_text)
            if p == 2 and isinstance(value, list):
                data[2] = [[sp.Rational(str(x)) for x in row] for row in value]
            else:
                data[p] = {_parse_word(k): sp.Rational(str(v)) for k, v in value.items()}
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as e:
        raise ValidationError(f"malformed polyvector document: {e}") from e
    if 2 in data and isinstance(data[2], list) and (len(data[2]) != dim or any(len(r) != dim for r in data[2])):
        raise ValidationError("gamma_2 must be a dim x dim matrix")
    return PolyvectorSeries.from_data(dim, data)


def form_to_json(lam: FormSeries) -> str:
    out: Dict[str, Any] = {}
    for p, comp in sorted(lam.components.items()):
        if p == 2:
            M = lam.lambda2_matrix()
            out["2"] = [[str(M[i, j]) for j in range(lam.dim)] for i in range(lam.dim)]
        else:
            out[str(p)] = {"".join(map(str, w)) if lam.dim <= 10 else ",".join(map(str, w)): str(c)
                           for w, c in sorted(comp.items())}
    return json.dumps({"dim": lam.dim, "lambda": out}, sort_keys=True)
