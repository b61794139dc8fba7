"""
The circle as the boundary of the 2-simplex: golden values and end-to-end checks.

Conventions for the two structure maps. A directed edge P is
counter-clockwise when it runs along 0 -> 1 -> 2 -> 0. The two-output
cochain alpha is the symmetrization of

    alpha(P, <k>) = eps(P)/2 (delta_(b,k) e_k (x) P - delta_(a,k) P (x) e_k),   P: a -> b,

with eps = -1 on counter-clockwise P. The three-output m_(3) is non-zero only
on three empty angles sharing one label i, where it is -1/4 e_i (x) e_i (x) e_i;
this is the solution of [mu, m_(3)] + alpha o alpha = 0 under these sign rules.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from precy_pipeline.config import Settings
from precy_pipeline.core_algebra import LinComb, accumulate
from precy_pipeline.hochschild import (
    Angle, Config, HigherCochain, HochChain, NegCyclicChain, Outputs, configs_up_to, enumerate_configs,
    hoch_b, iota_fundamental, mu_cochain, necklace_bracket_components, necklace_compose,
    neg_cyclic_d, parse_hoch_chain, rotate_cochain, unit_cochain, zl_symmetrize,
)
from precy_pipeline.logger import ValidationError, log_computation, log_function_calls
from precy_pipeline.nct import (
    GammaTower, bubble_cochain, cochain_from_json, config_from_json, domain, required_inputs,
)
from precy_pipeline.pathcat import (
    COUNTER_CLOCKWISE, Necklace, PathCategory, classify_orientation, identity, make_necklace,
)
from precy_pipeline.quiver import TubeQuiver, classify_edge_or_vertex
from precy_pipeline.quiver_eval import VerificationReport, VertexAssignment, default_assignment, evaluate_chain
from precy_pipeline.simplicial import OrderedComplex, filled_triangle, load_complex, triangle_boundary

logger = logging.getLogger(__name__)

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")


def load_fixture(name: str) -> Dict[str, Any]:
    path = os.path.join(FIXTURE_DIR, f"{name}.json")
    try:
        with open(path, "r") as f:
            data: Dict[str, Any] = json.load(f)
    except (IOError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read fixture {path}: {e}") from e
    return data


def _edge_sign(P: Necklace) -> int:
    """-1 on counter-clockwise edges, +1 on clockwise ones."""
    return -1 if classify_orientation(P) == COUNTER_CLOCKWISE else 1


def _alpha_first(config: Config) -> LinComb[Outputs]:
    """Double derivation on a single path: every visit of P to the empty region's object splits it."""
    first, second = config
    if len(first.inputs) != 1 or second.inputs:
        return LinComb()
    P = first.inputs[0]
    k = second.label
    sign = _edge_sign(P)
    n = len(P.beads)
    terms: Dict[Outputs, Fraction] = {}
    for t in range(n + 1):
        at = P.beads[t - 1].target if t else P.source
        if at != k:
            continue
        head = make_necklace(P.beads[:t], P.source)
        tail = make_necklace(P.beads[t:], k)
        weight = Fraction(1, 2) if t in (0, n) else Fraction(1)
        accumulate(terms, (tail, head), sign * weight)
    return LinComb(terms)


def alpha_cochain(d: int = 1) -> HigherCochain:
    first = HigherCochain(2, 1, _alpha_first, d, name="alpha1")
    alpha = zl_symmetrize(first, d) * 2
    alpha.name = "alpha"
    return alpha


def _m3_first(config: Config) -> LinComb[Outputs]:
    """Empty angles with one common label i go to -1/4 e_i (x) e_i (x) e_i."""
    if any(a.inputs for a in config):
        return LinComb()
    labels = {a.label for a in config}
    if len(labels) != 1:
        return LinComb()
    e = identity(labels.pop())
    return LinComb.basis((e, e, e), Fraction(-1, 4))


def m3_cochain(d: int = 1) -> HigherCochain:
    return HigherCochain(3, 1, _m3_first, d, name="m3")


@dataclass
class CircleFixture:
    complex: OrderedComplex
    pc: PathCategory
    lam: NegCyclicChain
    alpha: HigherCochain
    m3: HigherCochain
    expected: Dict[str, Any] = field(default_factory=dict)

    @property
    def lam0(self) -> HochChain:
        return self.lam.coefficient(0)

    @property
    def lam1(self) -> HochChain:
        return self.lam.coefficient(1)


@log_function_calls(category="CIRCLE")
def build_circle(order: int = 1) -> CircleFixture:
    """Triangle boundary, lambda from the 1-simplex lifts, alpha and m_(3)."""
    K = triangle_boundary()
    lam = iota_fundamental(K, order=order)
    return CircleFixture(K, PathCategory(K), lam, alpha_cochain(), m3_cochain(), load_fixture("circle"))


def fixture_table(fixture: CircleFixture, key: str, arity: int) -> HigherCochain:
    return cochain_from_json(arity, fixture.expected[key], 1, key)


def _report(name: str, settings: Optional[Settings] = None) -> VerificationReport:
    if settings is None:
        return VerificationReport(name)
    return VerificationReport(name, bounds=settings.as_dict(), threads=settings.threads)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def check_fixture_consistency(fixture: CircleFixture) -> VerificationReport:
    """lambda, alpha and m_(3) as built agree with the serialized fixture."""
    report = _report("fixture")
    exp = fixture.expected
    for text, value in ((exp["lambda0"], fixture.lam0), (exp["lambda1"], fixture.lam1)):
        report.checked += 1
        if parse_hoch_chain(text) != value:
            report.failures.append((text, str(value)))
    for key, F, arity in (("alpha", fixture.alpha, 2), ("m3", fixture.m3, 3)):
        table = fixture_table(fixture, key, arity)
        configs = sorted({_config_of(row) for row in exp[key]}, key=str)
        report.compare(F, table, configs)
    K = load_complex(json.dumps(exp["complex"]))
    report.checked += 1
    if K.simplices != fixture.complex.simplices:
        report.failures.append(("complex", "simplices differ"))
    return report


def _config_of(row: Dict[str, Any]) -> Config:
    return config_from_json(row["config"])


def bubble_values(fixture: CircleFixture) -> Dict[int, Tuple[List[Tuple[str, LinComb[Outputs]]], LinComb[Outputs]]]:
    """Per object label: the bubble on each term of lambda_0 and the total."""
    out: Dict[int, Tuple[List[Tuple[str, LinComb[Outputs]]], LinComb[Outputs]]] = {}
    for k in fixture.pc.objects:
        config: Config = (Angle((), k),)
        parts: List[Tuple[str, LinComb[Outputs]]] = []
        total: LinComb[Outputs] = LinComb()
        for w, c in fixture.lam0.sorted_items():
            value = bubble_cochain(LinComb.basis(w, c), fixture.alpha)(config)
            parts.append((f"{c}*{w}", value))
            total = total + value
        out[k] = (parts, total)
    return out


@log_function_calls(category="CIRCLE")
def verify_alpha(fixture: CircleFixture, settings: Settings) -> Dict[str, VerificationReport]:
    """Closedness of alpha, its Z/2 symmetry and bubble(lambda_0, alpha) = 1."""
    pc = fixture.pc
    alpha = fixture.alpha
    closed = _report("[mu, alpha] = 0", settings)
    closed.compare(necklace_bracket_components(mu_cochain(), alpha), None, domain(pc, 2, settings))
    symmetric = _report("alpha is Z/2-invariant", settings)
    symmetric.compare(rotate_cochain(alpha), alpha, domain(pc, 2, settings))
    bubble = _report("bubble = unit", settings)
    bubble.compare(bubble_cochain(fixture.lam0, alpha), unit_cochain(), domain(pc, 1, settings))
    reports = {"closed": closed, "symmetric": symmetric, "bubble": bubble}
    log_computation("verify_alpha", settings.as_dict(), {k: r.passed for k, r in reports.items()})
    return reports


@dataclass
class M3Shortcut:
    x_lambda0: HigherCochain
    gamma1_lambda1: HigherCochain
    m3: HigherCochain
    edge_lambda0: HigherCochain


def _evaluated(c: LinComb[TubeQuiver], assign: VertexAssignment, lam: HochChain, name: str) -> HigherCochain:
    value = evaluate_chain(c, assign, lam)
    if value is None:
        value = HigherCochain.zero(3)
    value.name = name
    return value


@log_function_calls(category="CIRCLE")
def compute_m3_shortcut(fixture: CircleFixture, tower: GammaTower) -> M3Shortcut:
    """
    m_(3) = 1/2 (X(lambda_0) + Gamma^1_(3)(lambda_1)) evaluated from the tower.

    X is the vertex-type part of Gamma^0_(3); the edge-type part is kept
    separately since alpha kills every quiver whose e lands on an edge.
    """
    if tower.d != 1 or tower.lmax < 3:
        raise ValidationError("the circle shortcut needs a d = 1 tower through Gamma_(3)")
    assign = default_assignment({2: fixture.alpha}, tower.d)
    gamma3 = tower.component(3)
    vertex = LinComb({q: x for q, x in gamma3.coefficient(0).items() if classify_edge_or_vertex(q) == "vertex"})
    edge = gamma3.coefficient(0) - vertex
    x = _evaluated(vertex, assign, fixture.lam0, "X(lambda0)")
    g1 = _evaluated(gamma3.coefficient(1), assign, fixture.lam1, "Gamma1(lambda1)")
    m3 = (x + g1) * Fraction(1, 2)
    m3.name = "m3"
    return M3Shortcut(x, g1, m3, _evaluated(edge, assign, fixture.lam0, "edge(lambda0)"))


def mc_residual_m3(fixture: CircleFixture, m3: HigherCochain) -> HigherCochain:
    """[mu, m3] + alpha o alpha; zero exactly when m3 completes alpha to order three."""
    return necklace_bracket_components(mu_cochain(), m3) + necklace_compose(fixture.alpha, fixture.alpha)


def zero_input_configs(pc: PathCategory, arity: int) -> List[Config]:
    return enumerate_configs(pc, arity, 0, 0)


@log_function_calls(category="CIRCLE")
def verify_corollary(fixture: CircleFixture, settings: Settings, lmax: int = 6) -> Dict[str, Any]:
    """[mu, m3] + alpha o alpha = 0, [alpha, m3] = 0, degree-forced zeros and the lift's closedness."""
    pc = fixture.pc
    first = _report("[mu, m3] + alpha o alpha = 0", settings)
    first.compare(mc_residual_m3(fixture, fixture.m3), None, domain(pc, 3, settings))
    second = _report("[alpha, m3] = 0", settings)
    second.compare(necklace_bracket_components(fixture.alpha, fixture.m3), None,
                   configs_up_to(pc, 4, min(settings.max_tensor, 1), settings.winding_bound))
    audit = {ell: required_inputs(ell, 1) for ell in range(2, lmax + 1)}
    forced = [ell for ell, n in audit.items() if ell >= 4 and n < 0]
    lift = iota_fundamental(fixture.complex, order=2)
    lift_closed = neg_cyclic_d(lift).is_zero()
    result = {
        "mu_m3": first, "alpha_m3": second,
        "degree_audit": audit, "forced_zero": forced,
        "degree_audit_ok": forced == list(range(4, lmax + 1)),
        "lift_closed": lift_closed,
    }
    log_computation("verify_corollary", settings.as_dict(),
                    {"mu_m3": first.passed, "alpha_m3": second.passed, "lift_closed": lift_closed})
    return result


@dataclass
class BoundaryReport:
    chain: HochChain
    boundary: HochChain
    expected: HochChain
    b_squared_zero: bool

    @property
    def passed(self) -> bool:
        return self.boundary == self.expected and self.b_squared_zero


def verify_two_simplex_boundary() -> BoundaryReport:
    """b of the 2-simplex chain is 01[10] + 12[21] - 02[20]."""
    doc = load_fixture("triangle")
    K = load_complex(json.dumps(doc["complex"]))
    if K.simplices != filled_triangle().simplices:
        raise ValidationError("triangle fixture is not the filled 2-simplex")
    chain = parse_hoch_chain(doc["two_simplex_chain"])
    boundary = hoch_b(chain)
    return BoundaryReport(chain, boundary, parse_hoch_chain(doc["boundary"]), hoch_b(boundary).is_zero())
