"""
Noncommutative Legendre transform pipeline.

Gamma_(2) is built from two tube quivers, extended to the tower
Gamma_(3), Gamma_(4), ... by exact linear solves, and evaluated on
negative cyclic chains. From a chain lambda and a two-output cochain alpha
the inverse transform produces a pre-CY candidate m = mu + m_(2) + m_(3) + ...
and the forward transform recovers a chain from m.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from precy_pipeline.config import Settings, inputs_digest, load_checkpoint, save_checkpoint
from precy_pipeline.core_algebra import LinComb, accumulate, solve, solve_linear_map
from precy_pipeline.hochschild import (
    Angle, CochainBundle, Config, HigherCochain, HochChain, HochWord, NegCyclicChain, Outputs,
    configs_up_to, connes_B, enumerate_hoch_words, hoch_b, mu_cochain, necklace_bracket,
    necklace_bracket_components, output_slots, parse_hoch_word, unit_cochain,
)
from precy_pipeline.logger import (
    BoundOverflow, InconsistentSystem, ValidationError, log_computation, log_function_calls, record_stats,
)
from precy_pipeline.pathcat import PathCategory, parse_necklace
from precy_pipeline.quiver import (
    INTERNAL, OUTPUT, SOURCE, CyclicQuiverChain, Node, RibbonQuiver, TubeQuiver, canonicalize, chain_from_json,
    chain_from_ribbon, chain_to_json, contract_expand_path, cyclic_d, del_k_cyclic, get_complex,
    has_full_output_vertex, max_internal_vertices, pair_with_cocycle, rotation_R, symmetrize_zl, total_d,
)
from precy_pipeline.quiver_eval import (
    VerificationReport, VertexAssignment, bubble_quiver, evaluate, evaluate_chain, evaluate_cyclic,
)

logger = logging.getLogger(__name__)

# [m, beta] has the degree of m; bubble - 1 = [mu, beta] has degree -1.
BETA_DEGREE = 0
BUBBLE_PRIMITIVE_DEGREE = -2


def gamma_degree(ell: int, d: int, i: int) -> int:
    """Degree of the u^-i coefficient of Gamma_(l)."""
    return -d * ell + 2 * ell - 4 - 2 * i


def required_inputs(ell: int, d: int) -> int:
    """Number of inputs m_(l) can take on a category concentrated in degree 0."""
    return 4 - d - (2 - d) * ell


def degree_forced_zero(ell: int, d: int, pc: PathCategory, size_bound: int) -> bool:
    if any(n.degree != 0 for n in pc.all_morphisms(size_bound)):
        return False
    return required_inputs(ell, d) < 0


def domain(pc: PathCategory, arity: int, settings: Settings) -> List[Config]:
    return configs_up_to(pc, arity, settings.max_tensor, settings.winding_bound)


# ---------------------------------------------------------------------------
# Gamma_(2) and the tower
# ---------------------------------------------------------------------------

def _two_output_quiver() -> Tuple[RibbonQuiver, List[str]]:
    """
    Five-vertex cycle v, v1, v2, v3, v4 (clockwise) with the source landing
    at v; v2 and v4 are two-output sources, o1 hangs off v1 and o2 off v3.
    """
    kinds = {"v": INTERNAL, "v1": INTERNAL, "v2": INTERNAL, "v3": INTERNAL, "v4": INTERNAL,
             "o1": OUTPUT, "o2": OUTPUT, "s": SOURCE}
    edges = {
        "b": ("v", "v1"), "e1": ("v1", "o1"), "e2": ("v2", "v1"), "e3": ("v2", "v3"),
        "e4": ("v3", "o2"), "e5": ("v4", "v3"), "e6": ("v4", "v"), "e": ("s", "v"),
    }
    rotation = {
        "v": [("e6", "h"), ("b", "t"), ("e", "h")],
        "v1": [("b", "h"), ("e1", "t"), ("e2", "h")],
        "v2": [("e2", "t"), ("e3", "t")],
        "v3": [("e3", "h"), ("e4", "t"), ("e5", "h")],
        "v4": [("e5", "t"), ("e6", "t")],
        "o1": [("e1", "h")], "o2": [("e4", "h")], "s": [("e", "t")],
    }
    rq = RibbonQuiver(kinds, edges, rotation, {"o1": 1, "o2": 2})  # type: ignore[arg-type]
    word = ["o1", "o2", "v1", "v2", "v3", "v4", "v", "e1", "e2", "e3", "e4", "e5", "e6", "b", "e", "s"]
    return rq, word


@log_function_calls(category="NCT")
def build_gamma2(d: int) -> CyclicQuiverChain:
    """1/2 (q + rotated q): the (Z/2, d)-symmetrization of the two-output quiver."""
    rq, word = _two_output_quiver()
    chain = symmetrize_zl(chain_from_ribbon(rq, word, d), d)
    if chain.is_zero():
        raise InconsistentSystem(f"Gamma_(2) symmetrizes to zero for d={d}")
    return CyclicQuiverChain([chain], d)


@dataclass
class GammaTower:
    chains: Dict[int, CyclicQuiverChain]
    d: int
    size_bound: Optional[int] = None

    @property
    def lmax(self) -> int:
        return max(self.chains)

    def component(self, ell: int) -> CyclicQuiverChain:
        if ell not in self.chains:
            raise BoundOverflow(f"Gamma_({ell}) is beyond the tower (l max = {self.lmax})")
        return self.chains[ell]

    def residual(self) -> Dict[int, CyclicQuiverChain]:
        return total_d(self.chains, self.lmax, self.size_bound)

    def is_closed(self) -> bool:
        return not self.residual()

    def to_json(self) -> Dict[str, Any]:
        return {
            "d": self.d, "size_bound": self.size_bound,
            "chains": {str(ell): [chain_to_json(c) for c in ch.coeffs]
                       for ell, ch in sorted(self.chains.items())},
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "GammaTower":
        try:
            d = int(doc["d"])
            chains = {int(ell): CyclicQuiverChain([chain_from_json(c, d) for c in coeffs], d)
                      for ell, coeffs in doc["chains"].items()}
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"malformed Gamma tower document: {e}") from e
        return cls(chains, d, doc.get("size_bound"))


def lifting_rhs(tower: GammaTower, target: int) -> CyclicQuiverChain:
    """-(del_2 Gamma_(l) + del_3 Gamma_(l-1) + ... + del_l Gamma_(2)) with l = target - 1."""
    d = tower.d
    out = CyclicQuiverChain([], d)
    for k in range(2, target):
        source = target + 1 - k
        if source in tower.chains:
            out = out + del_k_cyclic(tower.chains[source], k)
    return out.scaled(-1).trimmed()


def _solve_cyclic(target: int, d: int, rhs: CyclicQuiverChain, size_bound: int,
                 threads: int = 1) -> CyclicQuiverChain:
    """Solves (del - uR) X = rhs with X = X^0 + ... + X^(l-2) u^-(l-2)."""
    cx = get_complex(target, d, size_bound, threads)
    unknowns = [(q, i) for i in range(target - 1)
                for q in cx.by_degree.get(gamma_degree(target, d, i), [])]

    def image(x: Tuple[TubeQuiver, int]) -> LinComb[Any]:
        q, i = x
        acc: Dict[Any, Fraction] = {}
        for q2, c in cx.boundary_of(q).items():
            accumulate(acc, (q2, i), c)
        if i >= 1:
            for q2, c in rotation_R(LinComb.basis(q), d).items():
                accumulate(acc, (q2, i - 1), -c)
        return LinComb(acc)

    target_terms: Dict[Any, Fraction] = {}
    for i in range(rhs.depth):
        for q, c in rhs.coefficient(i).items():
            accumulate(target_terms, (q, i), c)
    logger.info(f"Lifting Gamma_({target}): {len(unknowns)} unknowns, {len(target_terms)} target terms")
    record_stats("lifting_unknowns", len(unknowns))
    found = solve_linear_map(unknowns, image, LinComb(target_terms))
    if found is None:
        raise BoundOverflow(f"no Gamma_({target}) within the vertex bound {size_bound}")
    coeffs: List[Dict[TubeQuiver, Fraction]] = [{} for _ in range(target - 1)]
    for (q, i), c in found.items():
        coeffs[i][q] = c
    return CyclicQuiverChain([LinComb(c) for c in coeffs], d).trimmed()


@log_function_calls(category="NCT")
def extend_gamma(gamma2: CyclicQuiverChain, lmax: int, d: int, size_bound: Optional[int] = None,
                 settings: Optional[Settings] = None, resume: bool = False) -> GammaTower:
    """
    Solves the lifting equations up to arity ``lmax``; each step is re-verified.

    The checkpoint name carries a digest of Gamma_(2), d and the vertex bound,
    and a resumed tower is used only when its stored bound matches.
    """
    threads = settings.threads if settings is not None else 1
    tower = GammaTower({2: gamma2}, d, size_bound)
    digest = inputs_digest(chain_to_json(gamma2.coefficient(0)), d, size_bound)
    checkpoint = f"gamma_tower_d{d}_{digest}"
    if resume and settings is not None:
        saved = load_checkpoint(settings, checkpoint)
        if saved is not None and saved.get("size_bound") == size_bound and saved.get("inputs") == digest:
            tower = GammaTower.from_json(saved)
            tower.chains = {ell: c for ell, c in tower.chains.items() if ell <= lmax}
        elif saved is not None:
            logger.warning(f"Checkpoint {checkpoint} does not match the current inputs, recomputing")
    for target in range(tower.lmax + 1, lmax + 1):
        bound = size_bound if size_bound is not None else max_internal_vertices(target)
        rhs = lifting_rhs(tower, target)
        if not cyclic_d(rhs, bound).is_zero():
            logger.warning(f"Right-hand side for Gamma_({target}) is not (del - uR)-closed")
        solution = _solve_cyclic(target, d, rhs, bound, threads).map(lambda c: symmetrize_zl(c, d))
        tower.chains[target] = solution
        leftover = total_d(tower.chains, target, size_bound).get(target)
        if leftover is not None and not leftover.is_zero():
            raise InconsistentSystem(f"Gamma_({target}) fails closedness after symmetrization")
        log_computation("gamma_step", {"ell": target, "d": d, "size_bound": bound},
                        {"depth": solution.depth, "terms": sum(len(c) for c in solution.coeffs)})
        if settings is not None:
            save_checkpoint(settings, checkpoint, dict(tower.to_json(), inputs=digest))
    return tower


def cocycle_pairing(tower: GammaTower, ell: int) -> Fraction:
    """Pairing of del_2 Gamma^(l-3)_(l-1) with the source-adjacency cocycle."""
    image = del_k_cyclic(tower.component(ell - 1), 2)
    return pair_with_cocycle(image.coefficient(ell - 3))


# ---------------------------------------------------------------------------
# Pre-CY candidates
# ---------------------------------------------------------------------------

@dataclass
class PreCYCandidate:
    """
    m = mu + m_(2) + ...; ``betas`` are the primitives used in the inverse
    transform, ``theta`` the Theta coefficient met at each arity and
    ``bubble_primitive`` the one-output beta with bubble - 1 = [mu, beta].
    """

    bundle: CochainBundle
    betas: Dict[int, HigherCochain] = field(default_factory=dict)
    window: int = 2
    theta: Dict[int, Fraction] = field(default_factory=dict)
    bubble_primitive: Optional[HigherCochain] = None

    @property
    def d(self) -> int:
        return self.bundle.d

    def component(self, ell: int) -> Optional[HigherCochain]:
        return self.bundle.component(ell)


def config_to_json(config: Config) -> List[Any]:
    return [{"inputs": [str(x) for x in a.inputs]} if a.inputs else {"label": a.label} for a in config]


def config_from_json(items: Sequence[Dict[str, Any]]) -> Config:
    try:
        return tuple(Angle(tuple(parse_necklace(x) for x in a["inputs"])) if "inputs" in a
                     else Angle((), int(a["label"])) for a in items)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"malformed configuration: {e}") from e


def cochain_to_json(F: HigherCochain, configs: Sequence[Config]) -> List[Dict[str, Any]]:
    rows = []
    for c in configs:
        for outs, x in F(c).sorted_items():
            rows.append({"config": config_to_json(c), "outputs": [str(o) for o in outs], "coeff": str(x)})
    return rows


def cochain_from_json(arity: int, rows: Sequence[Dict[str, Any]], d: int, name: str = "",
                      lie_degree: int = 1) -> HigherCochain:
    table: Dict[Config, Dict[Outputs, Fraction]] = {}
    for row in rows:
        config = config_from_json(row["config"])
        outs = tuple(parse_necklace(o) for o in row["outputs"])
        accumulate(table.setdefault(config, {}), outs, Fraction(row["coeff"]))
    return HigherCochain.from_table(arity, lie_degree, {c: LinComb(v) for c, v in table.items()}, d, name)


def candidate_to_json(m: PreCYCandidate, pc: PathCategory, settings: Settings) -> Dict[str, Any]:
    doc = {
        "d": m.d, "window": m.window, "bounds": settings.as_dict(),
        "components": {str(ell): cochain_to_json(m.component(ell), domain(pc, ell, settings))  # type: ignore[arg-type]
                       for ell in m.bundle.arities() if ell >= 2},
        "betas": {str(ell): cochain_to_json(b, domain(pc, ell, settings)) for ell, b in sorted(m.betas.items())},
        "theta": {str(ell): str(x) for ell, x in sorted(m.theta.items())},
    }
    if m.bubble_primitive is not None:
        doc["bubble_primitive"] = cochain_to_json(m.bubble_primitive, domain(pc, 1, settings))
    return doc


def candidate_from_json(doc: Dict[str, Any]) -> PreCYCandidate:
    d = int(doc["d"])
    comps: Dict[int, HigherCochain] = {1: mu_cochain(d)}
    for ell, rows in doc["components"].items():
        comps[int(ell)] = cochain_from_json(int(ell), rows, d, f"m{ell}")
    betas = {int(ell): cochain_from_json(int(ell), rows, d, f"beta{ell}", BETA_DEGREE) for ell, rows in doc.get("betas", {}).items()}
    theta = {int(ell): Fraction(x) for ell, x in doc.get("theta", {}).items()}
    bubble = doc.get("bubble_primitive")
    primitive = cochain_from_json(1, bubble, d, "beta", BUBBLE_PRIMITIVE_DEGREE) if bubble is not None else None
    return PreCYCandidate(CochainBundle(comps, d, symmetric=True), betas, int(doc["window"]), theta, primitive)


# ---------------------------------------------------------------------------
# Forward direction
# ---------------------------------------------------------------------------

@log_function_calls(category="NCT")
def fiberwise_derivative_nc(m: PreCYCandidate, lam: NegCyclicChain, tower: GammaTower,
                            max_arity: Optional[int] = None) -> CochainBundle:
    """Fm(lambda): arity l is sum_i Gamma^i_(l)(lambda_i); vertices evaluate m."""
    top = max_arity or tower.lmax
    assign = VertexAssignment(m.bundle, strict=False)
    out: Dict[int, HigherCochain] = {}
    for ell in range(2, top + 1):
        value = evaluate_cyclic(tower.component(ell), assign, lam)
        if value is not None:
            out[ell] = value
    return CochainBundle(out, m.d, symmetric=True)


def energy_nc(m: PreCYCandidate) -> CochainBundle:
    """e_m = sum_(l>=2) (l - 1) m_(l)."""
    return m.bundle.scaled_by_arity(lambda ell: ell - 1)


@dataclass
class MCReport:
    components: Dict[int, VerificationReport]
    bounds: Dict[str, int]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.components.values())

    def as_dict(self) -> Dict[str, Any]:
        return {"passed": self.passed, "bounds": self.bounds,
                "components": {str(k): r.as_dict() for k, r in sorted(self.components.items())}}


@log_function_calls(category="NCT")
def verify_mc(m: PreCYCandidate, pc: PathCategory, settings: Settings,
              max_arity: Optional[int] = None) -> MCReport:
    """[m, m]_nec = 0 arity by arity on every configuration within the bounds."""
    top = max_arity or max(m.window, 2)
    bracket = necklace_bracket(m.bundle, m.bundle, top)
    reports: Dict[int, VerificationReport] = {}
    for ell in range(1, top + 1):
        report = VerificationReport(f"[m,m]_({ell})", bounds=settings.as_dict(), threads=settings.threads)
        report.compare(bracket.component(ell), None, domain(pc, ell, settings))
        reports[ell] = report
        if not report.passed:
            logger.info(f"Maurer-Cartan component {ell} fails on {len(report.failures)} configurations")
    return MCReport(reports, settings.as_dict())


@dataclass
class NondegeneracyResult:
    beta: Optional[HigherCochain]
    difference: Dict[Config, LinComb[Outputs]]
    obstructed: bool
    checked: int
    bounds: Dict[str, int]

    def as_dict(self) -> Dict[str, Any]:
        return {"obstructed": self.obstructed, "checked": self.checked, "bounds": self.bounds,
                "difference": {" ".join(str(a) for a in c): str(v) for c, v in self.difference.items()}}


def bubble_cochain(lam0: HochChain, alpha: HigherCochain) -> HigherCochain:
    assign = VertexAssignment(CochainBundle({1: mu_cochain(alpha.d), 2: alpha}, alpha.d))
    return evaluate(bubble_quiver(), assign, lam0, lie_degree=-1)


@log_function_calls(category="NCT")
def chain_level_nondegeneracy(lam0: HochChain, alpha: HigherCochain, pc: PathCategory,
                              settings: Settings) -> NondegeneracyResult:
    """
    Bubble(lam0, alpha) - 1 = [mu, beta]: returns beta, or an obstruction
    when no beta exists within the bounds.
    """
    configs = domain(pc, 1, settings)
    bubble = bubble_cochain(lam0, alpha)
    unit = unit_cochain(alpha.d)
    diff: Dict[Config, LinComb[Outputs]] = {}
    for c in configs:
        value = bubble(c) - unit(c)
        if value:
            diff[c] = value
    if not diff:
        return NondegeneracyResult(HigherCochain.zero(1, BUBBLE_PRIMITIVE_DEGREE, alpha.d), {}, False, len(configs), settings.as_dict())
    unknowns: List[Tuple[Config, Outputs]] = []
    for c in configs:
        s, t = output_slots(c)[0]
        n = len(c[0].inputs)
        deg = sum(x.degree for x in c[0].inputs) - n - 1
        for out in pc.enumerate_basis(s, t, deg, settings.winding_bound):
            unknowns.append((c, (out,)))

    def image(u: Tuple[Config, Outputs]) -> LinComb[Any]:
        beta = HigherCochain.from_table(1, BUBBLE_PRIMITIVE_DEGREE, {u[0]: LinComb.basis(u[1])}, alpha.d, "beta")
        br = necklace_bracket_components(mu_cochain(alpha.d), beta)
        acc: Dict[Any, Fraction] = {}
        for c in configs:
            for outs, x in br(c).items():
                accumulate(acc, (c, outs), x)
        return LinComb(acc)

    target = LinComb({(c, outs): x for c, v in diff.items() for outs, x in v.items()})
    found = solve_linear_map(unknowns, image, target) if unknowns else None
    if found is None:
        logger.info(f"Nondegeneracy obstructed on {len(diff)} configurations ({len(unknowns)} unknowns)")
        return NondegeneracyResult(None, diff, True, len(configs), settings.as_dict())
    table: Dict[Config, Dict[Outputs, Fraction]] = {}
    for (c, outs), x in found.items():
        accumulate(table.setdefault(c, {}), outs, x)
    beta = HigherCochain.from_table(1, BUBBLE_PRIMITIVE_DEGREE, {c: LinComb(v) for c, v in table.items()}, alpha.d, "beta")
    return NondegeneracyResult(beta, diff, False, len(configs), settings.as_dict())


# ---------------------------------------------------------------------------
# Inverse direction
# ---------------------------------------------------------------------------

@dataclass
class ThetaSplit:
    """Gamma^0 = theta * reference + del(primitive) + rest."""

    reference: Optional[TubeQuiver]
    theta: Fraction
    primitive: LinComb[TubeQuiver]
    rest: LinComb[TubeQuiver]


def theta_quiver(ell: int) -> TubeQuiver:
    """
    The bubble with an l-output source p grafted below it: p sends l - 1
    legs to outputs and one into the vertex that joins it with the bubble.
    """
    p: Node = (False, tuple((True, ()) for _ in range(ell - 1)))
    joint: Node = (True, (p, (True, ())))
    q = TubeQuiver(ell, (True, False, True), ((), (joint,), ()), 0)
    return canonicalize(q.to_ribbon())[0]


def isolate_theta(gamma0: LinComb[TubeQuiver], d: int, size_bound: Optional[int] = None,
                  reference: Optional[TubeQuiver] = None) -> ThetaSplit:
    """Moves every quiver with an l-output vertex onto one reference along contraction paths."""
    full = sorted((q for q, _ in gamma0.items() if has_full_output_vertex(q)), key=TubeQuiver.sort_key)
    rest = LinComb({q: c for q, c in gamma0.items() if not has_full_output_vertex(q)})
    if not full:
        return ThetaSplit(None, Fraction(0), LinComb(), rest)
    ref = reference if reference is not None else full[0]
    theta = gamma0.coeff(ref)
    primitive: LinComb[TubeQuiver] = LinComb()
    for q in full:
        if q == ref:
            continue
        c = gamma0.coeff(q)
        G, sign = contract_expand_path(q, ref, d, size_bound)
        cx = get_complex(q.ell, d, size_bound or max_internal_vertices(q.ell))
        boundary = cx.boundary(G)
        lower = LinComb({p: x for p, x in (LinComb.basis(q) + LinComb.basis(ref, sign) - boundary).items()
                         if not has_full_output_vertex(p)})
        primitive = primitive + G * c
        theta -= sign * c
        rest = rest + lower * c
    return ThetaSplit(ref, theta, primitive, rest)


@log_function_calls(category="NCT")
def phi_inverse_transform(lam: NegCyclicChain, alpha: HigherCochain, tower: GammaTower,
                          pc: PathCategory, lmax: int, settings: Settings,
                          betas: Optional[Dict[int, HigherCochain]] = None) -> PreCYCandidate:
    """
    m_(2) = alpha and, for l >= 3,

        (l - 1 - theta) m_(l) = [m_(2), beta_(l-1)] + ... + [m_(l-1), beta_(2)] + [mu, beta_(l)]
                                + Gamma~^0_(l)(lambda_0) + Gamma^1_(l)(lambda_1) + ... + Gamma^(l-2)_(l)(lambda_(l-2)).

    Gamma^0 is split as theta * Theta + del(Gamma') + Gamma~^0. Theta(lambda_0)
    is theta m_(l) composed with the bubble, which the nondegeneracy primitive
    turns into theta m_(l) plus an exact term; del(Gamma')(lambda_0) is
    [mu, Gamma'(lambda_0)] since b lambda_0 = 0. Both exact terms are dropped.
    """
    d = tower.d
    betas = dict(betas or {})
    nondeg = chain_level_nondegeneracy(lam.coefficient(0), alpha, pc, settings)
    if nondeg.obstructed:
        raise InconsistentSystem(f"alpha does not invert lambda_0 on {len(nondeg.difference)} configurations")
    components: Dict[int, HigherCochain] = {1: mu_cochain(d), 2: alpha}
    thetas: Dict[int, Fraction] = {}
    for ell in range(3, lmax + 1):
        if degree_forced_zero(ell, d, pc, settings.winding_bound):
            components[ell] = HigherCochain.zero(ell, 1, d)
            logger.debug(f"m_({ell}) vanishes for degree reasons")
            continue
        gamma = tower.component(ell)
        split = isolate_theta(gamma.coefficient(0), d, tower.size_bound, reference=theta_quiver(ell))
        thetas[ell] = split.theta
        scale = ell - 1 - split.theta
        if scale == 0:
            raise InconsistentSystem(f"Theta coefficient {split.theta} cancels the energy weight at l={ell}")
        logger.info(f"l={ell}: theta = {split.theta}, primitive with {len(split.primitive)} quivers dropped as exact")
        reduced = CyclicQuiverChain([split.rest] + list(gamma.coeffs[1:]), d)
        assign = VertexAssignment(CochainBundle(dict(components), d), strict=False)
        value = evaluate_cyclic(reduced, assign, lam)
        configs = domain(pc, ell, settings)
        table = value.tabulate(configs) if value is not None else {}
        total = HigherCochain.from_table(ell, 1, table, d, f"E{ell}")
        for i in range(2, ell):
            j = ell - i + 1
            if j in betas:
                total = total + necklace_bracket_components(components[i], betas[j])
        if ell in betas:
            total = total + necklace_bracket_components(mu_cochain(d), betas[ell])
        m_ell = total * (1 / Fraction(scale))
        m_ell.name = f"m{ell}"
        components[ell] = m_ell
        record_stats("inverse_transform_steps")
    return PreCYCandidate(CochainBundle(components, d, symmetric=True), betas, lmax, thetas, nondeg.beta)


@dataclass
class LegendreResult:
    lam: NegCyclicChain
    unknowns: int
    equations: int


@log_function_calls(category="NCT")
def legendre_nc(m: PreCYCandidate, tower: GammaTower, pc: PathCategory, settings: Settings,
                max_length: Optional[int] = None, check_mc: bool = True) -> LegendreResult:
    """
    Solves Fm(lambda) = e_m with (b + uB) lambda = 0 over reduced words
    within the bounds; lambda_i has degree d + 2i.
    """
    if check_mc and not verify_mc(m, pc, settings).passed:
        raise ValidationError("the transform is defined on Maurer-Cartan elements only")
    d = m.d
    depth = min(tower.lmax - 1, settings.u_order + 1)
    length = max_length if max_length is not None else settings.max_tensor
    words: Dict[int, List[HochWord]] = {
        i: enumerate_hoch_words(pc, d + 2 * i, length + 2 * i, settings.winding_bound) for i in range(depth)
    }
    assign = VertexAssignment(m.bundle, strict=False)
    energy = energy_nc(m)
    rows: List[Dict[Any, Fraction]] = []
    rhs: List[Fraction] = []
    for ell in range(2, tower.lmax + 1):
        gamma = tower.component(ell)
        configs = domain(pc, ell, settings)
        eqs: Dict[Tuple[Config, Outputs], Dict[Any, Fraction]] = {}
        for i in range(min(gamma.depth, depth)):
            for w in words[i]:
                value = evaluate_chain(gamma.coefficient(i), assign, LinComb.basis(w))
                if value is None:
                    continue
                for c in configs:
                    for outs, x in value(c).items():
                        accumulate(eqs.setdefault((c, outs), {}), (i, w), x)
        target = energy.component(ell)
        if target is not None:
            for c in configs:
                for outs, x in target(c).items():
                    eqs.setdefault((c, outs), {})
        for (c, outs), row in eqs.items():
            rows.append(row)
            rhs.append(target(c).coeff(outs) if target is not None else Fraction(0))
    # u^i part of (b + uB) lambda: b(lambda_i) + B(lambda_(i-1))
    closed: Dict[Tuple[int, HochWord], Dict[Any, Fraction]] = {}
    for i in range(depth):
        for w in words[i]:
            for w2, x in hoch_b(LinComb.basis(w)).items():
                accumulate(closed.setdefault((i, w2), {}), (i, w), x)
            if i + 1 < depth:
                for w2, x in connes_B(LinComb.basis(w)).items():
                    accumulate(closed.setdefault((i + 1, w2), {}), (i, w), x)
    for row in closed.values():
        rows.append(row)
        rhs.append(Fraction(0))
    solution = solve(rows, rhs)
    if solution is None:
        raise InconsistentSystem(f"Fm(lambda) = e_m has no solution within the bounds {settings.as_dict()}")
    coeffs: List[Dict[HochWord, Fraction]] = [{} for _ in range(depth)]
    for (i, w), x in solution.items():
        coeffs[i][w] = x
    lam = NegCyclicChain([LinComb(c) for c in coeffs], depth - 1)
    log_computation("legendre_nc", {"bounds": settings.as_dict(), "depth": depth},
                    {"unknowns": sum(len(v) for v in words.values()), "equations": len(rows)})
    return LegendreResult(lam, sum(len(v) for v in words.values()), len(rows))


def is_b_boundary(chain: HochChain, pc: PathCategory, settings: Settings, max_length: int) -> bool:
    """Searches x with b(x) = chain among words one degree up."""
    if chain.is_zero():
        return True
    degrees = {w.degree for w in chain.keys()}
    if len(degrees) != 1:
        raise ValidationError("chain is not homogeneous")
    deg = degrees.pop()
    unknowns = enumerate_hoch_words(pc, deg + 1, max_length, settings.winding_bound)
    return solve_linear_map(unknowns, lambda w: hoch_b(LinComb.basis(w)), chain) is not None


def roundtrip_class_check(lam: NegCyclicChain, alpha: HigherCochain, tower: GammaTower, pc: PathCategory,
                          lmax: int, settings: Settings) -> bool:
    """Phi then the forward transform: lambda'_0 - lambda_0 is a b-boundary."""
    m = phi_inverse_transform(lam, alpha, tower, pc, lmax, settings)
    again = legendre_nc(m, tower, pc, settings, check_mc=False).lam
    return is_b_boundary(again.coefficient(0) - lam.coefficient(0), pc, settings, settings.max_tensor + 1)


def hoch_chain_to_json(c: HochChain) -> List[List[str]]:
    return [[str(w), str(x)] for w, x in c.sorted_items()]


def hoch_chain_from_json(items: Sequence[Sequence[str]]) -> HochChain:
    acc: Dict[HochWord, Fraction] = {}
    for word, coeff in items:
        accumulate(acc, parse_hoch_word(word), Fraction(coeff))
    return LinComb(acc)
