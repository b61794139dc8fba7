import json

import pytest

from precy_pipeline.circle_example import alpha_cochain, build_circle, m3_cochain, zero_input_configs
from precy_pipeline.config import Settings
from precy_pipeline.core_algebra import LinComb
from precy_pipeline.hochschild import (
    Angle, CochainBundle, enumerate_configs, hoch_b, mu_cochain, parse_hoch_chain, unit_cochain,
)
from precy_pipeline.logger import BoundOverflow, InconsistentSystem, ValidationError
from precy_pipeline.nct import (
    GammaTower, PreCYCandidate, build_gamma2, candidate_from_json, candidate_to_json,
    chain_level_nondegeneracy, cocycle_pairing, config_from_json, config_to_json, degree_forced_zero,
    domain, energy_nc, extend_gamma, fiberwise_derivative_nc, gamma_degree, hoch_chain_from_json, hoch_chain_to_json,
    is_b_boundary, isolate_theta, legendre_nc, phi_inverse_transform, required_inputs, theta_quiver, verify_mc,
)
from precy_pipeline.pathcat import PathCategory, parse_necklace
from precy_pipeline.quiver import (
    CyclicQuiverChain, boundary_del, chain_degree, degree_d, del_k, del_k_cyclic, has_full_output_vertex,
    rotate_chain, total_d,
)
from precy_pipeline.simplicial import filled_triangle, triangle_boundary


@pytest.fixture(scope="module")
def circle_pc():
    return PathCategory(triangle_boundary())


def test_degree_bookkeeping():
    assert gamma_degree(2, 1, 0) == -2
    assert gamma_degree(3, 1, 1) == -3
    assert required_inputs(3, 1) == 0
    assert [required_inputs(ell, 1) for ell in (4, 5, 6)] == [-1, -2, -3]
    assert required_inputs(5, 2) == 2


def test_degree_forced_zero_needs_degree_zero_morphisms(circle_pc):
    assert degree_forced_zero(4, 1, circle_pc, 2)
    assert not degree_forced_zero(3, 1, circle_pc, 2)
    assert not degree_forced_zero(4, 1, PathCategory(filled_triangle()), 2)


@pytest.mark.parametrize("d", [0, 1])
def test_gamma2_degree_and_symmetry(d):
    gamma2 = build_gamma2(d)
    c = gamma2.coefficient(0)
    assert not c.is_zero()
    assert chain_degree(c, d) == -2 * d
    assert rotate_chain(c, d) == c


@pytest.mark.parametrize("d", [0, 1])
def test_gamma2_is_closed(d):
    assert boundary_del(build_gamma2(d).coefficient(0), d).is_zero()


@pytest.mark.parametrize("d", [0, 1])
def test_graft_of_gamma2_is_a_symmetric_cycle(d):
    image = del_k(build_gamma2(d).coefficient(0), 2, d)
    assert not image.is_zero()
    assert chain_degree(image, d) == 1 - 3 * d
    assert rotate_chain(image, d) == image
    assert boundary_del(image, d).is_zero()


@pytest.mark.parametrize("d", [0, 1])
def test_total_d_collects_the_grafts(d):
    gamma2 = build_gamma2(d)
    assert total_d({2: gamma2}, 2) == {}
    residual = total_d({2: gamma2}, 3)
    assert list(residual) == [3]
    assert residual[3] == del_k_cyclic(gamma2, 2).trimmed()
    with pytest.raises(ValidationError):
        del_k(gamma2.coefficient(0), 1, d)


def test_even_grafts_twist_the_u_powers():
    gamma2 = build_gamma2(1)
    c = gamma2.coefficient(0)
    deep = CyclicQuiverChain([LinComb(), c], 1)
    # degree -2 at u^-1: (-1)^(-2 + 1) flips the sign for k = 2 only
    assert del_k_cyclic(deep, 2).coefficient(1) == del_k(c, 2, 1) * -1
    assert del_k_cyclic(deep, 3).coefficient(1) == del_k(c, 3, 1)


def test_tower_json_and_bounds(tmp_path):
    tower = GammaTower({2: build_gamma2(1)}, 1)
    again = GammaTower.from_json(tower.to_json())
    assert again.component(2).coefficient(0) == tower.component(2).coefficient(0)
    assert again.lmax == 2
    with pytest.raises(BoundOverflow):
        tower.component(3)
    with pytest.raises(ValidationError):
        GammaTower.from_json({"chains": {}})


@pytest.mark.parametrize("d", [0, 1])
def test_extend_gamma_through_three(d):
    tower = extend_gamma(build_gamma2(d), 3, d)
    assert tower.lmax == 3
    assert tower.is_closed()
    gamma3 = tower.component(3)
    assert chain_degree(gamma3.coefficient(0), d) == gamma_degree(3, d, 0)
    assert chain_degree(gamma3.coefficient(1), d) == gamma_degree(3, d, 1)
    assert not gamma3.coefficient(1).is_zero()
    assert cocycle_pairing(tower, 3) != 0


@pytest.mark.expensive
@pytest.mark.parametrize("d", [0, 1])
def test_extend_gamma_through_four(d, tmp_path):
    settings = Settings(checkpoint_dir=str(tmp_path))
    tower = extend_gamma(build_gamma2(d), 4, d, settings=settings)
    assert tower.lmax == 4
    assert tower.is_closed()
    assert cocycle_pairing(tower, 4) != 0
    resumed = extend_gamma(build_gamma2(d), 4, d, settings=settings, resume=True)
    assert resumed.component(4).coeffs == tower.component(4).coeffs


def test_extend_gamma_resume_rejects_a_mismatched_checkpoint(tmp_path):
    settings = Settings(checkpoint_dir=str(tmp_path))
    gamma2 = build_gamma2(1)
    tower = extend_gamma(gamma2, 3, 1, settings=settings)
    saved = list(tmp_path.iterdir())
    assert len(saved) == 1 and saved[0].name.startswith("gamma_tower_d1_")
    doc = json.loads(saved[0].read_text())
    doc["size_bound"] = 5
    doc["chains"]["3"] = [[] for _ in doc["chains"]["3"]]
    saved[0].write_text(json.dumps(doc))
    resumed = extend_gamma(gamma2, 3, 1, settings=settings, resume=True)
    assert resumed.component(3).coeffs == tower.component(3).coeffs
    other = extend_gamma(build_gamma2(0), 2, 0, settings=settings, resume=True)
    assert other.d == 0 and other.lmax == 2


def test_config_json():
    config = (Angle((parse_necklace("01"), parse_necklace("12"))), Angle((), 2))
    assert config_from_json(config_to_json(config)) == config
    with pytest.raises(ValidationError):
        config_from_json([{"inputs": ["01", "02"]}])
    with pytest.raises(ValidationError):
        config_from_json([{}])


def test_hoch_chain_json():
    chain = parse_hoch_chain("01[10] + 12[21] - (1/2)02[20]")
    assert hoch_chain_from_json(hoch_chain_to_json(chain)) == chain


def _circle_candidate():
    bundle = CochainBundle({1: mu_cochain(), 2: alpha_cochain(), 3: m3_cochain()}, 1, symmetric=True)
    return PreCYCandidate(bundle, window=3)


def test_candidate_json_round_trip(circle_pc, small_settings):
    m = _circle_candidate()
    doc = candidate_to_json(m, circle_pc, small_settings)
    again = candidate_from_json(doc)
    assert again.window == 3 and again.d == 1
    for ell in (2, 3):
        for config in domain(circle_pc, ell, small_settings):
            assert again.component(ell)(config) == m.component(ell)(config)


def test_energy_weights_by_arity(circle_pc):
    energy = energy_nc(_circle_candidate())
    assert energy.arities() == [2, 3]
    for config in zero_input_configs(circle_pc, 3):
        assert energy.component(3)(config) == m3_cochain()(config) * 2
    for config in zero_input_configs(circle_pc, 2):
        assert energy.component(2)(config) == alpha_cochain()(config)


def test_mu_alone_is_maurer_cartan(circle_pc, small_settings):
    m = PreCYCandidate(CochainBundle({1: mu_cochain()}, 1), window=1)
    report = verify_mc(m, circle_pc, small_settings)
    assert report.passed
    assert report.as_dict()["bounds"] == small_settings.as_dict()


@pytest.mark.golden
def test_circle_alpha_is_nondegenerate(small_settings):
    fixture = build_circle()
    result = chain_level_nondegeneracy(fixture.lam0, fixture.alpha, fixture.pc, small_settings)
    assert not result.obstructed
    assert result.difference == {}
    assert all(result.beta(c).is_zero() for c in domain(fixture.pc, 1, small_settings))


def test_doubled_alpha_is_obstructed(small_settings):
    fixture = build_circle()
    result = chain_level_nondegeneracy(fixture.lam0, fixture.alpha * 2, fixture.pc, small_settings)
    assert result.obstructed
    assert result.beta is None
    assert result.difference


def test_zero_chain_is_obstructed(small_settings):
    fixture = build_circle()
    result = chain_level_nondegeneracy(LinComb(), fixture.alpha, fixture.pc, small_settings)
    assert result.obstructed
    config = (Angle((), 2),)
    assert result.difference[config] == unit_cochain()(config) * -1


def test_isolate_theta_without_full_output_vertex():
    split = isolate_theta(LinComb(), 1)
    assert split.reference is None and split.theta == 0


def test_domain_uses_settings(circle_pc, small_settings):
    configs = domain(circle_pc, 1, small_settings)
    assert len(configs) == len(enumerate_configs(circle_pc, 1, 0, 2)) + len(enumerate_configs(circle_pc, 1, 1, 2))


def test_inverse_transform_keeps_alpha(small_settings):
    fixture = build_circle()
    tower = GammaTower({2: build_gamma2(1)}, 1)
    m = phi_inverse_transform(fixture.lam, fixture.alpha, tower, fixture.pc, 2, small_settings)
    assert m.window == 2
    assert m.bundle.arities() == [1, 2]
    for config in domain(fixture.pc, 2, small_settings):
        assert m.component(2)(config) == fixture.alpha(config)
    assert m.theta == {}
    assert all(m.bubble_primitive(c).is_zero() for c in domain(fixture.pc, 1, small_settings))


@pytest.mark.parametrize("ell", [3, 4])
@pytest.mark.parametrize("d", [0, 1])
def test_theta_quiver_sits_in_the_top_degree(ell, d):
    q = theta_quiver(ell)
    assert q.problems() == []
    assert q.ell == ell
    assert has_full_output_vertex(q)
    assert len(q.internal_vertices) == 5
    assert degree_d(q, d) == gamma_degree(ell, d, 0)


def test_isolate_theta_keeps_the_reference():
    q = theta_quiver(3)
    split = isolate_theta(LinComb.basis(q, 2), 1, reference=q)
    assert split.reference == q
    assert split.theta == 2
    assert split.primitive.is_zero() and split.rest.is_zero()


def test_inverse_transform_needs_a_nondegenerate_alpha(small_settings):
    fixture = build_circle()
    tower = GammaTower({2: build_gamma2(1)}, 1)
    with pytest.raises(InconsistentSystem):
        phi_inverse_transform(fixture.lam, fixture.alpha * 2, tower, fixture.pc, 2, small_settings)


@pytest.mark.expensive
def test_inverse_transform_through_three(small_settings):
    fixture = build_circle()
    tower = extend_gamma(build_gamma2(1), 3, 1)
    m = phi_inverse_transform(fixture.lam, fixture.alpha, tower, fixture.pc, 3, small_settings)
    assert m.bundle.arities() == [1, 2, 3]
    assert 3 in m.theta and m.theta[3] != 2
    doc = candidate_to_json(m, fixture.pc, small_settings)
    assert doc["theta"] == {"3": str(m.theta[3])}
    assert candidate_from_json(doc).theta == m.theta


def test_forward_derivative_stays_within_tower():
    fixture = build_circle()
    tower = GammaTower({2: build_gamma2(1)}, 1)
    assert fiberwise_derivative_nc(_circle_candidate(), fixture.lam, tower).arities() == [2]


def test_forward_transform_of_mu_is_zero(circle_pc, small_settings):
    m = PreCYCandidate(CochainBundle({1: mu_cochain()}, 1), window=1)
    tower = GammaTower({2: build_gamma2(1)}, 1)
    result = legendre_nc(m, tower, circle_pc, small_settings)
    assert result.lam.is_zero()
    assert result.unknowns > 0


def test_b_boundaries(circle_pc, small_settings):
    assert is_b_boundary(LinComb(), circle_pc, small_settings, 1)
    assert not is_b_boundary(build_circle().lam0, circle_pc, small_settings, 3)
    assert is_b_boundary(hoch_b(parse_hoch_chain("01[10|01|10]")), circle_pc, small_settings, 3)
