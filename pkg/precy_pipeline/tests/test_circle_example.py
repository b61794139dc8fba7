from fractions import Fraction

import pytest

from precy_pipeline.circle_example import (
    bubble_values, build_circle, check_fixture_consistency, compute_m3_shortcut, fixture_table, load_fixture,
    mc_residual_m3, verify_alpha, verify_corollary, verify_two_simplex_boundary, zero_input_configs,
)
from precy_pipeline.core_algebra import LinComb
from precy_pipeline.hochschild import iota_fundamental, neg_cyclic_d, parse_hoch_chain
from precy_pipeline.logger import ValidationError
from precy_pipeline.nct import build_gamma2, config_from_json, domain, extend_gamma
from precy_pipeline.pathcat import identity


@pytest.fixture(scope="module")
def circle():
    return build_circle()


@pytest.mark.golden
def test_fixture_matches_construction(circle):
    report = check_fixture_consistency(circle)
    assert report.passed, report.failures
    assert report.checked > 0


@pytest.mark.golden
def test_lambda_terms(circle):
    assert circle.lam0 == parse_hoch_chain("01[10] + 12[21] - 02[20]")
    assert circle.lam1 == parse_hoch_chain("-01[10|01|10] - 12[21|12|21] + 02[20|02|20]")


@pytest.mark.golden
def test_alpha_values(circle):
    table = fixture_table(circle, "alpha", 2)
    rows = circle.expected["alpha"]
    for row in rows:
        config = config_from_json(row["config"])
        assert circle.alpha(config) == table(config)
    assert len(rows) == 12
    assert {row["coeff"] for row in rows} == {"1/2", "-1/2"}


def test_alpha_has_no_zero_input_values(circle):
    assert all(circle.alpha(c).is_zero() for c in zero_input_configs(circle.pc, 2))


@pytest.mark.golden
def test_alpha_symmetric_and_bubble_is_unit(circle, small_settings):
    reports = verify_alpha(circle, small_settings)
    assert reports["symmetric"].passed
    assert reports["bubble"].passed, reports["bubble"].failures


def test_alpha_is_closed(circle, small_settings):
    assert verify_alpha(circle, small_settings)["closed"].passed


@pytest.mark.golden
def test_m3_pattern(circle):
    values = {c: circle.m3(c) for c in zero_input_configs(circle.pc, 3)}
    nonzero = {c: v for c, v in values.items() if not v.is_zero()}
    assert len(nonzero) == 3
    for config, value in nonzero.items():
        (i,) = {a.label for a in config}
        e = identity(i)
        assert value == LinComb.basis((e, e, e), Fraction(-1, 4))


def test_m3_solves_the_order_three_equation(circle, small_settings):
    configs = domain(circle.pc, 3, small_settings)
    assert all(mc_residual_m3(circle, circle.m3)(c).is_zero() for c in configs)


def test_doubled_m3_breaks_the_order_three_equation(circle):
    residual = mc_residual_m3(circle, circle.m3 * 2)
    assert any(not residual(c).is_zero() for c in zero_input_configs(circle.pc, 3))


@pytest.fixture(scope="module")
def tower_to_three():
    return extend_gamma(build_gamma2(1), 3, 1)


def test_m3_shortcut_halves_the_sum(circle, tower_to_three):
    shortcut = compute_m3_shortcut(circle, tower_to_three)
    for config in zero_input_configs(circle.pc, 3):
        total = shortcut.x_lambda0(config) + shortcut.gamma1_lambda1(config)
        assert shortcut.m3(config) == total * Fraction(1, 2)
    assert shortcut.m3.name == "m3"


def test_m3_shortcut_needs_gamma3(circle):
    with pytest.raises(ValidationError):
        compute_m3_shortcut(circle, extend_gamma(build_gamma2(1), 2, 1))


def test_lift_is_closed(circle):
    lift = iota_fundamental(circle.complex, order=2)
    assert neg_cyclic_d(lift).is_zero()
    assert lift.coefficient(0) == circle.lam0


def test_corollary_identities(circle, small_settings):
    result = verify_corollary(circle, small_settings)
    assert result["degree_audit_ok"]
    assert result["lift_closed"]
    assert result["mu_m3"].passed
    assert result["alpha_m3"].passed


def test_two_simplex_boundary():
    report = verify_two_simplex_boundary()
    assert report.passed


def test_missing_fixture():
    with pytest.raises(ValidationError):
        load_fixture("no_such_fixture")


@pytest.mark.golden
def test_bubble_unit_on_each_object(circle):
    values = bubble_values(circle)
    assert sorted(values) == [0, 1, 2]
    for k, (parts, total) in values.items():
        assert len(parts) == 3
        assert total == LinComb.basis((identity(k),))
