from fractions import Fraction

import numpy as np
import pytest

from precy_pipeline.circle_example import alpha_cochain
from precy_pipeline.core_algebra import LinComb
from precy_pipeline.hochschild import (
    Angle, HigherCochain, NegCyclicChain, chain_degree, configs_up_to, connes_B,
    enumerate_configs, enumerate_hoch_words, gerstenhaber_bracket, hoch_b, hword, iota_fundamental,
    iota_one_simplex, make_angle, mu_cochain, necklace_bracket_components, neg_cyclic_d, output_slots,
    parse_hoch_chain, parse_hoch_word, unit_cochain,
)
from precy_pipeline.logger import BoundOverflow, ValidationError
from precy_pipeline.pathcat import PathCategory, identity, parse_necklace
from precy_pipeline.simplicial import filled_triangle, triangle_boundary

LAMBDA0 = "01[10] + 12[21] - 02[20]"


@pytest.fixture(scope="module")
def circle():
    return PathCategory(triangle_boundary())


def P(text):
    return parse_necklace(text)


def test_parse_words_and_degrees():
    w = parse_hoch_word("01*12[20]")
    assert w.a0 == P("01*12") and w.bar == (P("20"),)
    assert (w.length, w.degree) == (1, 1)
    assert parse_hoch_word("e0[]").length == 0
    assert parse_hoch_word("012*20").degree == 1
    chain = parse_hoch_chain("01[10] - (1/2)12[21]")
    assert chain.coeff(parse_hoch_word("12[21]")) == Fraction(-1, 2)
    assert chain_degree(parse_hoch_chain(LAMBDA0)) == 1


def test_words_must_close_up():
    with pytest.raises(ValidationError):
        hword(P("01"), P("12"))
    with pytest.raises(ValidationError):
        parse_hoch_word("01[10")


def test_b_on_a_single_edge():
    assert hoch_b(parse_hoch_chain("01[10]")) == parse_hoch_chain("e0[] - e1[]")
    assert hoch_b(parse_hoch_chain(LAMBDA0)).is_zero()


def test_b_on_a_two_letter_bar():
    w = parse_hoch_chain("01[12|20]")
    expected = parse_hoch_chain("-01[12*20] + 20*01[12] + 01*12[20]")
    assert hoch_b(w) == expected
    assert hoch_b(hoch_b(w)).is_zero()


def test_connes_operator():
    w = parse_hoch_chain("01[10]")
    assert connes_B(w) == parse_hoch_chain("e0[01|10] - e1[10|01]")
    assert connes_B(connes_B(w)).is_zero()
    assert (hoch_b(connes_B(w)) + connes_B(hoch_b(w))).is_zero()


def test_b_squared_on_circle_words(circle):
    for degree in (0, 1, 2):
        for w in enumerate_hoch_words(circle, degree, 2, 2):
            assert hoch_b(hoch_b(LinComb.basis(w))).is_zero(), str(w)


@pytest.mark.expensive
@pytest.mark.property
def test_mixed_complex_identities_on_circle_words(circle):
    for degree in (1, 2):
        for w in enumerate_hoch_words(circle, degree, 2, 2):
            x = LinComb.basis(w)
            assert connes_B(connes_B(x)).is_zero()
            assert (hoch_b(connes_B(x)) + connes_B(hoch_b(x))).is_zero(), str(w)


def test_enumerate_hoch_words(circle):
    words = enumerate_hoch_words(circle, 1, 1, 1)
    assert len(words) == 6
    assert all(w.is_reduced and w.degree == 1 for w in words)
    assert parse_hoch_word("10[01]") in words


def test_iota_one_simplex_coefficients():
    lift = iota_one_simplex(0, 1, 2)
    assert lift.coefficient(0) == parse_hoch_chain("01[10]")
    assert lift.coefficient(1) == parse_hoch_chain("-01[10|01|10]")
    assert lift.coefficient(2) == parse_hoch_chain("(2)01[10|01|10|01|10]")
    d = neg_cyclic_d(lift)
    # a single edge has a boundary at u^0; only the higher coefficients cancel
    assert d.coefficient(0) == parse_hoch_chain("e0[] - e1[]")
    assert d.coefficient(1).is_zero() and d.coefficient(2).is_zero()
    with pytest.raises(ValidationError):
        iota_one_simplex(1, 0, 1)


def test_connes_B_counts_every_rotation_of_a_periodic_word():
    once = parse_hoch_chain("e0[01|10|01|10] - e1[10|01|10|01]")
    assert hoch_b(parse_hoch_chain("01[10|01|10|01|10]")) == once
    assert connes_B(parse_hoch_chain("01[10|01|10]")) == once * 2
    # unit coefficients at u^2 leave a boundary behind
    unit = NegCyclicChain([parse_hoch_chain(t) for t in ("01[10]", "-01[10|01|10]", "01[10|01|10|01|10]")], 2)
    assert neg_cyclic_d(unit).coefficient(2) == once * -1


def test_iota_fundamental_on_the_circle():
    lam = iota_fundamental(triangle_boundary(), order=1)
    assert lam.coefficient(0) == parse_hoch_chain(LAMBDA0)
    assert lam.coefficient(1) == parse_hoch_chain("-01[10|01|10] - 12[21|12|21] + 02[20|02|20]")
    assert neg_cyclic_d(lam).is_zero()
    with pytest.raises(ValidationError):
        iota_fundamental(filled_triangle())


def test_neg_cyclic_truncation():
    lam = NegCyclicChain([parse_hoch_chain("01[10]")], 2)
    assert lam.coefficient(2).is_zero()
    assert lam.truncated(0).order == 0
    with pytest.raises(ValidationError):
        NegCyclicChain([], -1)


def test_angles_and_slots():
    a = Angle((P("01"), P("12")))
    assert (a.start, a.end, a.weight) == (0, 2, -2)
    left, right = a.split(1)
    assert left.inputs == (P("01"),) and right.inputs == (P("12"),)
    empty_left, _ = a.split(0)
    assert empty_left == Angle((), 0)
    config = (Angle((P("01"),)), Angle((), 0))
    assert output_slots(config) == [(0, 1), (0, 0)]
    with pytest.raises(ValidationError):
        Angle(())
    with pytest.raises(ValidationError):
        Angle((P("01"), P("02")))


def test_mu_and_unit_cochains():
    mu = mu_cochain()
    assert mu((make_angle([P("01"), P("12")]),)) == LinComb.basis((P("01*12"),))
    assert mu((make_angle([P("012")]),)) == LinComb({(P("02"),): -1, (P("01*12"),): 1})
    unit = unit_cochain()
    assert unit((Angle((), 2),)) == LinComb.basis((identity(2),))
    assert unit((make_angle([P("01")]),)).is_zero()


def test_mu_squares_to_zero_on_the_circle(circle):
    mu = mu_cochain()
    square = necklace_bracket_components(mu, mu)
    for config in configs_up_to(circle, 1, 3, 2):
        assert square(config).is_zero(), str(config)


def test_mu_squares_to_zero_through_a_two_simplex():
    mu = mu_cochain()
    square = gerstenhaber_bracket(mu, mu)
    assert square((make_angle([P("012"), P("20")]),)).is_zero()
    assert square((make_angle([P("01"), P("12"), P("20")]),)).is_zero()


def _random_cochain(rng, pc, lie_degree, name):
    configs = enumerate_configs(pc, 1, 1, 1)
    table = {}
    for c in configs:
        s, t = output_slots(c)[0]
        outs = pc.enumerate_basis(s, t, None, 2)
        if outs and rng.integers(0, 2):
            table[c] = LinComb.basis((outs[int(rng.integers(0, len(outs)))],), int(rng.integers(-2, 3)))
    return HigherCochain.from_table(1, lie_degree, table, name=name)


@pytest.mark.property
def test_bracket_graded_antisymmetry(circle):
    rng = np.random.default_rng(7)
    configs = configs_up_to(circle, 1, 2, 1)
    for _ in range(50):
        f = _random_cochain(rng, circle, int(rng.integers(-1, 3)), "f")
        g = _random_cochain(rng, circle, int(rng.integers(-1, 3)), "g")
        sign = -1 if (f.lie_degree * g.lie_degree) % 2 else 1
        left = gerstenhaber_bracket(f, g)
        right = gerstenhaber_bracket(g, f) * (-sign)
        for c in configs:
            assert left(c) == right(c)


def test_gerstenhaber_needs_one_output():
    with pytest.raises(ValidationError):
        gerstenhaber_bracket(HigherCochain.zero(2), mu_cochain())


def test_tabulate_respects_bead_bound():
    mu = mu_cochain()
    config = (make_angle([P("01"), P("12")]),)
    assert mu.tabulate([config], max_beads=2)[config] == LinComb.basis((P("01*12"),))
    with pytest.raises(BoundOverflow):
        mu.tabulate([config], max_beads=1)


def _jacobi_defect(bracket, f, g, h, configs):
    sign = -1 if (f.lie_degree * g.lie_degree) % 2 else 1
    left = bracket(f, bracket(g, h))
    right = bracket(bracket(f, g), h) + bracket(g, bracket(f, h)) * sign
    return [c for c in configs if left(c) != right(c)]


@pytest.mark.property
def test_gerstenhaber_jacobi(circle):
    rng = np.random.default_rng(11)
    configs = configs_up_to(circle, 1, 2, 1)
    mu = mu_cochain()
    for n in range(50):
        f, g, h = (_random_cochain(rng, circle, 0, name) for name in "fgh")
        # every third triple carries mu in a rotating position
        triple = [f, g, h]
        if n % 3 == 0:
            triple[n % 2] = mu
        assert _jacobi_defect(gerstenhaber_bracket, *triple, configs) == [], n


@pytest.mark.property
def test_necklace_jacobi_with_alpha(circle):
    rng = np.random.default_rng(13)
    alpha = alpha_cochain()
    configs = configs_up_to(circle, 2, 1, 1)
    mu = mu_cochain()
    for n in range(50):
        f = _random_cochain(rng, circle, 0, "f")
        g = mu if n % 5 == 0 else _random_cochain(rng, circle, 0, "g")
        assert _jacobi_defect(necklace_bracket_components, f, g, alpha, configs) == [], n
