import numpy as np
import pytest

from precy_pipeline.circle_example import build_circle
from precy_pipeline.core_algebra import LinComb
from precy_pipeline.hochschild import Angle, CochainBundle, NegCyclicChain, enumerate_hoch_words, mu_cochain
from precy_pipeline.logger import BoundOverflow, ValidationError
from precy_pipeline.nct import build_gamma2, domain
from precy_pipeline.pathcat import identity
from precy_pipeline.quiver import CyclicQuiverChain, TubeQuiver
from precy_pipeline.quiver_eval import (
    VertexAssignment, bubble_quiver, check_del_compatibility, check_rotation_unit, default_assignment, evaluate,
    evaluate_cyclic, face_walk,
)


@pytest.fixture(scope="module")
def circle():
    return build_circle()


@pytest.fixture(scope="module")
def assign(circle):
    return default_assignment({2: circle.alpha})


def test_face_walk_visits_each_corner_once():
    rq = bubble_quiver().to_ribbon()
    walk = face_walk(rq, ("o1", 0))
    assert walk
    assert len(set(walk)) == len(walk)
    assert ("o1", 0) not in walk


@pytest.mark.golden
def test_bubble_evaluates_to_unit(circle, assign):
    bubble = evaluate(bubble_quiver(), assign, circle.lam0, lie_degree=-1)
    for k in circle.pc.objects:
        assert bubble((Angle((), k),)) == LinComb.basis((identity(k),))


def test_evaluation_is_linear_in_the_chain(circle, assign):
    single = evaluate(bubble_quiver(), assign, circle.lam0)
    doubled = evaluate(bubble_quiver(), assign, circle.lam0 * 2)
    empty = evaluate(bubble_quiver(), assign, LinComb())
    for k in circle.pc.objects:
        config = (Angle((), k),)
        assert doubled(config) == single(config) * 2
        assert empty(config).is_zero()


def test_assignment_errors(circle):
    strict = VertexAssignment(CochainBundle({1: mu_cochain()}, 1))
    assert not strict.covers(bubble_quiver())
    with pytest.raises(ValidationError):
        strict.cochain_for("v", 2)
    named = VertexAssignment(CochainBundle({1: mu_cochain()}, 1), named={"v": circle.alpha})
    with pytest.raises(ValidationError):
        named.cochain_for("v", 1)


def test_uncovered_quiver_evaluates_to_zero(circle):
    loose = VertexAssignment(CochainBundle({1: mu_cochain()}, 1), strict=False)
    value = evaluate(bubble_quiver(), loose, circle.lam0)
    assert value((Angle((), 0),)).is_zero()


def test_cyclic_evaluation_needs_enough_u_terms(circle, assign):
    gamma = CyclicQuiverChain([LinComb.basis(bubble_quiver()), LinComb.basis(bubble_quiver())], 1)
    with pytest.raises(BoundOverflow):
        evaluate_cyclic(gamma, assign, NegCyclicChain([circle.lam0], 0))


def test_cyclic_evaluation_of_depth_one_chain(circle, assign):
    gamma = CyclicQuiverChain([LinComb.basis(bubble_quiver())], 1)
    value = evaluate_cyclic(gamma, assign, NegCyclicChain([circle.lam0], 0))
    for k in circle.pc.objects:
        assert value((Angle((), k),)) == LinComb.basis((identity(k),))


def test_rotation_unit_needs_edge_type(circle, assign):
    vertex_type = TubeQuiver(1, (True, False, False), ((), ((True, ()),), ()), 0)
    with pytest.raises(ValidationError):
        check_rotation_unit(vertex_type, assign, circle.lam0, [], 1)


def test_del_compatibility_on_bubble(circle, assign, small_settings):
    configs = domain(circle.pc, 1, small_settings)
    report = check_del_compatibility(bubble_quiver(), assign, circle.lam0, configs, 1)
    assert report.checked == len(configs)
    assert report.passed, report.failures


def test_rotation_unit_on_bubble(circle, assign, small_settings):
    configs = domain(circle.pc, 1, small_settings)
    report = check_rotation_unit(bubble_quiver(), assign, circle.lam0, configs, 1)
    assert report.checked == len(configs)
    assert report.passed, report.failures


@pytest.fixture(scope="module")
def word_sample(circle):
    rng = np.random.default_rng(5)
    words = enumerate_hoch_words(circle.pc, 1, 2, 2)
    picks = rng.choice(len(words), size=min(20, len(words)), replace=False)
    return [LinComb.basis(words[int(i)]) for i in picks] + [circle.lam0]


@pytest.mark.property
def test_del_compatibility_on_sampled_pairs(circle, assign, small_settings, word_sample):
    quivers = [bubble_quiver()] + sorted(build_gamma2(1).coefficient(0).keys(), key=TubeQuiver.sort_key)
    checked = 0
    for q in quivers:
        configs = domain(circle.pc, q.ell, small_settings)
        for lam in word_sample:
            report = check_del_compatibility(q, assign, lam, configs, 1)
            assert report.passed, (str(q), str(lam), report.failures)
            checked += 1
    assert checked >= 20


@pytest.mark.property
def test_rotation_unit_on_sampled_pairs(circle, assign, small_settings, word_sample):
    configs = domain(circle.pc, 1, small_settings)
    for lam in word_sample:
        report = check_rotation_unit(bubble_quiver(), assign, lam, configs, 1)
        assert report.passed, (str(lam), report.failures)
    assert len(word_sample) >= 20
