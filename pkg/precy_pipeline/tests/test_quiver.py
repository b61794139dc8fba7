import pytest

from precy_pipeline.core_algebra import LinComb
from precy_pipeline.logger import ValidationError, WindowTooSmall
from precy_pipeline.quiver import (
    TubeQuiver, boundary_del, canonicalize, chain_from_json, chain_to_json, classify_edge_or_vertex,
    contract_expand_path, degree_d, deserialize_quiver, enumerate_tube_quivers, get_complex,
    has_full_output_vertex, homology, max_internal_vertices, pair_with_cocycle, rotate_chain, rotate_zl,
    rotation_R, serialize_quiver, symmetrize_zl,
)
from precy_pipeline.quiver_eval import bubble_quiver


@pytest.fixture(scope="module")
def small_quivers():
    return enumerate_tube_quivers(1, 1, None, 3) + enumerate_tube_quivers(2, 0, None, 3)


def test_bubble_quiver_shape():
    q = bubble_quiver()
    assert q.problems() == []
    assert classify_edge_or_vertex(q) == "edge"
    assert [q.in_out(v) for v in q.internal_vertices] == [(2, 1), (2, 1), (0, 2)]
    assert degree_d(q, 0) == 0
    assert degree_d(q, 1) == -1
    assert pair_with_cocycle(LinComb.basis(q)) == 0


def test_invalid_quivers_are_reported():
    directed = TubeQuiver(1, (True, True), ((), ((True, ()),)), 0)
    assert "orientation has a directed cycle" in directed.problems()
    too_short = TubeQuiver(1, (True,), (((True, ()),),), 0)
    assert too_short.problems() == ["cycle needs at least two vertices"]


def test_enumeration_is_valid_and_canonical(small_quivers):
    assert bubble_quiver() in small_quivers
    for q in small_quivers:
        assert q.problems() == [], str(q)
        again, _ = canonicalize(q.to_ribbon())
        assert again == q


def test_enumeration_rejects_zero_outputs():
    with pytest.raises(ValidationError):
        enumerate_tube_quivers(0, 1)


def test_canonicalize_checks_labels():
    rq = bubble_quiver().to_ribbon()
    rq.labels = {"o1": 2}
    with pytest.raises(ValidationError):
        canonicalize(rq)


def test_serialized_orientation_sign():
    q = bubble_quiver()
    doc = serialize_quiver(q)
    assert deserialize_quiver(doc, 1) == (q, 1)
    order = doc["orientation"]
    i, j = order.index("c0"), order.index("c1")
    order[i], order[j] = order[j], order[i]
    # vertices weigh d: odd for d = 1, even for d = 2
    assert deserialize_quiver(doc, 1) == (q, -1)
    assert deserialize_quiver(doc, 2) == (q, 1)


def test_deserialize_rejects_incomplete_orientation():
    doc = serialize_quiver(bubble_quiver())
    doc["orientation"] = doc["orientation"][:-1]
    with pytest.raises(ValidationError):
        deserialize_quiver(doc, 1)


def test_chain_json_round_trip(small_quivers):
    chain = LinComb({q: i + 1 for i, q in enumerate(small_quivers[:4])})
    assert chain_from_json(chain_to_json(chain), 0) == chain


def test_rotation_of_one_output_quivers_is_trivial():
    c = LinComb.basis(bubble_quiver(), 3)
    assert rotate_chain(c, 0) == c
    assert rotate_zl(bubble_quiver()) == bubble_quiver()


@pytest.mark.parametrize("d", [0, 1, 2])
def test_symmetrizer_is_idempotent(small_quivers, d):
    two = [q for q in small_quivers if q.ell == 2]
    chain = LinComb({q: 1 for q in two[:3]})
    once = symmetrize_zl(chain, d)
    assert symmetrize_zl(once, d) == once
    assert rotate_chain(once, d) == once


def test_max_internal_vertices():
    assert max_internal_vertices(2) == 5


def test_homology_window_too_small():
    with pytest.raises(WindowTooSmall):
        homology(2, 0, (0, 1))


def test_homology_of_the_two_output_complex():
    report = homology(2, 0, (-2, 3), 5)
    assert report.betti == {-1: 0, 0: 1, 1: 1, 2: 0}


def test_cyclic_homology_is_a_point():
    report = homology(2, 0, (-2, 3), 5, cyclic=True)
    assert report.betti == {-1: 0, 0: 1, 1: 0, 2: 0}


LEAF = ((True, ()),)


def test_degree_of_the_worked_quivers():
    # five-vertex cycles: two sources in the first, two sources and a (1, 2) vertex in the second
    gamma = TubeQuiver(2, (True, False, True, False, True), ((), LEAF, (), LEAF, ()), 0)
    gamma_prime = TubeQuiver(3, (False, True, False, True, True), (LEAF, (), LEAF, (), LEAF), 0)
    assert gamma.problems() == [] and gamma_prime.problems() == []
    for d in range(4):
        assert degree_d(gamma, d) == -2 * d
        assert degree_d(gamma_prime, d) == -3 * d + 2


WINDOWS = [(2, 0), (2, 1), (3, 1)]


@pytest.mark.parametrize("ell,d", WINDOWS)
def test_del_squares_to_zero(ell, d):
    cx = get_complex(ell, d, max_internal_vertices(ell))
    for q in cx.basis:
        image = cx.boundary_of(q)
        assert all(degree_d(p, d) == degree_d(q, d) - 1 for p in image.keys())
        assert cx.boundary(image).is_zero(), str(q)


@pytest.mark.parametrize("ell,d", WINDOWS)
def test_rotation_squares_to_zero(ell, d):
    cx = get_complex(ell, d, max_internal_vertices(ell))
    for q in cx.basis:
        image = rotation_R(LinComb.basis(q), d)
        assert all(degree_d(p, d) == degree_d(q, d) + 1 for p in image.keys())
        assert rotation_R(image, d).is_zero(), str(q)


@pytest.mark.parametrize("ell,d", WINDOWS)
def test_del_and_rotation_anticommute(ell, d):
    cx = get_complex(ell, d, max_internal_vertices(ell))
    for q in cx.basis:
        x = LinComb.basis(q)
        assert (cx.boundary(rotation_R(x, d)) + rotation_R(cx.boundary(x), d)).is_zero(), str(q)


def test_three_output_homology():
    report = homology(3, 0, (-2, 3), 7)
    assert {n: b for n, b in report.betti.items() if b} == {0: 1, 1: 1}
    cyclic = homology(3, 0, (-2, 3), 7, cyclic=True)
    assert {n: b for n, b in cyclic.betti.items() if b} == {0: 1}


def test_homology_records_bounds():
    report = homology(2, 0, (-2, 3), 5, threads=2)
    doc = report.as_dict()
    assert doc["complete"] is True
    assert doc["size_bound"] == 5
    assert set(doc["betti"]) == {"-1", "0", "1", "2"}


def _one_move_pair(cx):
    """Two quivers with an l-output vertex that both contract to the same quiver."""
    for p in cx.basis:
        if not has_full_output_vertex(p):
            continue
        image = {q: c for q, c in cx.boundary_of(p).items() if has_full_output_vertex(q)}
        if len(image) == 2:
            (q1, a), (q2, b) = sorted(image.items(), key=lambda t: t[0].sort_key())
            if abs(a) == abs(b):
                return q1, q2
    pytest.fail("no pair of quivers one contraction apart")


@pytest.mark.parametrize("d", [0, 1])
def test_contract_expand_path(d):
    cx = get_complex(2, d, max_internal_vertices(2))
    q1, q2 = _one_move_pair(cx)
    path, sign = contract_expand_path(q1, q2, d)
    image = LinComb({q: c for q, c in boundary_del(path, d).items() if has_full_output_vertex(q)})
    assert image == LinComb({q1: 1}) + LinComb({q2: sign})
    assert contract_expand_path(q1, q1, d) == (LinComb(), -1)


def test_contract_expand_path_needs_equal_arity():
    two = enumerate_tube_quivers(2, 0, None, 2)[0]
    with pytest.raises(ValidationError):
        contract_expand_path(bubble_quiver(), two, 0)
