from fractions import Fraction

import pytest

from precy_pipeline.core_algebra import (
    LinComb, OrientationWord, koszul_sign, lin_sum, reorder_orientation, scalar_str, solve,
    solve_linear_map, solve_or_raise, sparse_rank, to_scalar,
)
from precy_pipeline.logger import InconsistentSystem, ValidationError


def test_to_scalar_parses_rationals():
    assert to_scalar("3/6") == Fraction(1, 2)
    assert to_scalar(4) == Fraction(4)
    assert scalar_str(Fraction(-3, 4)) == "-3/4"
    assert scalar_str(Fraction(5)) == "5"


@pytest.mark.parametrize("bad", ["1/0", "x", True, 1.5])
def test_to_scalar_rejects(bad):
    with pytest.raises(ValidationError):
        to_scalar(bad)


def test_lincomb_drops_zeros_and_cancels():
    a = LinComb({"x": 1, "y": "1/2", "z": 0})
    assert len(a) == 2
    b = LinComb({"x": -1})
    assert (a + b) == LinComb({"y": Fraction(1, 2)})
    assert (a - a).is_zero()
    assert (a * 0) == 0
    assert lin_sum([a, b, a]) == LinComb({"x": 1, "y": 1})


def test_lincomb_apply_is_linear():
    a = LinComb({1: 2, 2: 3})
    doubled = a.apply(lambda n: LinComb({n * 10: 1, 0: -1}))
    assert doubled == LinComb({10: 2, 20: 3, 0: -5})


def test_koszul_sign_swapping_odd_elements():
    assert koszul_sign([1, 0], [1, 1]) == -1
    assert koszul_sign([1, 0], [1, 2]) == 1
    assert koszul_sign([2, 1, 0], [1, 1, 1]) == -1
    with pytest.raises(ValidationError):
        koszul_sign([0, 0], [1, 1])


def test_reorder_orientation_weights():
    word = OrientationWord(("e1", "e2"), ("edge", "edge"))
    swapped = OrientationWord(("e2", "e1"), ("edge", "edge"))
    # edges weigh d - 1: odd for d = 0 and d = 2, even for d = 1
    assert reorder_orientation(word, swapped, 0) == -1
    assert reorder_orientation(word, swapped, 1) == 1
    vertices = OrientationWord(("v", "w"), ("vertex", "vertex"))
    assert reorder_orientation(vertices, OrientationWord(("w", "v"), ("vertex", "vertex")), 1) == -1


def test_orientation_word_rejects_repeats():
    with pytest.raises(ValidationError):
        OrientationWord(("e", "e"), ("edge", "edge"))


def test_sparse_rank():
    rows = [{"a": 1, "b": 1}, {"b": 1, "c": 1}, {"a": 1, "c": -1}]
    assert sparse_rank(rows) == 2
    assert sparse_rank([]) == 0


def test_solve_particular_solution():
    rows = [{"x": 1, "y": 1}, {"x": 1, "y": -1}]
    solution = solve(rows, [3, 1])
    assert solution == {"x": 2, "y": 1}


def test_solve_inconsistent():
    rows = [{"x": 1}, {"x": 1}]
    assert solve(rows, [1, 2]) is None
    with pytest.raises(InconsistentSystem):
        solve_or_raise(rows, [1, 2])


def test_solve_linear_map():
    def image(u):
        return LinComb({u: 1, u + 1: -1})

    target = LinComb({0: 1, 3: -1})
    x = solve_linear_map([0, 1, 2], image, target)
    assert x == LinComb({0: 1, 1: 1, 2: 1})
    assert solve_linear_map([0], image, LinComb({5: 1})) is None
