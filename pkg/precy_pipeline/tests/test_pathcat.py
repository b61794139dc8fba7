import pytest

from precy_pipeline.core_algebra import LinComb
from precy_pipeline.logger import ValidationError
from precy_pipeline.pathcat import (
    CLOCKWISE, COUNTER_CLOCKWISE, IDENTITY, PathCategory, classify_orientation, compose, compose_necklaces,
    differential, identity, nk, parse_necklace, winding,
)
from precy_pipeline.simplicial import filled_triangle, triangle_boundary


def test_parse_and_print_paths():
    P = parse_necklace("01*12")
    assert (P.source, P.target, P.degree) == (0, 2, 0)
    assert str(P) == "01*12"
    assert str(parse_necklace("21")) == "21"
    assert parse_necklace("012").degree == -1


def test_inverse_pairs_cancel():
    assert parse_necklace("01*10") == identity(0)
    assert parse_necklace("12*21*10") == parse_necklace("10")


def test_composition_is_left_to_right():
    assert compose_necklaces(parse_necklace("01"), parse_necklace("12")) == parse_necklace("01*12")
    assert compose(nk("01"), nk("e1")) == nk("01")
    with pytest.raises(ValidationError):
        compose_necklaces(parse_necklace("01"), parse_necklace("02"))


@pytest.mark.parametrize("token", ["0", "00", "021", "x1"])
def test_bad_beads(token):
    with pytest.raises(ValidationError):
        parse_necklace(token)


def test_differential_of_two_simplex():
    assert differential(nk("012")) == LinComb({parse_necklace("02"): -1, parse_necklace("01*12"): 1})


def test_differential_squares_to_zero():
    x = nk("0123")
    assert differential(differential(x)).is_zero()
    y = nk("012") + nk("01*123")
    assert differential(differential(y)).is_zero()


def test_winding_and_orientation_classes():
    assert winding(parse_necklace("01*12*20")) == 3
    assert classify_orientation(parse_necklace("01")) == COUNTER_CLOCKWISE
    assert classify_orientation(parse_necklace("20")) == COUNTER_CLOCKWISE
    assert classify_orientation(parse_necklace("02")) == CLOCKWISE
    assert classify_orientation(identity(1)) == IDENTITY
    with pytest.raises(ValidationError):
        classify_orientation(parse_necklace("01"), filled_triangle())


def test_enumerate_loops_on_the_circle():
    pc = PathCategory(triangle_boundary())
    loops = pc.enumerate_basis(0, 0, 0, 3)
    assert [str(x) for x in loops] == ["e0", "01*12*20", "02*21*10"]
    assert pc.enumerate_basis(0, 1, None, 1) == [parse_necklace("01")]
    with pytest.raises(ValidationError):
        pc.enumerate_basis(0, 0, 0, -1)
