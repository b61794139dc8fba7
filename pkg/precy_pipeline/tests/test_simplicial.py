import json

import pytest

from precy_pipeline.logger import ValidationError
from precy_pipeline.simplicial import (
    Simplex, SimplicialChain, boundary, filled_triangle, load_complex, serialize_complex,
    triangle_boundary, validate_fundamental_chain,
)


def test_triangle_boundary_chain_is_a_cycle():
    K = triangle_boundary()
    report = validate_fundamental_chain(K, K.fundamental_chain)
    assert report.valid
    assert boundary(K.fundamental_chain, K).terms.is_zero()


def test_open_chain_is_rejected():
    K = triangle_boundary()
    chain = SimplicialChain.from_dict({Simplex((0, 1)): 1, Simplex((1, 2)): 1})
    report = validate_fundamental_chain(K, chain)
    assert not report.valid
    assert "boundary" in report.message


def test_boundary_squares_to_zero_on_the_two_simplex():
    K = filled_triangle()
    top = SimplicialChain.from_dict({Simplex((0, 1, 2)): 1})
    edges = boundary(top, K)
    assert edges.terms.coeff(Simplex((0, 2))) == -1
    assert boundary(edges, K).terms.is_zero()


def test_load_complex_checks_faces():
    doc = {"vertices": [0, 1, 2], "simplices": [[0, 1], [1, 2], [0, 1, 2]]}
    with pytest.raises(ValidationError):
        load_complex(json.dumps(doc))


@pytest.mark.parametrize("text", [
    "not json",
    json.dumps({"vertices": [0, 1]}),
    json.dumps({"vertices": [1, 0], "simplices": []}),
    json.dumps({"vertices": [0, 1], "simplices": [[1, 0]]}),
    json.dumps({"vertices": [0, 1], "simplices": [[0, 5]]}),
])
def test_load_complex_rejects_malformed(text):
    with pytest.raises(ValidationError):
        load_complex(text)


def test_serialize_and_load_keep_the_chain():
    K = triangle_boundary()
    again = load_complex(serialize_complex(K))
    assert again == K
    assert again.fundamental_chain == K.fundamental_chain


def test_tagged_simplices_are_distinct():
    doc = {"vertices": [0, 1], "simplices": [[0, 1], {"vertices": [0, 1], "tag": "s2"}]}
    K = load_complex(json.dumps(doc))
    assert len(K.edges()) == 2
    assert str(Simplex((0, 1), "s2")) == "(01)_s2"
