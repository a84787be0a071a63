from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyperqr.complex import (
    UNDEFINED,
    PartiteComplex,
    PartiteGround,
    generated_complex,
    strict_subsets_complex,
    top_layer_complex,
)
from hyperqr.errors import ContractError, NotPartiteError, UndefinedDensityError
from hyperqr.homcomplex import blowup
from hyperqr.hypergraph import UniformHypergraph


def random_complex(rng, sizes, k, p=0.6):
    g = PartiteGround(tuple(sizes))
    full = PartiteComplex.complete(g, k)
    keep = {A: rng.random(g.shape(A)) < p for A in full.indices() if A}
    return full.subcomplex(keep)


@st.composite
def complexes(draw, r=3, k=3):
    sizes = draw(st.lists(st.integers(1, 3), min_size=r, max_size=r))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.floats(0.2, 1.0))
    return random_complex(np.random.default_rng(seed), sizes, k, p)


def test_complete_densities_are_one():
    C = PartiteComplex.complete(PartiteGround((2, 3, 2)), 3)
    for A in C.indices():
        assert C.relative_density(A) == 1


def test_empty_index_density_is_one():
    C = random_complex(np.random.default_rng(0), (3, 3, 3), 3, 0.3)
    assert C.relative_density(()) == 1


def test_half_triangles():
    g = PartiteGround((2, 2, 2))
    top = np.zeros((2, 2, 2), dtype=bool)
    for t in product(range(2), repeat=3):
        top[t] = sum(t) % 2 == 0
    C = top_layer_complex(g, top)
    assert C.relative_density((0, 1, 2)) == Fraction(1, 2)


def test_undefined_density():
    g = PartiteGround((2, 2))
    C = PartiteComplex.from_layers(g, 2, {(0,): np.zeros(2, dtype=bool), (0, 1): np.zeros((2, 2), dtype=bool)})
    assert C.relative_density((0, 1)) is UNDEFINED
    with pytest.raises(UndefinedDensityError):
        C.require_density((0, 1))


def test_downward_closure_enforced():
    g = PartiteGround((2, 2))
    with pytest.raises(ContractError):
        PartiteComplex.from_layers(g, 2, {(0,): np.array([True, False])})


def test_single_edge_generated():
    g = PartiteGround((1, 1, 1))
    C = generated_complex(UniformHypergraph(3, 3, [(0, 1, 2)]), g)
    for A in C.indices():
        assert C.count(A) == 1


def test_octahedron_generated():
    O3 = blowup(UniformHypergraph(3, 3, [(0, 1, 2)]), 2)
    C = generated_complex(O3, PartiteGround((2, 2, 2)))
    assert C.count((0, 1, 2)) == 8
    S = strict_subsets_complex(O3, PartiteGround((2, 2, 2)))
    assert S.k == 2 and S.count((0, 1)) == 4


def test_empty_graph_generated():
    g = PartiteGround((2, 3))
    C = generated_complex(UniformHypergraph(5, 2, []), g)
    assert C.count((0,)) == 2 and C.count((1,)) == 3 and C.count((0, 1)) == 0


def test_non_partite_rejected():
    with pytest.raises(NotPartiteError):
        generated_complex(UniformHypergraph(4, 2, [(0, 1)]), PartiteGround((2, 2)))


@given(complexes(), st.integers(0, 2**32 - 1))
def test_subcomplex_revalidates(C, seed):
    rng = np.random.default_rng(seed)
    keep = {A: rng.random(C.ground.shape(A)) < 0.5 for A in C.indices() if A}
    assert C.subcomplex(keep).is_downward_closed()
    assert C.is_downward_closed()


@given(complexes())
def test_json_roundtrip(C):
    assert PartiteComplex.from_json(C.to_json()) == C


@given(st.lists(st.integers(1, 3), min_size=3, max_size=3), st.integers(0, 2**32 - 1))
def test_relative_equals_absolute_over_complete_underlay(sizes, seed):
    g = PartiteGround(tuple(sizes))
    top = np.random.default_rng(seed).random(g.shape((0, 1, 2))) < 0.5
    C = top_layer_complex(g, top)
    assert C.relative_density((0, 1, 2)) == C.absolute_density((0, 1, 2))


def test_star_definition():
    rng = np.random.default_rng(5)
    C = random_complex(rng, (3, 2, 3), 3, 0.7)
    A = (0, 1, 2)
    expected = {
        t for t in product(*[range(s) for s in C.ground.sizes])
        if C.contains((0, 1), t[:2]) and C.contains((0, 2), (t[0], t[2])) and C.contains((1, 2), t[1:])
    }
    assert C.star(A) == expected
