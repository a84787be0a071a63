from itertools import combinations, product

import pytest

from hyperqr.errors import BudgetExceeded
from hyperqr.galois import (
    baer_subplane,
    blocking_sets,
    check_baer_subset,
    check_plane_axioms,
    difference_set_plane,
    fano,
    gf,
    iso_check,
    least_irreducible,
    line_type_census,
    pg,
    prime_power,
    wedge_c0_triples,
    wedge_choices,
    wedge_colouring,
)
from hyperqr.embed import is_embedding
from hyperqr.hypergraph import UniformHypergraph

CENSUS = {"C0^4C1^1": 2, "C0^1C1^4": 9, "C0^3C1^2": 3, "C0^2C1^3": 7}


def brute_lines(q):
    """Lines of PG_2(q) for prime q as the 2-dim subspaces of F_q^3 (spans of point pairs)."""
    vecs = [v for v in product(range(q), repeat=3) if any(v)]
    points = {}
    for v in vecs:
        last = max(i for i in range(3) if v[i])
        inv = pow(v[last], -1, q)
        points.setdefault(tuple(x * inv % q for x in v), None)
    pts = sorted(points)
    idx = {p: i for i, p in enumerate(pts)}
    lines = set()
    for a, b in combinations(pts, 2):
        span = set()
        for s, t in product(range(q), repeat=2):
            v = tuple((s * x + t * y) % q for x, y in zip(a, b))
            if any(v):
                last = max(i for i in range(3) if v[i])
                inv = pow(v[last], -1, q)
                span.add(idx[tuple(x * inv % q for x in v)])
        lines.add(tuple(sorted(span)))
    return len(pts), lines


def test_prime_power():
    assert prime_power(9) == (3, 2) and prime_power(6) is None and prime_power(1) is None


@pytest.mark.parametrize("q", [2, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32])
def test_fields_validate(q):
    F = gf(q)
    F.validate()
    assert F.q == q
    assert F.mul[1].tolist() == list(range(q))


def test_gf2_tables():
    F = gf(2)
    assert F.add.tolist() == [[0, 1], [1, 0]] and F.mul.tolist() == [[0, 0], [0, 1]]


def test_gf4_structure():
    assert least_irreducible(2, 2) == [1, 1, 1]
    F = gf(4)
    assert max(F.multiplicative_order(a) for a in range(1, 4)) == 3


@pytest.mark.parametrize("q", [6, 10, 12, 64, 0])
def test_bad_orders(q):
    with pytest.raises(ValueError):
        gf(q)


@pytest.mark.parametrize("q,size", [(2, 7), (3, 13), (4, 21), (5, 31)])
def test_plane_sizes_and_axioms(q, size):
    P = pg(2, q)
    assert len(P.points) == len(P.lines) == size
    assert all(len(L) == q + 1 for L in P.lines)
    check_plane_axioms(P)
    lines = [set(L) for L in P.lines]
    for a, b in combinations(range(size), 2):
        assert sum(a in L and b in L for L in lines) == 1
    for L, M in combinations(lines, 2):
        assert len(L & M) == 1


@pytest.mark.parametrize("q", [2, 3, 5])
def test_prime_planes_match_subspace_oracle(q):
    n, lines = brute_lines(q)
    P = pg(2, q)
    assert len(P.points) == n
    assert iso_check(P, UniformHypergraph(n, q + 1, lines)) is not None


def test_fano_is_pg22():
    assert fano() == pg(2, 2).hypergraph


def test_pg3_geometry():
    H = pg(3, 2).hypergraph
    assert H.n == 15 and H.num_edges == 35 and H.k == 3


def test_difference_set_models():
    D = difference_set_plane()
    phi = iso_check(D, pg(2, 4))
    assert phi is not None and is_embedding(D, pg(2, 4).hypergraph, phi)
    assert iso_check(difference_set_plane(7, (1, 2, 4)), fano()) is not None
    assert iso_check(pg(2, 2), pg(2, 3)) is None


def test_baer_subplane():
    B = baer_subplane(pg(2, 4))
    assert len(B.points) == 7 and len(B.full_lines) == 7 and len(B.tangent_lines) == 14
    assert iso_check(B.subplane, fano()) is not None
    assert B.spectrum == {1, 3}
    Z = check_baer_subset(difference_set_plane(), range(0, 21, 3), 2)
    assert len(Z.full_lines) == 7 and iso_check(Z.subplane, fano()) is not None
    with pytest.raises(ValueError):
        baer_subplane(pg(2, 3))


def test_baer_subplane_order_9():
    B = baer_subplane(pg(2, 9))
    assert len(B.points) == 13 and B.spectrum == {1, 4}
    assert iso_check(B.subplane, pg(2, 3)) is not None


def brute_blocking(H):
    lines = [set(L) for L in H.edges]
    out = []
    for m in range(1 << H.n):
        S = {v for v in range(H.n) if m >> v & 1}
        if all(0 < len(S & L) < len(L) for L in lines):
            out.append(tuple(sorted(S)))
    return sorted(out)


def test_blocking_sets_fano_none():
    assert blocking_sets(pg(2, 2)).sets == []


def test_blocking_sets_pg23():
    P = pg(2, 3)
    rep = blocking_sets(P)
    assert sorted(rep.sets) == brute_blocking(P.hypergraph)
    assert set(rep.histogram) == {6, 7}
    assert all(rep.tags[s] == "triangle" for s in rep.sets if len(s) == 6)
    sets = set(rep.sets)
    assert all(tuple(sorted(set(range(13)) - set(s))) in sets for s in sets)


def test_blocking_census_invariant_under_isomorphism():
    a = blocking_sets(pg(2, 4)).histogram
    b = blocking_sets(difference_set_plane()).histogram
    assert a == b


def test_blocking_budget():
    with pytest.raises(BudgetExceeded):
        blocking_sets(pg(2, 4), budget=1000)


def test_wedge_census_one_choice():
    P = pg(2, 4)
    x, y, z, w = next(wedge_choices(P))
    col = wedge_colouring(P, x, y, z, w)
    # 9 points on two lines through x, minus y and z, plus w; incidence count 40 = 5 * 8
    assert len(col[0]) == 8 and len(col[1]) == 13
    cen = line_type_census(P, col)
    assert cen == CENSUS and sum(cen.values()) == 21


def test_wedge_triples_structure():
    P = pg(2, 4)
    for x, y, z, w in list(wedge_choices(P))[:200]:
        ds = set(P.line(x, y)) - {x, y}
        dps = set(P.line(x, z)) - {x, z}
        triples = wedge_c0_triples(P, x, y, z, w)
        assert len(triples) == 3
        used_d, used_dp = set(), set()
        for t in triples:
            rest = set(t) - {w}
            assert w in t and len(rest & ds) == 1 and len(rest & dps) == 1
            used_d |= rest & ds
            used_dp |= rest & dps
        assert used_d == ds and used_dp == dps


def test_wedge_rejects():
    P = pg(2, 4)
    L = P.lines[0]
    with pytest.raises(ValueError):
        wedge_colouring(P, L[0], L[1], L[2], L[3])
    x, y, z, w = next(wedge_choices(P))
    with pytest.raises(ValueError):
        wedge_colouring(P, x, y, z, y)
