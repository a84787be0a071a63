"""Acceptance criteria, one test per criterion.

Each test is tagged with ``criterion(number, title)``; the conftest prints a
PASS/FAIL line for every criterion at the end of the run.
"""
import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from hyperqr.complex import PartiteComplex, PartiteGround, generated_complex, top_layer_complex
from hyperqr.constructions import (
    CONSTRUCTIONS,
    layered_random_complex,
    roedl_tournament,
    tetrahedron_count,
)
from hyperqr.embed import certify_construction, contains_copy, is_embedding, multicolour_matching, random_graph_triple
from hyperqr.galois import (
    blocking_sets,
    check_plane_axioms,
    difference_set_plane,
    fano,
    iso_check,
    line_type_census,
    pg,
    wedge_choices,
    wedge_colouring,
)
from hyperqr.homcomplex import augment, hom_complex
from hyperqr.hypergraph import UniformHypergraph
from hyperqr.quasirandom import (
    WeightedEdgeFunction,
    balanced_function,
    box_norm,
    c4,
    gowers_inner_product,
    hidden_parameters,
    oct,
    partite_hom_density,
    weighted_hom_average,
)
from hyperqr.regularity import DecomposeParams, block_bipartite, decompose, equalise, msd_monotone_check

crit = pytest.mark.criterion


def faces(m):
    return list(product((0, 1), repeat=m))


def graph_complex(G):
    return top_layer_complex(PartiteGround(G.shape), np.asarray(G, bool))


def shared_pair():
    return generated_complex(UniformHypergraph(4, 3, [(0, 1, 2), (0, 1, 3)]), PartiteGround((1, 1, 2)))


class Clock:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        print(f"runtime {self.elapsed:.2f}s (limit {self.limit}s)")
        if exc[0] is None:
            assert self.elapsed < self.limit


@crit(1, "projective generators")
def test_criterion_01_projective_generators():
    with Clock(5):
        for q, size in ((2, 7), (3, 13), (4, 21)):
            P = pg(2, q)
            assert (len(P.points), len(P.lines), {len(L) for L in P.lines}) == (size, size, {q + 1})
            check_plane_axioms(P)
            lines = [set(L) for L in P.lines]
            for a in range(size):
                for b in range(a + 1, size):
                    assert sum(a in L and b in L for L in lines) == 1
        D = difference_set_plane()
        phi = iso_check(D, pg(2, 4))
        assert phi is not None and is_embedding(D, pg(2, 4).hypergraph, phi)


@crit(2, "blocking sets")
def test_criterion_02_blocking_sets():
    with Clock(10):
        assert blocking_sets(pg(2, 2)).sets == []
        rep = blocking_sets(pg(2, 3))
        assert set(rep.histogram) == {6, 7}
        assert all(rep.tags[s] == "triangle" for s in rep.sets if len(s) == 6)
        sets = set(rep.sets)
        assert all(tuple(sorted(set(range(13)) - set(s))) in sets for s in sets)
        print("PG_2(3) blocking-set histogram", rep.histogram)


@crit(3, "wedge census in PG_2(4)")
def test_criterion_03_wedge_census():
    expected = {"C0^4C1^1": 2, "C0^1C1^4": 9, "C0^3C1^2": 3, "C0^2C1^3": 7}
    with Clock(60):
        P = pg(2, 4)
        n = 0
        for choice in wedge_choices(P):
            assert line_type_census(P, wedge_colouring(P, *choice)) == expected
            n += 1
        print(f"{n} choices of (x, y, z, w) checked")
        assert n > 0


@crit(4, "construction certification")
def test_criterion_04_certification():
    with Clock(600):
        for n in range(3, 13):
            r = certify_construction(CONSTRUCTIONS["h2"], n, threads=4)
            assert r["delta_2"] == n // 2 and r["fano_free"] is True, r
        for n in range(4, 15):
            r = certify_construction(CONSTRUCTIONS["oddly-bipartite"], n, threads=4, q=3)
            assert r["delta_3"] == n // 2 - 2 and r["pg23_free"] is True, r
        for n in range(8, 15, 2):
            r = certify_construction(CONSTRUCTIONS["pg23-improved"], n, threads=4)
            assert r["delta_3"] == n // 2 - 1 and r["pg23_free"] is True, r


@crit(5, "structural inclusions PG_2(q) in e^{+q}")
def test_criterion_05_inclusions():
    with Clock(60):
        e3 = UniformHypergraph(3, 3, [(0, 1, 2)])
        e4 = UniformHypergraph(4, 4, [(0, 1, 2, 3)])
        assert contains_copy(augment(e3, 2), fano()).found
        assert contains_copy(augment(e4, 3), pg(2, 3).hypergraph).found


@crit(6, "exact identity suite")
def test_criterion_06_exact_identities():
    rng = np.random.default_rng(606)
    C4 = PartiteComplex.complete(PartiteGround((2, 2)), 2)
    for _ in range(50):
        nx, ny = (int(v) for v in rng.integers(1, 5, size=2))
        G = graph_complex(rng.random((nx, ny)) < rng.uniform(0.2, 1.0))
        Gp = hom_complex(C4, G)
        lhs = c4(Gp.mask((0, 1)).astype(object))
        K44 = PartiteComplex.complete(PartiteGround((4, 4)), 2)
        assert lhs == partite_hom_density(K44, G).measured
    F = shared_pair()
    checked = 0
    for seed in range(20):
        H = layered_random_complex(3, 0.8, 0.7, seed)
        if not all(H.relative_density(A) for A in H.indices()):
            continue
        assert weighted_hom_average(F, [], {}, H).measured == partite_hom_density(F, H).measured
        for A in H.indices():
            if A:
                assert balanced_function(H, A).total() == 0
        checked += 1
    assert checked >= 10
    for _ in range(100):
        G = rng.random(tuple(int(v) for v in rng.integers(1, 8, size=2))) < rng.random()
        d = Fraction(int(G.sum()), G.size)
        assert c4(G.astype(object)) >= d**4


@crit(7, "Gowers property suite")
def test_criterion_07_gowers():
    rng = np.random.default_rng(707)
    worst = -math.inf
    for _ in range(1000):
        m = int(rng.integers(1, 4))
        sizes = tuple(int(s) for s in rng.integers(1, 7, size=m))
        g = PartiteGround(sizes)
        fs = {B: WeightedEdgeFunction(g, tuple(range(m)), rng.uniform(-1, 1, sizes)) for B in faces(m)}
        lhs = abs(gowers_inner_product(fs))
        rhs = math.prod(box_norm(f) for f in fs.values())
        worst = max(worst, lhs - rhs)
        assert lhs <= rhs + 1e-9
        if m >= 2:
            assert oct(fs[faces(m)[0]]) >= -1e-12
    print(f"largest |<f_B>| - prod ||f_B|| = {worst:.3e}")
    for _ in range(100):
        m = int(rng.integers(2, 4))
        sizes = tuple(int(s) for s in rng.integers(1, 5, size=m))
        vals = np.vectorize(lambda v: Fraction(int(v), 16), otypes=[object])(rng.integers(-16, 17, sizes))
        f = WeightedEdgeFunction(PartiteGround(sizes), tuple(range(m)), vals)
        v = oct(f)
        assert v >= 0 and oct(-f) == v
    for _ in range(200):
        sizes = tuple(int(s) for s in rng.integers(1, 7, size=2))
        g = PartiteGround(sizes)
        a, b = rng.uniform(-1, 1, sizes), rng.uniform(-1, 1, sizes)
        f, h, s = (WeightedEdgeFunction(g, (0, 1), x) for x in (a, b, a + b))
        assert box_norm(s) <= box_norm(f) + box_norm(h) + 1e-9


@crit(8, "counting-lemma empirics")
def test_criterion_08_counting_empirics():
    F = shared_pair()
    target = 2.0**-7
    within = smaller = 0
    for seed in range(10):
        C40 = layered_random_complex(40, 0.5, 0.5, seed)
        C20 = layered_random_complex(20, 0.5, 0.5, seed)
        est = partite_hom_density(F, C40, mode="montecarlo", samples=10_000, seed=seed)
        z = (est.measured.mean - target) / est.measured.stderr
        within += abs(z) <= 4
        d40 = abs(float(partite_hom_density(F, C40).measured) - target)
        d20 = abs(float(partite_hom_density(F, C20).measured) - target)
        smaller += d40 < d20
        print(f"seed {seed}: z = {z:+.2f}, exact deviation n=20 {d20:.5f}, n=40 {d40:.5f}")
    print(f"within 4 SE: {within}/10, shrinking: {smaller}/10")
    assert within >= 9 and smaller >= 7


@crit(9, "Roedl tournament example")
def test_criterion_09_roedl():
    n = 10
    triples = 4 * n**3
    for seed in range(5):
        H = roedl_tournament(n, seed)
        assert tetrahedron_count(H) == 0
        p = H.num_edges / triples
        sigma = math.sqrt(0.25 * 0.75 / triples)
        print(f"seed {seed}: density {p:.4f}, {abs(p - 0.25) / sigma:.2f} sigma from 1/4")
        assert abs(p - 0.25) <= 4 * sigma


@crit(10, "matching-or-cover lemma")
def test_criterion_10_matching_or_cover():
    C8 = [(i, (i + 1) % 8) for i in range(8)]
    K26 = [(a, b) for a in (0, 1) for b in range(2, 8)]
    assert multicolour_matching(C8, C8, C8).kind == "matching"
    r = multicolour_matching(K26, K26, K26)
    assert r.kind == "cover" and r.cover == (0, 1)
    kinds = {"matching": 0, "cover": 0, "double_failure": 0}
    for seed in range(10_000):
        kinds[multicolour_matching(*random_graph_triple(8, seed)).kind] += 1
    print(kinds)
    assert kinds["double_failure"] == 0


@crit(11, "regularity engine")
def test_criterion_11_regularity():
    rng = np.random.default_rng(1111)
    for _ in range(1000):
        n = int(rng.integers(1, 25))
        S, T = rng.integers(0, 4, n), rng.integers(0, 4, n)
        Tf = T * 3 + rng.integers(0, 3, n)
        assert msd_monotone_check(S, T, Tf)
    degenerate = 0
    for _ in range(500):
        t = int(rng.integers(1, 8))
        sizes = rng.integers(0, 15, size=t)
        cells, start = [], 0
        for s in sizes:
            cells.append(list(range(start, start + int(s))))
            start += int(s)
        r = equalise(cells)
        r.check(cells)
        degenerate += r.degenerate
    assert degenerate > 0
    params = DecomposeParams(densities={1: 0.25}, eta={2: 0.01}, epsilon=0.1, anchors=100, max_iterations=5)
    H = block_bipartite(40)
    runs = [decompose(H, params, seed=11, threads=t) for t in (1, 4, 8)]
    D = runs[0]
    assert D.status == "passed"
    top = H.mask((0, 1))
    for a in np.unique(D.system.labels[(0,)]):
        for b in np.unique(D.system.labels[(1,)]):
            assert top[np.ix_(D.system.labels[(0,)] == a, D.system.labels[(1,)] == b)].mean() in (0.0, 1.0)
    hist = D.ledger.history[(0, 1)]
    print("msd ledger", [str(v) for v in hist])
    assert len(hist) >= 2 and hist[1] > hist[0]
    assert all(r.to_dict() == D.to_dict() for r in runs[1:])


@crit(12, "hidden-parameter ladder")
def test_criterion_12_ladder():
    for eps in (Fraction(1, 10), Fraction(1, 3), Fraction(7, 8)):
        L = hidden_parameters(eps, [(0, 1)])
        assert L.eta[2] == eps**4 / 2
    rng = np.random.default_rng(1212)
    for _ in range(100):
        k = int(rng.integers(2, 6))
        faces_ = [tuple(sorted(rng.choice(k, size=int(rng.integers(1, k + 1)), replace=False).tolist())) for _ in range(int(rng.integers(1, 6)))]
        faces_.append(tuple(range(k)))
        dens = {A: float(rng.uniform(0.05, 1)) for A in faces_}
        L = hidden_parameters(float(rng.uniform(0.01, 0.99)), faces_, dens)
        assert all(v > 0 for v in list(L.eta.values()) + list(L.eps.values()))
        assert L.decreasing()
