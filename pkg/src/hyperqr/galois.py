"""Small finite fields, projective geometries PG_m(q), Baer subplanes,
blocking sets and line-type censuses of 2-colourings."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from itertools import combinations, permutations, product
from typing import Iterable, Sequence

import numpy as np

from ._util import default_budget
from .errors import BudgetExceeded, ContractError
from .hypergraph import UniformHypergraph

MAX_FIELD_ORDER = 32


def prime_power(q: int) -> tuple[int, int] | None:
    """(p, t) with q = p^t, or None."""
    if q < 2:
        return None
    p = next(d for d in range(2, q + 1) if q % d == 0)
    t, r = 0, q
    while r % p == 0:
        r //= p
        t += 1
    return (p, t) if r == 1 else None


def _poly_mulmod(a: list[int], b: list[int], mod: list[int], p: int) -> list[int]:
    """Multiply coefficient lists (low degree first) modulo a monic polynomial."""
    t = len(mod) - 1
    prod_ = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod_[i + j] = (prod_[i + j] + x * y) % p
    for d in range(len(prod_) - 1, t - 1, -1):
        c = prod_[d]
        if c:
            for j in range(t + 1):
                prod_[d - t + j] = (prod_[d - t + j] - c * mod[j]) % p
    out = prod_[:t] + [0] * (t - len(prod_[:t]))
    return out


def _is_irreducible(mod: list[int], p: int) -> bool:
    """Monic ``mod`` of degree t has no root-free factorisation: test divisibility by all monic polys of degree <= t/2."""
    t = len(mod) - 1
    for deg in range(1, t // 2 + 1):
        for low in product(range(p), repeat=deg):
            div = list(low) + [1]
            # polynomial long division remainder
            rem = list(mod)
            for d in range(t, deg - 1, -1):
                c = rem[d]
                if c:
                    for j in range(deg + 1):
                        rem[d - deg + j] = (rem[d - deg + j] - c * div[j]) % p
            if not any(rem[:deg]):
                return False
    return True


def least_irreducible(p: int, t: int) -> list[int]:
    """Lexicographically least monic irreducible of degree t over GF(p), low degree first.

    Lexicographic order is on the coefficient tuple read from the constant term up.
    """
    for low in product(range(p), repeat=t):
        # low = (c_{t-1}, ..., c_0)
        mod = list(reversed(low)) + [1]
        if _is_irreducible(mod, p):
            return mod
    raise ValueError(f"no irreducible polynomial of degree {t} over GF({p})")


@dataclass(frozen=True, eq=False)
class GaloisField:
    """GF(p^t) with elements 0..q-1; element e encodes the polynomial whose
    coefficients are the base-p digits of e (least significant = constant)."""

    p: int
    t: int
    modulus: tuple[int, ...]
    add: np.ndarray = dc_field(repr=False)
    mul: np.ndarray = dc_field(repr=False)

    @property
    def q(self) -> int:
        return self.p**self.t

    @cached_property
    def neg(self) -> np.ndarray:
        return np.array([int(np.flatnonzero(self.add[a] == 0)[0]) for a in range(self.q)])

    @cached_property
    def inv(self) -> np.ndarray:
        out = np.zeros(self.q, dtype=np.int64)
        for a in range(1, self.q):
            out[a] = int(np.flatnonzero(self.mul[a] == 1)[0])
        return out

    def subfield(self, order: int) -> list[int]:
        """Elements x with x^order = x (the subfield of that order)."""
        out = []
        for x in range(self.q):
            y = x
            for _ in range(order - 1):
                y = int(self.mul[y, x])
            if y == x:
                out.append(x)
        return out

    def multiplicative_order(self, a: int) -> int:
        if a == 0:
            raise ValueError("0 has no multiplicative order")
        k, y = 1, a
        while y != 1:
            y = int(self.mul[y, a])
            k += 1
        return k

    def validate(self) -> None:
        q = self.q
        A, M = self.add, self.mul
        rng = np.arange(q)
        if not (np.array_equal(A, A.T) and np.array_equal(M, M.T)):
            raise ContractError("field operations are not commutative")
        if not (np.array_equal(A[0], rng) and np.array_equal(M[1], rng) and not M[0].any()):
            raise ContractError("identities fail")
        if not np.array_equal(A[A[:, :, None], rng[None, None, :]], A[rng[:, None, None], A[None, :, :]]):
            raise ContractError("addition is not associative")
        if not np.array_equal(M[M[:, :, None], rng[None, None, :]], M[rng[:, None, None], M[None, :, :]]):
            raise ContractError("multiplication is not associative")
        if not np.array_equal(M[rng[:, None, None], A[None, :, :]], A[M[:, :, None], M[:, None, :]]):
            raise ContractError("distributivity fails")
        for a in range(q):
            if not (A[a] == 0).any():
                raise ContractError(f"{a} has no additive inverse")
            if a and not (M[a] == 1).any():
                raise ContractError(f"{a} has no multiplicative inverse")


def gf(q: int) -> GaloisField:
    pt = prime_power(q)
    if pt is None:
        raise ValueError(f"{q} is not a prime power")
    if q > MAX_FIELD_ORDER:
        raise ValueError(f"field order {q} above cap {MAX_FIELD_ORDER}")
    p, t = pt
    mod = [0, 1] if t == 1 else least_irreducible(p, t)

    def digits(e):
        return [(e // p**i) % p for i in range(t)]

    def encode(ds):
        return sum(d * p**i for i, d in enumerate(ds))

    add = np.zeros((q, q), dtype=np.int64)
    mul = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        da = digits(a)
        for b in range(q):
            db = digits(b)
            add[a, b] = encode([(x + y) % p for x, y in zip(da, db)])
            if t == 1:
                mul[a, b] = (a * b) % p
            else:
                mul[a, b] = encode(_poly_mulmod(da, db, mod, p))
    F = GaloisField(p, t, tuple(mod), add, mul)
    F.validate()
    return F


@dataclass(frozen=True, eq=False)
class ProjectivePlane:
    """PG_m(q): points are normalised vectors (last nonzero coordinate 1),
    lines are sorted tuples of point indices."""

    q: int
    m: int
    field: GaloisField = dc_field(repr=False)
    points: tuple[tuple[int, ...], ...] = dc_field(repr=False)
    lines: tuple[tuple[int, ...], ...] = dc_field(repr=False)

    @cached_property
    def hypergraph(self) -> UniformHypergraph:
        return UniformHypergraph(len(self.points), self.q + 1, self.lines)

    @cached_property
    def point_index(self) -> dict[tuple[int, ...], int]:
        return {v: i for i, v in enumerate(self.points)}

    @cached_property
    def line_masks(self) -> list[int]:
        return [sum(1 << v for v in L) for L in self.lines]

    @cached_property
    def line_through(self) -> dict[tuple[int, int], int]:
        out = {}
        for li, L in enumerate(self.lines):
            for a, b in combinations(L, 2):
                out[(a, b)] = li
        return out

    def line(self, a: int, b: int) -> tuple[int, ...]:
        if a == b:
            raise ValueError("two distinct points needed")
        return self.lines[self.line_through[(min(a, b), max(a, b))]]

    def collinear(self, a: int, b: int, c: int) -> bool:
        return c in self.line(a, b)


def normalise(v: Sequence[int], F: GaloisField) -> tuple[int, ...]:
    last = max(i for i, x in enumerate(v) if x)
    s = int(F.inv[v[last]])
    return tuple(int(F.mul[s, x]) for x in v)


def pg(m: int, q: int, budget: int | None = None) -> ProjectivePlane:
    """PG_m(q) with lines as (q+1)-edges."""
    if m < 2:
        raise ValueError("dimension m must be at least 2")
    budget = default_budget() if budget is None else budget
    if q ** (m + 1) > budget or q ** (2 * (m + 1)) > budget * 10:
        raise BudgetExceeded(f"PG_{m}({q}) exceeds the generation budget", q ** (m + 1), budget)
    F = gf(q)
    pts = sorted({normalise(v, F) for v in product(range(q), repeat=m + 1) if any(v)}, key=lambda v: v[::-1])
    index = {v: i for i, v in enumerate(pts)}
    lines = set()
    seen_pairs = set()
    for a in range(len(pts)):
        for b in range(a + 1, len(pts)):
            if (a, b) in seen_pairs:
                continue
            u, w = pts[a], pts[b]
            span = set()
            for s, t in product(range(q), repeat=2):
                if s == 0 and t == 0:
                    continue
                vec = [int(F.add[F.mul[s, x], F.mul[t, y]]) for x, y in zip(u, w)]
                span.add(index[normalise(vec, F)])
            L = tuple(sorted(span))
            lines.add(L)
            for pair in combinations(L, 2):
                seen_pairs.add(pair)
    return ProjectivePlane(q, m, F, tuple(pts), tuple(sorted(lines)))


def fano() -> UniformHypergraph:
    return pg(2, 2).hypergraph


def check_plane_axioms(plane: ProjectivePlane) -> None:
    """Every point pair on exactly one line, every line pair meeting in exactly one point."""
    q, n = plane.q, len(plane.points)
    if plane.m == 2 and (n != q * q + q + 1 or len(plane.lines) != n):
        raise ContractError(f"PG_2({q}) should have {q*q+q+1} points and lines")
    if any(len(L) != q + 1 for L in plane.lines):
        raise ContractError("a line has the wrong size")
    cover = Counter(p for L in plane.lines for p in combinations(L, 2))
    if len(cover) != n * (n - 1) // 2 or set(cover.values()) != {1}:
        raise ContractError("some pair of points is not on exactly one line")
    if plane.m == 2:
        for L1, L2 in combinations(plane.lines, 2):
            if len(set(L1) & set(L2)) != 1:
                raise ContractError(f"lines {L1} and {L2} do not meet in one point")


def difference_set_plane(modulus: int = 21, base: Iterable[int] = (3, 6, 7, 12, 14)) -> UniformHypergraph:
    base = sorted(set(base))
    return UniformHypergraph(modulus, len(base), [tuple((a + x) % modulus for a in base) for x in range(modulus)])


def iso_check(A: UniformHypergraph | ProjectivePlane, B: UniformHypergraph | ProjectivePlane, budget: int | None = None):
    """A vertex bijection carrying the edges of A onto those of B, or None."""
    from .embed import contains_copy

    A = A.hypergraph if isinstance(A, ProjectivePlane) else A
    B = B.hypergraph if isinstance(B, ProjectivePlane) else B
    if (A.n, A.k, A.num_edges) != (B.n, B.k, B.num_edges):
        return None
    if sorted(A.degrees()) != sorted(B.degrees()):
        return None
    cert = contains_copy(B, A, budget=budget)
    if cert.verdict == "budget_exhausted":
        raise BudgetExceeded("isomorphism search exhausted its budget", cert.nodes, budget)
    return cert.embedding


@dataclass
class BaerSubplane:
    points: tuple[int, ...]
    full_lines: tuple[tuple[int, ...], ...]
    tangent_lines: tuple[tuple[int, ...], ...]
    subplane: UniformHypergraph  # full-line intersections on relabelled points

    @property
    def spectrum(self) -> set[int]:
        return {len(L) for L in self.full_lines} | {1 for _ in self.tangent_lines[:1]}


def _intersection_report(lines: Sequence[Sequence[int]], S: Sequence[int], base_order: int) -> BaerSubplane:
    S = tuple(sorted(S))
    Sset = set(S)
    full, tangent = [], []
    for L in lines:
        inter = tuple(sorted(Sset.intersection(L)))
        if len(inter) == base_order + 1:
            full.append(inter)
        elif len(inter) == 1:
            tangent.append(tuple(L))
        else:
            raise ContractError(f"line {tuple(L)} meets the set in {len(inter)} points")
    pos = {v: i for i, v in enumerate(S)}
    sub = UniformHypergraph(len(S), base_order + 1, [tuple(pos[v] for v in L) for L in full])
    return BaerSubplane(S, tuple(full), tuple(tangent), sub)


def baer_subplane(plane: ProjectivePlane) -> BaerSubplane:
    """Points of PG_2(q^2) with a representative over the subfield GF(q)."""
    r = int(round(plane.q**0.5))
    if r * r != plane.q or plane.m != 2:
        raise ValueError(f"plane order {plane.q} is not a square")
    sub = set(plane.field.subfield(r))
    S = [i for i, v in enumerate(plane.points) if all(x in sub for x in v)]
    return _intersection_report(plane.lines, S, r)


def check_baer_subset(H: UniformHypergraph, S: Iterable[int], base_order: int) -> BaerSubplane:
    """Verify that S meets every line of H in 1 or base_order+1 points."""
    return _intersection_report(H.edges, list(S), base_order)


# -- blocking sets ---------------------------------------------------------------

@dataclass
class BlockingSetReport:
    n_points: int
    sets: list[tuple[int, ...]]
    histogram: dict[int, int]
    tags: dict[tuple[int, ...], str]

    def to_json_lists(self) -> list[list[int]]:
        return [list(s) for s in self.sets]


def blocking_set_masks(H: UniformHypergraph, budget: int | None = None) -> np.ndarray:
    """All subsets S (as integer masks) with 0 < |S & L| < |L| for every edge L."""
    budget = default_budget() if budget is None else budget
    n = H.n
    if (1 << n) * max(H.num_edges, 1) > budget or n > 30:
        raise BudgetExceeded(f"2^{n} subset scan exceeds budget", (1 << n) * H.num_edges, budget)
    masks = np.arange(1 << n, dtype=np.uint32)
    ok = np.ones(1 << n, dtype=bool)
    for L in H.edges:
        lm = np.uint32(sum(1 << v for v in L))
        hit = masks & lm
        ok &= (hit != 0) & (hit != lm)
    return np.flatnonzero(ok).astype(np.int64)


def triangle_sets(plane: ProjectivePlane) -> dict[tuple[int, ...], tuple[int, int, int]]:
    """L(x,y) | L(y,z) | L(x,z) minus {x,y,z}, keyed by the resulting set."""
    out = {}
    for x, y, z in combinations(range(len(plane.points)), 3):
        if plane.collinear(x, y, z):
            continue
        s = (set(plane.line(x, y)) | set(plane.line(y, z)) | set(plane.line(x, z))) - {x, y, z}
        out.setdefault(tuple(sorted(s)), (x, y, z))
    return out


def blocking_sets(plane: ProjectivePlane | UniformHypergraph, budget: int | None = None) -> BlockingSetReport:
    H = plane.hypergraph if isinstance(plane, ProjectivePlane) else plane
    found = blocking_set_masks(H, budget)
    sets = [tuple(v for v in range(H.n) if (int(m) >> v) & 1) for m in found]
    hist = dict(sorted(Counter(len(s) for s in sets).items()))
    tags: dict[tuple[int, ...], str] = {}
    if isinstance(plane, ProjectivePlane) and plane.m == 2 and plane.q == 3:
        tri = triangle_sets(plane)
        for s in sets:
            if s in tri:
                tags[s] = "triangle"
            elif tuple(sorted(set(range(H.n)) - set(s))) in tri:
                tags[s] = "triangle-complement"
            else:
                tags[s] = "other"
    return BlockingSetReport(H.n, sets, hist, tags)


# -- wedge colouring in PG_2(4) ------------------------------------------------------

def wedge_colouring(plane: ProjectivePlane, x: int, y: int, z: int, w: int) -> tuple[frozenset, frozenset]:
    """C_0 = L(x,y) | L(x,z) | {w} minus {y,z}; C_1 its complement."""
    if len({x, y, z}) < 3 or plane.collinear(x, y, z):
        raise ValueError(f"points {x}, {y}, {z} are collinear")
    if w in (y, z) or w not in plane.line(y, z):
        raise ValueError(f"w={w} is not a point of L(y,z) other than y, z")
    C0 = (set(plane.line(x, y)) | set(plane.line(x, z)) | {w}) - {y, z}
    C1 = set(range(len(plane.points))) - C0
    return frozenset(C0), frozenset(C1)


def line_type_census(plane: ProjectivePlane | UniformHypergraph, colouring: tuple[frozenset, frozenset]) -> dict[str, int]:
    """Count lines by type C0^a C1^b (a = points in colour class 0)."""
    H = plane.hypergraph if isinstance(plane, ProjectivePlane) else plane
    C0 = colouring[0]
    cnt = Counter()
    for L in H.edges:
        a = sum(1 for v in L if v in C0)
        cnt[(a, H.k - a)] += 1
    return {f"C0^{a}C1^{b}": c for (a, b), c in sorted(cnt.items(), reverse=True)}


def wedge_choices(plane: ProjectivePlane):
    """Every valid (x, y, z, w): x, y, z non-collinear, w on L(y,z) other than y, z."""
    n = len(plane.points)
    for x, y, z in permutations(range(n), 3):
        if plane.collinear(x, y, z):
            continue
        for w in plane.line(y, z):
            if w not in (y, z):
                yield x, y, z, w


def wedge_c0_triples(plane: ProjectivePlane, x: int, y: int, z: int, w: int) -> list[tuple[int, ...]]:
    """C_0-parts of the lines with three points in C_0."""
    C0, _ = wedge_colouring(plane, x, y, z, w)
    return [tuple(sorted(C0.intersection(L))) for L in plane.lines if len(C0.intersection(L)) == 3]
