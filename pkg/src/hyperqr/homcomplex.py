"""Blowups, clones, augmentations and the homomorphism complex J -> G.

A vertex of the homomorphism complex in part i is a map E_i -> Y_i from
the i-th part of the pattern to the i-th part of the host.  It is stored
as a mixed-radix integer: digit j (most significant first) is the image
of the j-th pattern vertex of that part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from ._util import default_budget, rng_stream
from .complex import Index, PartiteComplex, PartiteGround, as_index, subsets
from .errors import BudgetExceeded, ContractError, InvalidArityError
from .hypergraph import UniformHypergraph


@dataclass(frozen=True)
class BlowupSpec:
    base: UniformHypergraph
    s: int

    def __post_init__(self):
        if self.s < 1:
            raise ValueError(f"multiplicity must be at least 1, got {self.s}")

    def build(self) -> UniformHypergraph:
        return blowup(self.base, self.s)


def blowup_vertex(x: int, i: int, s: int) -> int:
    """Label of copy ``i`` of base vertex ``x``."""
    return x * s + i


def blowup(F: UniformHypergraph, s: int) -> UniformHypergraph:
    """F(s): each vertex replaced by s copies, each edge by all s^k copies."""
    if s < 1:
        raise ValueError(f"multiplicity must be at least 1, got {s}")
    edges = []
    for e in F.edges:
        for choice in product(range(s), repeat=F.k):
            edges.append(tuple(blowup_vertex(x, i, s) for x, i in zip(e, choice)))
    return UniformHypergraph(F.n * s, F.k, edges)


def clone(F: UniformHypergraph) -> UniformHypergraph:
    return blowup(F, 2)


def augment(F: UniformHypergraph, s: int) -> UniformHypergraph:
    """F^{+s}: blowup(F, s) plus k-s new vertices V+ and the edges V+ | {x_1..x_s}."""
    k = F.k
    if not 1 <= s <= k - 1:
        raise ValueError(f"augmentation needs 1 <= s <= k-1 = {k - 1}, got {s}")
    B = blowup(F, s)
    plus = tuple(range(B.n, B.n + k - s))
    extra = [plus + tuple(blowup_vertex(x, i, s) for i in range(s)) for x in range(F.n)]
    return UniformHypergraph(B.n + k - s, k, list(B.edges) + extra)


def blowup_ground(F: UniformHypergraph, s: int) -> PartiteGround:
    """Ground whose parts are the copy classes of blowup(F, s)."""
    return PartiteGround((s,) * F.n)


# -- homomorphism complex ---------------------------------------------------------

def _digits(radix: int, length: int) -> np.ndarray:
    """Row j holds digit j (most significant first) of every code 0..radix^length-1."""
    codes = np.arange(radix**length, dtype=np.int64)
    out = np.empty((length, codes.size), dtype=np.int64)
    for j in range(length):
        out[j] = (codes // radix ** (length - 1 - j)) % radix
    return out


class HomComplex(PartiteComplex):
    """G' = J -> G, materialised as an ordinary partite complex on t parts."""

    def __init__(self, J: PartiteComplex, G: PartiteComplex, ground: PartiteGround, masks):
        super().__init__(ground, ground.r, masks, validate=False)
        self.J = J
        self.G = G

    def encode(self, i: int, images: Sequence[int]) -> int:
        radix = self.G.ground.sizes[i]
        code = 0
        for y in images:
            if not 0 <= y < radix:
                raise ValueError(f"image {y} outside part {i}")
            code = code * radix + int(y)
        return code

    def decode(self, i: int, code: int) -> tuple[int, ...]:
        radix, length = self.G.ground.sizes[i], self.J.ground.sizes[i]
        out = []
        for _ in range(length):
            code, d = divmod(code, radix)
            out.append(d)
        return tuple(reversed(out))

    def pattern_count(self, A) -> int:
        """|J_A|: number of pattern tuples of index A."""
        A = as_index(A)
        return self.J.count(A) if len(A) <= self.J.k else 0


def _check_pair(J: PartiteComplex, G: PartiteComplex) -> None:
    if J.r != G.r:
        raise ContractError(f"pattern has {J.r} parts, host {G.r}")
    if J.k > G.k:
        raise ContractError(f"pattern has level {J.k} faces but host stops at {G.k}")


def hom_membership(J: PartiteComplex, G: PartiteComplex, A, digits: Sequence[np.ndarray]) -> np.ndarray:
    """Boolean array over K_A(Y') of tuples whose assembled map sends every
    J-tuple of index inside A into G.  ``digits[i]`` is the digit table of part i."""
    A = as_index(A)
    shape = tuple(digits[i].shape[1] for i in A)
    ok = np.ones(shape, dtype=bool)
    pos = {a: j for j, a in enumerate(A)}
    for B in subsets(A):
        if not B or len(B) > J.k:
            continue
        GB = G.mask(B)
        for t in J.layer(B):
            idx = []
            for b, u in zip(B, t):
                arr = digits[b][u]
                sh = [1] * len(A)
                sh[pos[b]] = arr.size
                idx.append(arr.reshape(sh))
            ok &= GB[tuple(idx)]
    return ok


def hom_complex(J: PartiteComplex, G: PartiteComplex, budget: int | None = None) -> HomComplex:
    _check_pair(J, G)
    budget = default_budget() if budget is None else budget
    t = J.r
    sizes = tuple(G.ground.sizes[i] ** J.ground.sizes[i] for i in range(t))
    ground = PartiteGround(sizes)
    total = sum(ground.size_of(A) for A in ground.all_indices(t))
    if total > budget:
        raise BudgetExceeded(f"homomorphism complex has {total} candidate tuples", total, budget)
    digits = [_digits(G.ground.sizes[i], J.ground.sizes[i]) for i in range(t)]
    masks = {(): np.array(True)}
    for A in ground.all_indices(t):
        if A:
            masks[A] = hom_membership(J, G, A, digits)
    return HomComplex(J, G, ground, masks)


def hom_member(J: PartiteComplex, G: PartiteComplex, A, maps: Sequence[Sequence[int]]) -> bool:
    """Membership of one tuple of maps without materialising G' (maps[j] is the
    image list of part A[j])."""
    _check_pair(J, G)
    A = as_index(A)
    phi = dict(zip(A, maps))
    for i in A:
        if len(phi[i]) != J.ground.sizes[i]:
            raise ContractError(f"map for part {i} has the wrong length")
    for B in subsets(A):
        if not B or len(B) > J.k:
            continue
        for t in J.layer(B):
            if not G.contains(B, [phi[b][u] for b, u in zip(B, t)]):
                return False
    return True


@dataclass
class DensityRow:
    index: Index
    measured: object  # Fraction or float
    predicted: object
    stderr: float | None
    pattern_tuples: int

    def within(self, sigmas: float = 4.0) -> bool:
        if self.stderr is None:
            return self.measured == self.predicted
        return abs(float(self.measured) - float(self.predicted)) <= sigmas * self.stderr

    def to_dict(self) -> dict:
        def enc(x):
            if isinstance(x, Fraction):
                return {"num": str(x.numerator), "den": str(x.denominator)}
            return x

        return {
            "index": [a + 1 for a in self.index],
            "measured": enc(self.measured),
            "predicted": enc(self.predicted),
            "stderr": self.stderr,
            "pattern_tuples": self.pattern_tuples,
        }


def hom_complex_density_report(
    J: PartiteComplex,
    G: PartiteComplex,
    mode: str = "exact",
    samples: int = 10_000,
    seed: int = 0,
    budget: int | None = None,
) -> list[DensityRow]:
    """Per index A: measured d_A(J -> G) against d_A(G)^{|J_A|} (1 above G's top level).

    Exact mode materialises G'.  Monte-Carlo mode samples uniform tuples of maps,
    keeps those in the star of A, and reports the fraction that lie in G'_A.
    """
    _check_pair(J, G)
    t = J.r
    ground = PartiteGround(tuple(G.ground.sizes[i] ** J.ground.sizes[i] for i in range(t)))
    rows = []
    if mode == "exact":
        Gp = hom_complex(J, G, budget)
        for A in ground.all_indices(t):
            if not A:
                continue
            nJ = Gp.pattern_count(A)
            pred = Fraction(G.require_density(A)) ** nJ if len(A) <= G.k else Fraction(1)
            rows.append(DensityRow(A, Fraction(Gp.require_density(A)), pred, None, nJ))
        return rows
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    rng = rng_stream(seed, 5)
    for A in ground.all_indices(t):
        if not A:
            continue
        nJ = J.count(A) if len(A) <= J.k else 0
        pred = Fraction(G.require_density(A)) ** nJ if len(A) <= G.k else Fraction(1)
        hit = total = 0
        for _ in range(samples):
            maps = [rng.integers(0, G.ground.sizes[i], size=J.ground.sizes[i]).tolist() for i in A]
            in_star = all(
                hom_member(J, G, [A[j] for j in range(len(A)) if j != drop], maps[:drop] + maps[drop + 1:])
                for drop in range(len(A))
            )
            if not in_star:
                continue
            total += 1
            hit += hom_member(J, G, A, maps)
        if total == 0:
            rows.append(DensityRow(A, float("nan"), pred, None, nJ))
            continue
        p = hit / total
        se = math.sqrt(max(p * (1 - p), 1.0 / total) / total)
        rows.append(DensityRow(A, p, pred, se, nJ))
    return rows


# -- octahedron sampler --------------------------------------------------------------

@dataclass
class OctahedronFrequency:
    hits: int
    samples: int
    predicted: float

    @property
    def frequency(self) -> float:
        return self.hits / self.samples


def octahedron_frequency(Hc: PartiteComplex, samples: int = 10_000, seed: int = 0) -> OctahedronFrequency:
    """Fraction of random 2x2x2 vertex choices spanning a full octahedron in the top
    layer, next to d_12^4 d_13^4 d_23^4 d_123^8.  Reported as data, no tolerance."""
    if Hc.r != 3 or Hc.k != 3:
        raise InvalidArityError("octahedron sampling needs a 3-partite 3-complex")
    rng = rng_stream(seed, 6)
    top = Hc.mask((0, 1, 2))
    pts = [rng.integers(0, s, size=(samples, 2)) for s in Hc.ground.sizes]
    ok = np.ones(samples, dtype=bool)
    for a, b, c in product(range(2), repeat=3):
        ok &= top[pts[0][:, a], pts[1][:, b], pts[2][:, c]]
    pred = 1.0
    for A, e in (((0, 1), 4), ((0, 2), 4), ((1, 2), 4), ((0, 1, 2), 8)):
        pred *= float(Hc.require_density(A)) ** e
    return OctahedronFrequency(int(ok.sum()), samples, pred)
