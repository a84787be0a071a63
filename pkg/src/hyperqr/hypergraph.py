"""k-uniform hypergraphs on dense integer vertex labels.

Edges are stored twice: as canonically sorted tuples (for equality,
serialisation and iteration) and as integer bitmasks (for fast
membership and neighbourhood tests).
"""
from __future__ import annotations

import math
import string
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from ._util import contract, default_budget, mask_of, rng_stream
from .errors import BudgetExceeded, InvalidArityError, MalformedInputError


class DensityValue(Fraction):
    """Exact density in [0, 1]; ``float(d)`` gives the float view."""

    def __new__(cls, numerator=0, denominator=None):
        self = super().__new__(cls, numerator, denominator)
        if self < 0 or self > 1:
            raise ValueError(f"density out of range: {Fraction(self)}")
        return self

    def __repr__(self):
        return f"DensityValue({self.numerator}, {self.denominator})"


@dataclass(frozen=True)
class HomEstimate:
    """Monte-Carlo estimate of a probability over random maps."""

    mean: float
    stderr: float
    samples: int

    def within(self, target: float, sigmas: float = 4.0) -> bool:
        if self.stderr == 0:
            return self.mean == target
        return abs(self.mean - target) <= sigmas * self.stderr


@dataclass(frozen=True, eq=False)
class UniformHypergraph:
    n: int
    k: int
    edges: tuple[tuple[int, ...], ...]
    _masks: frozenset = field(repr=False, compare=False, default=frozenset())

    def __init__(self, n: int, k: int, edges: Iterable[Iterable[int]] = ()):
        if k < 1:
            raise InvalidArityError(f"uniformity must be positive, got {k}")
        canon = set()
        for e in edges:
            t = tuple(sorted(int(v) for v in e))
            if len(t) != k or len(set(t)) != k:
                raise InvalidArityError(f"edge {tuple(e)} is not a {k}-set")
            if t[0] < 0 or t[-1] >= n:
                raise InvalidArityError(f"edge {t} has a vertex outside [0, {n})")
            canon.add(t)
        ordered = tuple(sorted(canon))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "edges", ordered)
        object.__setattr__(self, "_masks", frozenset(mask_of(e) for e in ordered))

    def __eq__(self, other):
        if not isinstance(other, UniformHypergraph):
            return NotImplemented
        return (self.n, self.k, self.edges) == (other.n, other.k, other.edges)

    def __hash__(self):
        return hash((self.n, self.k, self.edges))

    def __len__(self):
        return len(self.edges)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def masks(self) -> frozenset:
        return self._masks

    def has_edge(self, e: Iterable[int]) -> bool:
        return mask_of(e) in self._masks

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for e in self.edges:
            for v in e:
                deg[v] += 1
        return deg

    def relabel(self, perm: Sequence[int]) -> "UniformHypergraph":
        """Image under the vertex map ``v -> perm[v]``."""
        return UniformHypergraph(self.n, self.k, (tuple(perm[v] for v in e) for e in self.edges))

    def tensor(self) -> np.ndarray:
        """Dense symmetric 0/1 adjacency tensor of shape (n,)*k."""
        t = np.zeros((self.n,) * self.k, dtype=np.int64)
        if self.edges:
            idx = np.array(self.edges, dtype=np.intp)
            for perm in _permutations(self.k):
                t[tuple(idx[:, p] for p in perm)] = 1
        return t

    # text format -------------------------------------------------------
    def to_text(self, parts: Sequence[int] | None = None) -> str:
        lines = [f"{self.k} {self.n} {self.num_edges}"]
        if parts is not None:
            lines.append("parts " + " ".join(str(s) for s in parts))
        lines.extend(" ".join(str(v) for v in e) for e in self.edges)
        return "\n".join(lines) + "\n"


def _permutations(k):
    from itertools import permutations

    return list(permutations(range(k)))


def parse_hypergraph(text: str) -> tuple[UniformHypergraph, list[int] | None]:
    """Parse the ``k n m`` text format; returns the hypergraph and optional part sizes."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise MalformedInputError("empty hypergraph file")
    try:
        k, n, m = (int(x) for x in rows[0])
    except ValueError as exc:
        raise MalformedInputError(f"bad header {' '.join(rows[0])!r}") from exc
    body = rows[1:]
    parts = None
    if body and body[0][0] == "parts":
        try:
            parts = [int(x) for x in body[0][1:]]
        except ValueError as exc:
            raise MalformedInputError("bad parts line") from exc
        if sum(parts) != n or any(s <= 0 for s in parts):
            raise MalformedInputError(f"part sizes {parts} do not partition {n} vertices")
        body = body[1:]
    if len(body) != m:
        raise MalformedInputError(f"header declares {m} edges, found {len(body)}")
    edges = []
    for row in body:
        if len(row) != k:
            raise MalformedInputError(f"edge line {' '.join(row)!r} does not have {k} vertices")
        try:
            edges.append(tuple(int(x) for x in row))
        except ValueError as exc:
            raise MalformedInputError(f"non-integer vertex in {' '.join(row)!r}") from exc
    try:
        H = UniformHypergraph(n, k, edges)
    except InvalidArityError as exc:
        raise MalformedInputError(str(exc)) from exc
    if H.num_edges != m:
        raise MalformedInputError("duplicate edges in input")
    return H, parts


def read_hypergraph(path) -> tuple[UniformHypergraph, list[int] | None]:
    with open(path) as fh:
        return parse_hypergraph(fh.read())


def complete_hypergraph(n: int, k: int) -> UniformHypergraph:
    return UniformHypergraph(n, k, combinations(range(n), k))


def empty_hypergraph(n: int, k: int) -> UniformHypergraph:
    return UniformHypergraph(n, k, ())


def random_hypergraph(n: int, k: int, p: float, seed: int) -> UniformHypergraph:
    rng = rng_stream(seed, 0)
    cands = list(combinations(range(n), k))
    keep = rng.random(len(cands)) < p
    return UniformHypergraph(n, k, (e for e, b in zip(cands, keep) if b))


# statistics ------------------------------------------------------------

def neighborhood(H: UniformHypergraph, S: Iterable[int]) -> set[tuple[int, ...]]:
    """N_H(S): the sets T disjoint from S with S | T an edge."""
    S = frozenset(S)
    if len(S) > H.k:
        raise InvalidArityError(f"|S|={len(S)} exceeds uniformity {H.k}")
    return {tuple(v for v in e if v not in S) for e in H.edges if S.issubset(e)}


def s_degrees(H: UniformHypergraph, s: int) -> Counter:
    """Map from each s-set (sorted tuple) meeting an edge to its neighbourhood size."""
    deg: Counter = Counter()
    for e in H.edges:
        for S in combinations(e, s):
            deg[S] += 1
    return deg


def min_s_degree(H: UniformHypergraph, s: int) -> int:
    if not 0 <= s <= H.k:
        raise InvalidArityError(f"s={s} outside [0, {H.k}]")
    if s == 0:
        return H.num_edges
    if H.n < s:
        raise InvalidArityError(f"no {s}-subsets of {H.n} vertices")
    deg = s_degrees(H, s)
    if len(deg) < math.comb(H.n, s):
        return 0
    return min(deg.values())


def restriction(H: UniformHypergraph, X: Iterable[int]) -> UniformHypergraph:
    """H[X], relabelled onto 0..|X|-1 in increasing vertex order."""
    xs = sorted(set(X))
    pos = {v: i for i, v in enumerate(xs)}
    return UniformHypergraph(
        len(xs), H.k, (tuple(pos[v] for v in e) for e in H.edges if all(v in pos for v in e))
    )


def edge_density(H: UniformHypergraph) -> DensityValue:
    if H.n < H.k:
        raise InvalidArityError(f"n={H.n} < k={H.k}")
    return DensityValue(math.factorial(H.k) * H.num_edges, H.n**H.k)


_LETTERS = string.ascii_letters


def hom_count(F: UniformHypergraph, H: UniformHypergraph, budget: int | None = None) -> int:
    """Number of maps V(F) -> V(H) sending every edge of F onto an edge of H."""
    if F.k != H.k:
        raise InvalidArityError(f"uniformity mismatch {F.k} != {H.k}")
    budget = default_budget() if budget is None else budget
    needed = H.n**F.n
    if needed > budget:
        raise BudgetExceeded(f"exact hom count needs {needed} map checks", needed, budget)
    if F.n > len(_LETTERS):
        raise BudgetExceeded("pattern has too many vertices for exact contraction", F.n, len(_LETTERS))
    if F.n == 0:
        return 1
    dtype = np.int64 if needed < 2**62 else object
    T = H.tensor().astype(dtype)
    ones = np.ones(H.n, dtype=dtype)
    operands, subs = [], []
    covered = set()
    for e in F.edges:
        subs.append("".join(_LETTERS[v] for v in e))
        operands.append(T)
        covered.update(e)
    for v in range(F.n):
        if v not in covered:
            subs.append(_LETTERS[v])
            operands.append(ones)
    return int(contract(subs, operands))


def hom_density(
    F: UniformHypergraph,
    H: UniformHypergraph,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    budget: int | None = None,
) -> DensityValue | HomEstimate:
    """Fraction of all maps V(F) -> V(H) (injective or not) that are homomorphisms."""
    if F.k != H.k:
        raise InvalidArityError(f"uniformity mismatch {F.k} != {H.k}")
    if mode == "exact":
        return DensityValue(hom_count(F, H, budget), H.n**F.n)
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    if samples <= 0:
        raise ValueError("Monte-Carlo mode needs a positive sample count")
    rng = rng_stream(seed, 1)
    T = H.tensor().astype(bool)
    phi = rng.integers(0, H.n, size=(samples, F.n))
    ok = np.ones(samples, dtype=bool)
    for e in F.edges:
        ok &= T[tuple(phi[:, v] for v in e)]
    p = float(ok.mean())
    return HomEstimate(p, math.sqrt(p * (1 - p) / samples), samples)
