"""Explicit extremal constructions and seeded random models."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping

import numpy as np

from ._util import rng_stream
from .complex import PartiteComplex, PartiteGround
from .errors import ContractError
from .galois import fano, pg, prime_power
from .hypergraph import UniformHypergraph


def balanced_split(n: int) -> tuple[range, range]:
    """Parts {0..ceil(n/2)-1} and the rest."""
    h = (n + 1) // 2
    return range(0, h), range(h, n)


def complete_bipartite_3graph(n: int) -> UniformHypergraph:
    """H_2(n): triples meeting both halves of a balanced split."""
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    A, _ = balanced_split(n)
    edges = [e for e in combinations(range(n), 3) if 0 < sum(v in A for v in e) < 3]
    H = UniformHypergraph(n, 3, edges)
    _check_parity(H, A, {1, 2})
    return H


def oddly_bipartite(n: int, q: int) -> UniformHypergraph:
    """(q+1)-sets meeting each half of a balanced split in an odd number of points."""
    pt = prime_power(q)
    if pt is None or q % 2 == 0:
        raise ValueError(f"q must be an odd prime power, got {q}")
    if n < q + 1:
        raise ValueError(f"need n >= q+1 = {q + 1}, got {n}")
    A, _ = balanced_split(n)
    edges = [e for e in combinations(range(n), q + 1) if sum(v in A for v in e) % 2 == 1]
    H = UniformHypergraph(n, q + 1, edges)
    _check_parity(H, A, {a for a in range(1, q + 1, 2)})
    return H


def pg23_improved(n: int) -> UniformHypergraph:
    """X_0 = {0..n/2}, X_1 the rest, special points a=0, b=1.

    Edges: 3+1 splits either way, plus 2+2 splits whose X_0-pair holds exactly
    one of a, b.
    """
    if n % 2:
        raise ValueError(f"n must be even, got {n}")
    if n < 8:
        raise ValueError(f"need n >= 8, got {n}")
    X0 = range(0, n // 2 + 1)
    special = {0, 1}
    edges = []
    for e in combinations(range(n), 4):
        inside = [v for v in e if v in X0]
        if len(inside) in (1, 3):
            edges.append(e)
        elif len(inside) == 2 and len(special.intersection(inside)) == 1:
            edges.append(e)
    H = UniformHypergraph(n, 4, edges)
    _check_parity(H, X0, {1, 2, 3})
    return H


def _check_parity(H: UniformHypergraph, X0, allowed: set[int]) -> None:
    for e in H.edges:
        c = sum(v in X0 for v in e)
        if c not in allowed:
            raise ContractError(f"edge {e} meets the first part in {c} points")


def roedl_orientation(n_per_part: int, seed: int, parts: int = 4) -> np.ndarray:
    """out[u, v] is True when the arc between cross-part vertices u and v points u -> v."""
    n = parts * n_per_part
    rng = rng_stream(seed, 20)
    coin = rng.random((n, n)) < 0.5
    up = np.triu(coin, 1)
    out = up | np.triu(~coin, 1).T
    part = np.arange(n) // n_per_part
    out &= part[:, None] != part[None, :]
    return out


def roedl_tournament(n_per_part: int, seed: int) -> UniformHypergraph:
    """Cross-part triples inducing a cyclic triangle in a random orientation of K_{n,n,n,n}."""
    if n_per_part < 1:
        raise ValueError("n_per_part must be positive")
    n = 4 * n_per_part
    out = roedl_orientation(n_per_part, seed)
    part = [v // n_per_part for v in range(n)]
    edges = []
    for a, b, c in combinations(range(n), 3):
        if len({part[a], part[b], part[c]}) < 3:
            continue
        if (out[a, b] and out[b, c] and out[c, a]) or (out[b, a] and out[c, b] and out[a, c]):
            edges.append((a, b, c))
    return UniformHypergraph(n, 3, edges)


def tetrahedron_count(H: UniformHypergraph) -> int:
    """Number of 4-sets all of whose triples are edges."""
    if H.k != 3:
        raise ValueError("tetrahedra live in 3-graphs")
    adj: dict[tuple[int, int], set[int]] = {}
    for a, b, c in H.edges:
        adj.setdefault((a, b), set()).add(c)
        adj.setdefault((a, c), set()).add(b)
        adj.setdefault((b, c), set()).add(a)
    count = 0
    for a, b, c in H.edges:
        for d in adj[(b, c)]:
            if d > c and d in adj[(a, b)] and d in adj[(a, c)]:
                count += 1
    return count


PAIRS = ((0, 1), (0, 2), (1, 2))


def layered_random_complex(
    n_per_part: int,
    d_pairs: Mapping[tuple[int, int], float] | float,
    d_top: float,
    seed: int,
) -> PartiteComplex:
    """3-partite 3-complex: independent random bipartite G_ij at rate d_ij and a
    top layer keeping each triangle of the G_ij at rate d_top."""
    if isinstance(d_pairs, (int, float)):
        d_pairs = {ij: float(d_pairs) for ij in PAIRS}
    d_pairs = {tuple(sorted(k)): float(v) for k, v in d_pairs.items()}
    for p in list(d_pairs.values()) + [d_top]:
        if not 0 <= p <= 1:
            raise ValueError(f"probability {p} outside [0, 1]")
    n = n_per_part
    ground = PartiteGround((n, n, n))
    masks = {(): np.array(True)}
    for i in range(3):
        masks[(i,)] = np.ones(n, dtype=bool)
    for s, ij in enumerate(PAIRS):
        masks[ij] = rng_stream(seed, 30, s).random((n, n)) < d_pairs[ij]
    tri = masks[(0, 1)][:, :, None] & masks[(0, 2)][:, None, :] & masks[(1, 2)][None, :, :]
    masks[(0, 1, 2)] = tri & (rng_stream(seed, 31).random((n, n, n)) < d_top)
    return PartiteComplex(ground, 3, masks)


def layered_top_hypergraph(Hc: PartiteComplex) -> UniformHypergraph:
    """The top layer of a 3-partite complex as a 3-graph on the global labels."""
    g = Hc.ground
    edges = [g.to_global((0, 1, 2), t) for t in np.argwhere(Hc.mask((0, 1, 2))).tolist()]
    return UniformHypergraph(g.n, 3, edges)


# -- descriptors -------------------------------------------------------------------

@dataclass
class ConstructionDescriptor:
    """A generator plus the exact properties claimed for it."""

    name: str
    generator: Callable[..., UniformHypergraph]
    k: Callable[[dict], int]
    s: Callable[[dict], int]
    min_degree: Callable[[dict], int]
    forbidden: Callable[[dict], UniformHypergraph]
    forbidden_name: str
    defaults: dict = field(default_factory=dict)

    def build(self, **params) -> UniformHypergraph:
        p = {**self.defaults, **params}
        H = self.generator(**p)
        if H.k != self.k(p):
            raise ContractError(f"{self.name} produced a {H.k}-graph, expected {self.k(p)}")
        return H


CONSTRUCTIONS: dict[str, ConstructionDescriptor] = {
    "h2": ConstructionDescriptor(
        "h2",
        complete_bipartite_3graph,
        k=lambda p: 3,
        s=lambda p: 2,
        min_degree=lambda p: p["n"] // 2,
        forbidden=lambda p: fano(),
        forbidden_name="fano",
    ),
    "oddly-bipartite": ConstructionDescriptor(
        "oddly-bipartite",
        oddly_bipartite,
        k=lambda p: p["q"] + 1,
        s=lambda p: p["q"],
        min_degree=lambda p: p["n"] // 2 - p["q"] + 1,
        forbidden=lambda p: pg(2, p["q"]).hypergraph,
        forbidden_name="pg2{q}",
        defaults={"q": 3},
    ),
    "pg23-improved": ConstructionDescriptor(
        "pg23-improved",
        pg23_improved,
        k=lambda p: 4,
        s=lambda p: 3,
        min_degree=lambda p: p["n"] // 2 - 1,
        forbidden=lambda p: pg(2, 3).hypergraph,
        forbidden_name="pg23",
    ),
}
