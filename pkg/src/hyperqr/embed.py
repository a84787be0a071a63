"""Subhypergraph containment by pruned backtracking, embedding counts,
construction certificates, the multicoloured matching / two-point cover
dichotomy, and a local search for dense F-free hypergraphs."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np

from ._util import bits, default_budget, mask_of, rng_stream
from .errors import BudgetExceeded, ContractError, InvalidArityError
from .hypergraph import UniformHypergraph, min_s_degree

FOUND, NONE, EXHAUSTED = "found", "none", "budget_exhausted"


class _OutOfBudget(Exception):
    pass


@dataclass
class EmbeddingCertificate:
    pattern: UniformHypergraph = field(repr=False)
    host: UniformHypergraph = field(repr=False)
    embedding: tuple[int, ...] | None
    verdict: str
    nodes: int

    def __post_init__(self):
        if self.embedding is not None and not is_embedding(self.pattern, self.host, self.embedding):
            raise ContractError("search returned a map that is not an embedding")

    @property
    def found(self) -> bool:
        return self.verdict == FOUND

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "embedding": None if self.embedding is None else list(self.embedding),
            "nodes": self.nodes,
        }


def is_embedding(F: UniformHypergraph, H: UniformHypergraph, phi: Sequence[int]) -> bool:
    """Injective and edge-preserving, checked from scratch."""
    if len(phi) != F.n or len(set(phi)) != F.n or F.k != H.k:
        return False
    if any(not 0 <= v < H.n for v in phi):
        return False
    return all(H.has_edge(phi[v] for v in e) for e in F.edges)


def pattern_order(F: UniformHypergraph) -> list[int]:
    """Greedy most-constrained-first order: next vertex shares the most edges
    with already ordered vertices (ties: higher degree, then lower label)."""
    deg = F.degrees()
    order: list[int] = []
    placed: set[int] = set()
    while len(order) < F.n:
        best = max(
            (v for v in range(F.n) if v not in placed),
            key=lambda v: (sum(1 for e in F.edges if v in e and placed.intersection(e)), deg[v], -v),
        )
        order.append(best)
        placed.add(best)
    return order


def host_twin_classes(H: UniformHypergraph) -> list[int]:
    """rep[v] = smallest u such that swapping u and v is an automorphism of H."""
    edges_of = [[] for _ in range(H.n)]
    for e in H.edges:
        for v in e:
            edges_of[v].append(mask_of(e))
    masks = H.masks

    def twins(u, v):
        bu, bv = 1 << u, 1 << v
        for m in edges_of[u]:
            if not m & bv and (m ^ bu | bv) not in masks:
                return False
        for m in edges_of[v]:
            if not m & bu and (m ^ bv | bu) not in masks:
                return False
        return True

    rep = list(range(H.n))
    for v in range(H.n):
        for u in range(v):
            if rep[u] == u and len(edges_of[u]) == len(edges_of[v]) and twins(u, v):
                rep[v] = u
                break
    return rep


class _Search:
    """Backtracking state shared by containment and counting."""

    def __init__(self, H: UniformHypergraph, F: UniformHypergraph, budget: int, twins: bool):
        if F.k != H.k:
            raise InvalidArityError(f"uniformity mismatch {F.k} != {H.k}")
        self.H, self.F, self.budget = H, F, budget
        self.k = H.k
        self.order = pattern_order(F)
        self.pos = {u: i for i, u in enumerate(self.order)}
        # pattern edges as lists of the other vertices, grouped by vertex
        self.constraints = [
            [tuple(w for w in e if w != u) for e in F.edges if u in e] for u in range(F.n)
        ]
        fdeg = F.degrees()
        hdeg = H.degrees()
        self.allowed = [mask_of(v for v in range(H.n) if hdeg[v] >= fdeg[u]) for u in range(F.n)]
        self.link: dict[int, int] = {}
        for e in H.edges:
            em = mask_of(e)
            for r in range(1, self.k):
                for S in combinations(e, r):
                    sm = mask_of(S)
                    self.link[sm] = self.link.get(sm, 0) | (em & ~sm)
        self.rep = host_twin_classes(H) if twins else None
        self.nodes = 0

    def fork(self) -> "_Search":
        """Fresh node counter and order, shared lookup tables."""
        s = object.__new__(_Search)
        s.__dict__.update(self.__dict__)
        s.order = list(self.order)
        s.nodes = 0
        return s

    def candidates(self, u: int, phi: dict[int, int], used: int) -> int:
        cand = self.allowed[u] & ~used
        for others in self.constraints[u]:
            S = 0
            for w in others:
                if w in phi:
                    S |= 1 << phi[w]
            if S:
                cand &= self.link.get(S, 0)
                if not cand:
                    return 0
        return cand

    def _twin_filter(self, cand: int, used: int) -> list[int]:
        if self.rep is None:
            return bits(cand)
        seen = set()
        out = []
        for v in bits(cand):
            # smallest unused member of v's class stands for the class
            r = self.rep[v]
            if r in seen:
                continue
            seen.add(r)
            out.append(v)
        return out

    def tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise _OutOfBudget

    def first(self, depth: int, phi: dict[int, int], used: int):
        if depth == self.F.n:
            return dict(phi)
        u = self.order[depth]
        for v in self._twin_filter(self.candidates(u, phi, used), used):
            self.tick()
            phi[u] = v
            got = self.first(depth + 1, phi, used | (1 << v))
            if got is not None:
                return got
            del phi[u]
        return None

    def count(self, depth: int, phi: dict[int, int], used: int) -> int:
        if depth == self.F.n:
            return 1
        u = self.order[depth]
        total = 0
        for v in bits(self.candidates(u, phi, used)):
            self.tick()
            phi[u] = v
            total += self.count(depth + 1, phi, used | (1 << v))
            del phi[u]
        return total

    def start_depth(self, pre: dict[int, int]) -> int:
        """Pre-assigned vertices must be a prefix of the order; reorder if needed."""
        if pre:
            head = [u for u in self.order if u in pre]
            tail = [u for u in self.order if u not in pre]
            self.order = head + tail
        return len(pre)


def _finish(F, H, phi, verdict, nodes) -> EmbeddingCertificate:
    emb = None if phi is None else tuple(phi[u] for u in range(F.n))
    return EmbeddingCertificate(F, H, emb, verdict, nodes)


def contains_copy(
    H: UniformHypergraph,
    F: UniformHypergraph,
    budget: int | None = None,
    threads: int = 1,
    pre: dict[int, int] | None = None,
) -> EmbeddingCertificate:
    """Search for an injective homomorphism F -> H.

    ``budget`` caps node expansions per first-level branch.  Branches are
    explored in a fixed order; with several threads the reported embedding is
    still the one from the earliest successful branch.
    """
    budget = default_budget() if budget is None else budget
    if F.k != H.k:
        raise InvalidArityError(f"uniformity mismatch {F.k} != {H.k}")
    if F.n > H.n or F.num_edges > H.num_edges:
        return EmbeddingCertificate(F, H, None, NONE, 0)
    pre = dict(pre or {})
    if len(set(pre.values())) != len(pre):
        raise ContractError("pre-assignment is not injective")
    if F.n == 0:
        return EmbeddingCertificate(F, H, (), FOUND, 0)
    # host-twin pruning is unsound once some host vertices are pinned
    probe = _Search(H, F, budget, twins=not pre)
    depth = probe.start_depth(pre)
    for u, v in pre.items():
        if not probe.allowed[u] >> v & 1:
            return EmbeddingCertificate(F, H, None, NONE, 0)
    used = mask_of(pre.values())
    for u in pre:
        rest = {w: x for w, x in pre.items() if w != u}
        if not probe.candidates(u, rest, used & ~(1 << pre[u])) >> pre[u] & 1:
            return EmbeddingCertificate(F, H, None, NONE, 0)
    if depth == F.n:
        return _finish(F, H, pre, FOUND, 0)
    u0 = probe.order[depth]
    branches = probe._twin_filter(probe.candidates(u0, pre, used), used)

    def run(v):
        s = probe.fork()
        phi = dict(pre)
        phi[u0] = v
        try:
            got = s.first(depth + 1, phi, used | (1 << v))
        except _OutOfBudget:
            return EXHAUSTED, None, s.nodes
        return (FOUND if got is not None else NONE), got, s.nodes + 1

    nodes = 0
    exhausted = False
    if threads <= 1:
        results = (run(v) for v in branches)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        results = pool.map(run, branches)
    try:
        for verdict, phi, n in results:
            nodes += n
            if verdict == FOUND:
                return _finish(F, H, phi, FOUND, nodes)
            exhausted |= verdict == EXHAUSTED
    finally:
        if threads > 1:
            pool.shutdown(wait=True, cancel_futures=True)
    return _finish(F, H, None, EXHAUSTED if exhausted else NONE, nodes)


def count_embeddings(H: UniformHypergraph, F: UniformHypergraph, budget: int | None = None) -> int:
    """Number of injective homomorphisms F -> H (no symmetry pruning)."""
    budget = default_budget() if budget is None else budget
    if F.k != H.k:
        raise InvalidArityError(f"uniformity mismatch {F.k} != {H.k}")
    if F.n > H.n:
        return 0
    if F.n == 0:
        return 1
    s = _Search(H, F, budget, twins=False)
    try:
        return s.count(0, {}, 0)
    except _OutOfBudget:
        raise BudgetExceeded("embedding count exceeded its node budget", s.nodes, budget) from None


def brute_force_embedding(H: UniformHypergraph, F: UniformHypergraph) -> tuple[int, ...] | None:
    """Oracle: first injective homomorphism in lexicographic order, by enumeration."""
    for phi in permutations(range(H.n), F.n):
        if all(H.has_edge(phi[v] for v in e) for e in F.edges):
            return phi
    return None


def brute_force_count(H: UniformHypergraph, F: UniformHypergraph) -> int:
    return sum(
        1 for phi in permutations(range(H.n), F.n) if all(H.has_edge(phi[v] for v in e) for e in F.edges)
    )


def contains_copy_through(
    H: UniformHypergraph, F: UniformHypergraph, edge: Iterable[int], budget: int | None = None
) -> EmbeddingCertificate:
    """Search only for copies of F that use the given edge of H."""
    budget = default_budget() if budget is None else budget
    edge = tuple(sorted(edge))
    if not H.has_edge(edge):
        raise ContractError(f"{edge} is not an edge of the host")
    base = _Search(H, F, budget, twins=False)
    exhausted = False
    nodes = 0
    seen = set()
    for f in F.edges:
        for img in permutations(edge):
            pre = dict(zip(f, img))
            key = tuple(sorted(pre.items()))
            if key in seen:
                continue
            seen.add(key)
            s = base.fork()
            depth = s.start_depth(pre)
            try:
                got = s.first(depth, dict(pre), mask_of(img))
            except _OutOfBudget:
                exhausted = True
                got = None
            nodes += s.nodes
            if got is not None:
                return _finish(F, H, got, FOUND, nodes)
    return _finish(F, H, None, EXHAUSTED if exhausted else NONE, nodes)


# -- certification ---------------------------------------------------------------------

def certify_construction(desc, n: int, budget: int | None = None, threads: int = 1, **params) -> dict:
    """Run the claimed min-degree scan and freeness search for one construction."""
    p = {**desc.defaults, **params, "n": n}
    t0 = time.perf_counter()
    H = desc.build(**p)
    t1 = time.perf_counter()
    s = desc.s(p)
    delta = min_s_degree(H, s)
    t2 = time.perf_counter()
    F = desc.forbidden(p)
    cert = contains_copy(H, F, budget=budget, threads=threads)
    t3 = time.perf_counter()
    forb = desc.forbidden_name.format(**p)
    free = None if cert.verdict == EXHAUSTED else not cert.found
    expected = desc.min_degree(p)
    return {
        "construction": desc.name,
        "params": {k: v for k, v in p.items()},
        "n": n,
        "edges": H.num_edges,
        f"delta_{s}": delta,
        f"delta_{s}_claimed": expected,
        "degree_claim_holds": delta == expected,
        f"{forb}_free": free,
        "search": cert.to_dict(),
        "runtime": {"build": t1 - t0, "degree_scan": t2 - t1, "search": t3 - t2},
    }


# -- multicoloured matching or two-point cover ----------------------------------------------

@dataclass
class MatchingOrCover:
    kind: str  # "matching", "cover" or "double_failure"
    matching: tuple[tuple[int, int], ...] | None = None
    cover: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "matching": None if self.matching is None else [list(e) for e in self.matching],
            "cover": None if self.cover is None else list(self.cover),
        }


def _graph_masks(G: Iterable[Iterable[int]], n: int) -> list[int]:
    out = []
    for e in G:
        a, b = (int(x) for x in e)
        if a == b or not (0 <= a < n and 0 <= b < n):
            raise ContractError(f"bad graph edge {(a, b)} on {n} points")
        out.append((1 << a) | (1 << b))
    return sorted(set(out))


def _avoid_table(masks: list[int], n: int) -> np.ndarray:
    """table[S] = index+1 of the first edge disjoint from S, or 0."""
    full = np.arange(1 << n, dtype=np.int64)
    table = np.zeros(1 << n, dtype=np.int64)
    for j in range(len(masks) - 1, -1, -1):
        table[(full & masks[j]) == 0] = j + 1
    return table


def multicolour_matching(
    G1: Iterable[Iterable[int]], G2: Iterable[Iterable[int]], G3: Iterable[Iterable[int]], n: int = 8
) -> MatchingOrCover:
    """Three disjoint edges e_i in G_i, else a pair {a, b} meeting every edge of every G_i."""
    if n < 8:
        raise ContractError(f"need at least 8 points, got {n}")
    if n > 20:
        raise BudgetExceeded("avoid tables are sized 2^n", 1 << n, 1 << 20)
    graphs = [_graph_masks(G, n) for G in (G1, G2, G3)]
    problems = []
    for i, ms in enumerate(graphs):
        deg = [sum(1 for m in ms if m >> v & 1) for v in range(n)]
        low = [v for v in range(n) if deg[v] < 2]
        if low:
            problems.append(f"G_{i + 1} has degree < 2 at {low}")
    if problems:
        raise ContractError("; ".join(problems))
    avoid3 = _avoid_table(graphs[2], n)
    for m1 in graphs[0]:
        for m2 in graphs[1]:
            if m1 & m2:
                continue
            j = avoid3[m1 | m2]
            if j:
                m3 = graphs[2][j - 1]
                return MatchingOrCover("matching", tuple(tuple(bits(m)) for m in (m1, m2, m3)))
    every = [m for ms in graphs for m in ms]
    for a, b in combinations(range(n), 2):
        ab = (1 << a) | (1 << b)
        if all(m & ab for m in every):
            return MatchingOrCover("cover", cover=(a, b))
    return MatchingOrCover("double_failure")


def random_graph_triple(n: int, seed: int, min_degree: int = 2, max_tries: int = 1000):
    """Seeded random graphs G_1, G_2, G_3 on n points, each of minimum degree >= min_degree."""
    rng = rng_stream(seed, 40)
    pairs = list(combinations(range(n), 2))
    out = []
    for _ in range(3):
        for _ in range(max_tries):
            p = rng.uniform(0.2, 0.7)
            keep = rng.random(len(pairs)) < p
            G = [e for e, b in zip(pairs, keep) if b]
            deg = np.zeros(n, dtype=int)
            for a, b in G:
                deg[a] += 1
                deg[b] += 1
            if deg.min() >= min_degree:
                out.append(G)
                break
        else:
            raise RuntimeError("could not sample a graph with the required minimum degree")
    return tuple(out)


# -- local search ---------------------------------------------------------------------------

@dataclass
class HillClimbResult:
    hypergraph: UniformHypergraph
    s: int
    delta: int
    certificate: EmbeddingCertificate
    history: list[int] = field(default_factory=list)


def _score(H_edges: set, n: int, k: int, s: int) -> tuple[int, int]:
    """(delta_s, -number of s-sets at the minimum)."""
    if s == 0:
        return (len(H_edges), 0)
    deg = {S: 0 for S in combinations(range(n), s)}
    for e in H_edges:
        for S in combinations(e, s):
            deg[S] += 1
    lo = min(deg.values())
    return (lo, -sum(1 for d in deg.values() if d == lo))


def hill_climb_codegree(
    n: int,
    F: UniformHypergraph,
    s: int,
    restarts: int = 3,
    seed: int = 0,
    steps: int = 2000,
    t0: float = 1.0,
    cooling: float = 0.995,
    budget: int | None = None,
) -> HillClimbResult:
    """Annealed edge flips over F-free k-graphs on n vertices, maximising delta_s.

    Additions are accepted only if no copy of F passes through the new edge,
    so every visited state is F-free.  The result is a lower-bound witness.
    """
    k = F.k
    if not 0 <= s < k:
        raise InvalidArityError(f"s must lie in [0, {k - 1}]")
    all_edges = list(combinations(range(n), k))
    best_edges: set = set()
    best_score = _score(best_edges, n, k, s)
    history = []
    for r in range(restarts):
        rng = rng_stream(seed, 50, r)
        cur: set = set()
        cur_score = _score(cur, n, k, s)
        temp = t0
        for _ in range(steps):
            e = all_edges[int(rng.integers(len(all_edges)))]
            if e in cur:
                nxt = cur - {e}
            else:
                nxt = cur | {e}
                Hn = UniformHypergraph(n, k, nxt)
                if contains_copy_through(Hn, F, e, budget=budget).verdict != NONE:
                    temp *= cooling
                    continue
            sc = _score(nxt, n, k, s)
            gain = (sc[0] - cur_score[0]) * 10 + (sc[1] - cur_score[1]) * 0.1
            if gain >= 0 or rng.random() < math.exp(gain / max(temp, 1e-9)):
                cur, cur_score = nxt, sc
                if cur_score > best_score:
                    best_edges, best_score = set(cur), cur_score
            temp *= cooling
        history.append(cur_score[0])
    H = UniformHypergraph(n, k, best_edges)
    cert = contains_copy(H, F, budget=budget)
    if cert.verdict != NONE:
        raise ContractError("local search produced a hypergraph that is not certified F-free")
    return HillClimbResult(H, s, min_s_degree(H, s), cert, history)
