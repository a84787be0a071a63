"""Partition systems, strong and weak equivalence, mean-square density, the
equalising method, and an instrumented iterative decomposition loop.

A partition of K_A(X) is stored as an integer label array of shape
``ground.shape(A)``; two tuples share a cell iff their labels agree.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from ._util import default_budget, fraction_json, rng_stream
from .complex import UNDEFINED, Index, PartiteComplex, PartiteGround, _expand, as_index, subsets
from .errors import BudgetExceeded, ContractError, InvalidArityError
from .quasirandom import quasirandom_check


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel cells 0, 1, ... in order of first appearance (C order)."""
    flat = np.asarray(labels).reshape(-1)
    _, first, inv = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inv].reshape(np.shape(labels))


def _combine(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Labels of the common refinement of several label arrays of one shape."""
    if not arrays:
        raise ValueError("nothing to combine")
    stacked = np.stack([a.reshape(-1) for a in arrays], axis=1)
    _, inv = np.unique(stacked, axis=0, return_inverse=True)
    return canonical_labels(inv.reshape(arrays[0].shape))


class PartitionSystem:
    """Partitions P_A of K_A(X) for every nonempty index with |A| <= k.

    ``exceptional[i]`` lists vertex-cell labels of part i that are tagged
    as exceptional pieces left over by the equalising method.
    """

    def __init__(self, ground: PartiteGround, k: int, labels: Mapping[Index, np.ndarray], exceptional=None):
        self.ground = ground
        self.k = k
        self.labels: dict[Index, np.ndarray] = {}
        for A in ground.all_indices(k):
            if not A:
                continue
            if A not in labels:
                raise ContractError(f"missing partition for index {A}")
            lab = np.asarray(labels[A], dtype=np.int64)
            if lab.shape != ground.shape(A):
                raise ContractError(f"partition {A} has shape {lab.shape}, expected {ground.shape(A)}")
            self.labels[A] = lab
        self.exceptional = {i: set(v) for i, v in (exceptional or {}).items()}

    @classmethod
    def trivial(cls, ground: PartiteGround, k: int) -> "PartitionSystem":
        return cls(ground, k, {A: np.zeros(ground.shape(A), dtype=np.int64) for A in ground.all_indices(k) if A})

    def cell_count(self, A) -> int:
        return int(np.unique(self.labels[as_index(A)]).size)

    def cell_counts(self) -> dict[Index, int]:
        return {A: self.cell_count(A) for A in self.labels}

    def with_labels(self, A, lab: np.ndarray, exceptional=None) -> "PartitionSystem":
        labels = dict(self.labels)
        labels[as_index(A)] = canonical_labels(lab)
        exc = dict(self.exceptional) if exceptional is None else exceptional
        return PartitionSystem(self.ground, self.k, labels, exc)

    def __eq__(self, other):
        if not isinstance(other, PartitionSystem):
            return NotImplemented
        return (
            self.ground == other.ground
            and self.k == other.k
            and all(np.array_equal(self.labels[A], other.labels[A]) for A in self.labels)
            and self.exceptional == other.exceptional
        )

    def to_text(self) -> str:
        """One line per tuple: 1-based index, local tuple, cell id."""
        out = []
        for A in sorted(self.labels, key=lambda A: (len(A), A)):
            key = ",".join(str(a + 1) for a in A)
            lab = self.labels[A]
            for t in np.ndindex(lab.shape):
                out.append(f"{key} {' '.join(map(str, t))} {int(lab[t])}")
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, ground: PartiteGround, k: int, text: str) -> "PartitionSystem":
        labels = {A: np.full(ground.shape(A), -1, dtype=np.int64) for A in ground.all_indices(k) if A}
        for ln in text.splitlines():
            if not ln.strip():
                continue
            parts = ln.split()
            A = as_index(int(a) - 1 for a in parts[0].split(","))
            labels[A][tuple(int(x) for x in parts[1:-1])] = int(parts[-1])
        if any((lab < 0).any() for lab in labels.values()):
            raise ContractError("cell-assignment text does not cover every tuple")
        return cls(ground, k, labels)


def _class_over(P: PartitionSystem, A: Index, proper: bool) -> np.ndarray:
    arrays = []
    for B in subsets(A, proper=proper):
        if B:
            arrays.append(np.broadcast_to(_expand(P.labels[B], B, A), P.ground.shape(A)))
    if not arrays:
        return np.zeros(P.ground.shape(A), dtype=np.int64)
    return _combine(arrays)


def strong_classes(P: PartitionSystem, A) -> np.ndarray:
    """S ~ S' iff S_B and S'_B share a cell of P_B for every nonempty B inside A."""
    A = as_index(A)
    if len(A) > P.k:
        raise InvalidArityError(f"|A|={len(A)} exceeds k={P.k}")
    return _class_over(P, A, proper=False)


def weak_partition(P: PartitionSystem, A) -> np.ndarray:
    """P*_A: the same over proper subsets only."""
    A = as_index(A)
    if len(A) > P.k + 1:
        raise InvalidArityError(f"|A|={len(A)} exceeds k+1={P.k + 1}")
    return _class_over(P, A, proper=True)


# -- mean-square density ---------------------------------------------------------------

def _flat(x) -> np.ndarray:
    return np.asarray(x).reshape(-1)


def msd(S, T) -> Fraction:
    """sum_j (|T_j|/|U|) sum_i (|S_i & T_j| / |T_j|)^2, exactly."""
    S, T = _flat(S), _flat(T)
    if S.shape != T.shape:
        raise ContractError("partitions live on different sets")
    U = S.size
    if U == 0:
        raise ContractError("empty ground set")
    _, s = np.unique(S, return_inverse=True)
    _, t = np.unique(T, return_inverse=True)
    joint = np.zeros((s.max() + 1, t.max() + 1), dtype=np.int64)
    np.add.at(joint, (s, t), 1)
    tsize = joint.sum(axis=0)
    total = Fraction(0)
    for j in range(joint.shape[1]):
        total += Fraction(int((joint[:, j] ** 2).sum()), int(tsize[j]))
    return total / U


def is_refinement(fine, coarse) -> bool:
    fine, coarse = _flat(fine), _flat(coarse)
    pairs = np.unique(np.stack([fine, coarse], axis=1), axis=0)
    return np.unique(pairs[:, 0]).size == pairs.shape[0]


def msd_monotone_check(S, T, T_fine) -> bool:
    """msd_{T'}(S) >= msd_T(S) when T' refines T."""
    if not is_refinement(T_fine, T):
        raise ContractError("T' is not a refinement of T")
    return msd(S, T_fine) >= msd(S, T)


# -- equalising -----------------------------------------------------------------------------

@dataclass
class EqualiseResult:
    size: int
    classes: list[tuple[int, tuple]]  # (parent cell, members)
    exceptional: list[tuple[int, tuple]]  # leftover piece of each parent, tagged by parent
    degenerate: bool
    total: int

    @property
    def exceptional_members(self) -> list:
        return [x for _, piece in self.exceptional for x in piece]

    def check(self, cells: Sequence[Sequence]) -> None:
        t = len(cells)
        if self.size != self.total // (t * t):
            raise ContractError("class size is not floor(|E|/t^2)")
        for j, members in self.classes:
            if len(members) != self.size or not set(members) <= set(cells[j]):
                raise ContractError(f"class {members} is not a size-{self.size} subset of cell {j}")
        if not self.degenerate and t * len(self.exceptional_members) >= self.total:
            raise ContractError("exceptional class is not smaller than |E|/t")
        got = sorted(x for _, m in self.classes for x in m) + sorted(self.exceptional_members)
        if sorted(got) != sorted(x for c in cells for x in c):
            raise ContractError("equalised classes do not partition E")


def equalise(cells: Sequence[Sequence]) -> EqualiseResult:
    """Cut each cell into consecutive blocks of size floor(|E|/t^2); leftovers
    stay as tagged exceptional pieces.  Size 0 marks the degenerate case."""
    t = len(cells)
    if t < 1:
        raise ValueError("need at least one cell")
    total = sum(len(c) for c in cells)
    size = total // (t * t)
    classes, exc = [], []
    for j, c in enumerate(cells):
        c = list(c)
        if size == 0:
            if c:
                exc.append((j, tuple(c)))
            continue
        full = len(c) // size * size
        for a in range(0, full, size):
            classes.append((j, tuple(c[a:a + size])))
        if full < len(c):
            exc.append((j, tuple(c[full:])))
    res = EqualiseResult(size, classes, exc, size == 0, total)
    res.check([list(c) for c in cells])
    return res


# -- induced complexes --------------------------------------------------------------------------

def anchor_complex(P: PartitionSystem, x: Sequence[int]) -> PartiteComplex:
    """P(x): tuples strongly equivalent to the sub-tuples of the anchor x."""
    g = P.ground
    if len(x) != g.r:
        raise ContractError("anchor needs one vertex per part")
    masks = {(): np.array(True)}
    for A in g.all_indices(P.k):
        if A:
            sc = strong_classes(P, A)
            masks[A] = sc == sc[tuple(x[i] for i in A)]
    return PartiteComplex(g, P.k, masks)


def induced_complex(H: PartiteComplex, P: PartitionSystem, x: Sequence[int], restrict: bool = True) -> PartiteComplex:
    """H(x, P): the cells of P(x) below level k with H's top layers on them.

    With ``restrict`` the result lives on the anchor's vertex cells only; all
    relative densities and octahedral ratios are unchanged by this.
    """
    if P.k != H.k - 1:
        raise ContractError(f"partition system must stop one level below the complex (k={H.k})")
    Px = anchor_complex(P, x)
    masks = {A: Px.mask(A) for A in Px.indices()}
    g = H.ground
    for A in g.all_indices(H.k):
        if len(A) == H.k:
            star = np.ones(g.shape(A), dtype=bool)
            for j in range(len(A)):
                B = A[:j] + A[j + 1:]
                star &= _expand(masks[B], B, A)
            masks[A] = H.mask(A) & star
    out = PartiteComplex(g, H.k, masks)
    if restrict:
        W = [np.flatnonzero(masks[(i,)]) for i in range(g.r)]
        out = out.restrict_vertices(W)
    return out


# -- decomposition ------------------------------------------------------------------------------

def wilson_interval(hits: int, n: int, z: float = 1.96) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = hits / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class MsdLedger:
    history: dict[Index, list[Fraction]] = field(default_factory=dict)
    steps: list[dict] = field(default_factory=list)

    def record(self, H: PartiteComplex, P: PartitionSystem) -> None:
        for A in H.indices():
            if len(A) == H.k:
                self.history.setdefault(A, []).append(msd(H.mask(A), weak_partition(P, A)))

    def monotone(self) -> bool:
        return all(all(a <= b for a, b in zip(h, h[1:])) for h in self.history.values())

    def to_dict(self) -> dict:
        return {
            "history": {",".join(str(a + 1) for a in A): [fraction_json(v) for v in h] for A, h in self.history.items()},
            "steps": self.steps,
        }


@dataclass
class DecomposeParams:
    densities: dict[int, float]  # level -> d_level, cell caps floor(d^{-1/2})
    eta: dict[int, float]  # level -> eta
    epsilon: float = 0.1
    anchors: int = 200
    max_iterations: int = 10
    pivots: int = 4
    samples: int = 20_000
    z: float = 1.96

    def cap(self, level: int) -> int:
        return int(math.floor(self.densities[level] ** -0.5 + 1e-12))

    def buckets(self, level: int) -> int:
        return max(2, int(math.ceil(self.densities[level] ** -0.5 - 1e-12)))


@dataclass
class AnchorReport:
    anchors: int
    failures: int
    interval: tuple[float, float]
    failing_indices: dict[Index, int]

    @property
    def rate(self) -> float:
        return self.failures / self.anchors if self.anchors else 0.0

    def to_dict(self) -> dict:
        return {
            "anchors": self.anchors,
            "failures": self.failures,
            "rate": self.rate,
            "wilson": list(self.interval),
            "failing_indices": {",".join(str(a + 1) for a in A): c for A, c in sorted(self.failing_indices.items())},
        }


@dataclass
class Decomposition:
    system: PartitionSystem
    ledger: MsdLedger
    report: AnchorReport
    status: str  # "passed", "capped", "plateau" or "max-iterations"
    iterations: int

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "cell_counts": {",".join(str(a + 1) for a in A): c for A, c in sorted(self.system.cell_counts().items())},
            "ledger": self.ledger.to_dict(),
            "sample_report": self.report.to_dict(),
        }


def _test_signature(H, P, x, params, seed, budget):
    """Failing indices of the induced complex at x (empty tuple if it passes)."""
    C = induced_complex(H, P, x)
    failing = []
    for A in C.indices():
        if len(A) < 2:
            continue
        if C.relative_density(A) is UNDEFINED:
            continue
        eta = params.eta[len(A)]
        try:
            rep = quasirandom_check(C, A, eta, mode="exact-float", budget=budget)
        except BudgetExceeded:
            rep = quasirandom_check(C, A, eta, mode="montecarlo", samples=params.samples, seed=seed)
        if rep.passes is not True:
            failing.append(A)
    return tuple(failing)


def sample_anchors(H: PartiteComplex, P: PartitionSystem, params: DecomposeParams, seed: int, iteration: int, threads: int = 1, budget=None) -> AnchorReport:
    g = H.ground
    rng = rng_stream(seed, 60, iteration)
    xs = np.stack([rng.integers(0, s, size=params.anchors) for s in g.sizes], axis=1)
    strong_top = {A: strong_classes(P, A) for A in P.labels if len(A) == P.k}
    vertex = [P.labels[(i,)] for i in range(g.r)]

    def signature(x):
        return tuple(int(vertex[i][x[i]]) for i in range(g.r)) + tuple(
            int(strong_top[A][tuple(x[i] for i in A)]) for A in sorted(strong_top)
        )

    sigs = [signature(x) for x in xs.tolist()]
    unique = sorted(set(sigs))
    reps = {s: None for s in unique}
    for x, s in zip(xs.tolist(), sigs):
        if reps[s] is None:
            reps[s] = x

    def run(j):
        return _test_signature(H, P, reps[unique[j]], params, seed, budget)

    if threads <= 1:
        results = [run(j) for j in range(len(unique))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(len(unique))))
    verdict = dict(zip(unique, results))
    failures = 0
    counts: dict[Index, int] = {}
    for s in sigs:
        if verdict[s]:
            failures += 1
            for A in verdict[s]:
                counts[A] = counts.get(A, 0) + 1
    return AnchorReport(params.anchors, failures, wilson_interval(failures, params.anchors, params.z), counts)


def _refine_by_pivot(H: PartiteComplex, P: PartitionSystem, A: Index, i: int, pivot: tuple, buckets: int) -> np.ndarray:
    """New labels for P_B (B = A minus part i): old label and the bucketed density of
    H_A from each B-tuple into the pivot's link W inside X_i, within strong classes."""
    B = tuple(a for a in A if a != i)
    top = H.mask(A)
    axis = A.index(i)
    # link of the pivot B-tuple in X_i
    sl = [slice(None)] * len(A)
    for j, b in enumerate(B):
        sl[A.index(b)] = pivot[j]
    W = top[tuple(sl)].astype(bool)
    if not W.any():
        return P.labels[B]
    sub = np.compress(W, top, axis=axis)
    dens = sub.mean(axis=axis)
    bucket = np.minimum((dens * buckets).astype(np.int64), buckets - 1)
    return _combine([P.labels[B], bucket])


def _equalise_vertices(P: PartitionSystem) -> PartitionSystem:
    """Re-equalise vertex partitions that are not equitable."""
    labels = dict(P.labels)
    exceptional = {i: set(v) for i, v in P.exceptional.items()}
    for i in range(P.ground.r):
        lab = labels[(i,)]
        cells = [list(np.flatnonzero(lab == c)) for c in np.unique(lab)]
        sizes = {len(c) for c in cells}
        if len(sizes) <= 1:
            continue
        res = equalise(cells)
        if res.degenerate:
            continue
        new = np.empty_like(lab)
        exc_labels = set()
        for c, (_, members) in enumerate(res.classes):
            new[list(members)] = c
        for c, (_, members) in enumerate(res.exceptional, start=len(res.classes)):
            new[list(members)] = c
            exc_labels.add(c)
        labels[(i,)] = new
        exceptional[i] = exc_labels
    return PartitionSystem(P.ground, P.k, labels, exceptional)


def decompose(
    H: PartiteComplex,
    params: DecomposeParams,
    seed: int = 0,
    threads: int = 1,
    budget: int | None = None,
) -> Decomposition:
    """Refine a partition (k-1)-system until sampled induced complexes look quasirandom.

    This instruments the mechanism only: refinement uses density level sets
    against a pivot's link, capped at floor(d^{-1/2}) cells per index.
    """
    if H.k < 2:
        raise InvalidArityError("decomposition needs k >= 2")
    budget = default_budget() if budget is None else budget
    P = PartitionSystem.trivial(H.ground, H.k - 1)
    ledger = MsdLedger()
    ledger.record(H, P)
    status = "max-iterations"
    report = sample_anchors(H, P, params, seed, 0, threads, budget)
    it = 0
    for it in range(1, params.max_iterations + 1):
        if report.interval[0] <= params.epsilon:
            status = "passed"
            it -= 1
            break
        A = min(report.failing_indices, key=lambda A: (-report.failing_indices[A], A))
        rng = rng_stream(seed, 70, it)
        faces = [(i, tuple(a for a in A if a != i)) for i in A]
        stars = {B: np.argwhere(H.mask(B)) for _, B in faces}
        best = None
        for _ in range(params.pivots):
            # one pivot per face B = A - {i}; all faces are refined together
            cand, pivots = P, {}
            for i, B in faces:
                pivot = tuple(int(v) for v in stars[B][int(rng.integers(len(stars[B])))])
                cand = cand.with_labels(B, _refine_by_pivot(H, P, A, i, pivot, params.buckets(len(B))))
                pivots[B] = pivot
            value = msd(H.mask(A), weak_partition(cand, A))
            if best is None or value > best[0]:
                best = (value, cand, pivots)
        after, cand, pivots = best
        before = msd(H.mask(A), weak_partition(P, A))
        step = {
            "iteration": it,
            "index": [a + 1 for a in A],
            "refined": [[b + 1 for b in B] for _, B in faces],
            "pivots": [list(pivots[B]) for _, B in faces],
            "msd_before": fraction_json(before),
            "msd_after": fraction_json(after),
        }
        if after <= before:
            status = "plateau"
            ledger.steps.append(step)
            break
        over = [B for _, B in faces if cand.cell_count(B) > params.cap(len(B))]
        if over:
            status = "capped"
            step["capped"] = [[b + 1 for b in B] for B in over]
            ledger.steps.append(step)
            break
        P = _equalise_vertices(cand)
        ledger.record(H, P)
        if not ledger.monotone():
            raise ContractError("mean-square density decreased along a refinement")
        step["cells"] = [P.cell_count(B) for _, B in faces]
        ledger.steps.append(step)
        report = sample_anchors(H, P, params, seed, it, threads, budget)
    else:
        if report.interval[0] <= params.epsilon:
            status = "passed"
    return Decomposition(P, ledger, report, status, it)


def block_bipartite(n: int) -> PartiteComplex:
    """Two parts of size n; X_a x Y_a and X_b x Y_b complete, nothing across."""
    h = n // 2
    ground = PartiteGround((n, n))
    side = np.arange(n) < h
    top = side[:, None] == side[None, :]
    return PartiteComplex.from_layers(ground, 2, {(0, 1): top})
