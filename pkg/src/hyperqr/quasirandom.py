"""Balanced functions, octahedral (Gowers box) inner products and norms,
quasirandomness checks and counting-lemma evaluators.

Functions on ``K_A(X)`` are dense arrays with one axis per part of ``A``.
Exact evaluation uses Python integers/Fractions in object arrays; the
float path is used for Monte-Carlo estimates and large grounds.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._util import contract, default_budget, fraction_json, rng_stream, to_fraction_array
from .complex import UNDEFINED, Index, PartiteComplex, PartiteGround, as_index, subsets
from .errors import BudgetExceeded, ContractError, InternalError, UndefinedDensityError
from .hypergraph import DensityValue, HomEstimate

Face = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class WeightedEdgeFunction:
    """A real function on K_A(X), zero outside ``support``."""

    ground: PartiteGround
    index: Index
    values: np.ndarray
    support: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "index", as_index(self.index))
        vals = np.asarray(self.values)
        if vals.shape != self.ground.shape(self.index):
            raise ContractError(f"values shape {vals.shape} does not match K_A(X) shape {self.ground.shape(self.index)}")
        if self.support is None:
            sup = vals != 0
        else:
            sup = np.asarray(self.support, dtype=bool)
            if np.any((vals != 0) & ~sup):
                raise ContractError("function is nonzero outside its declared support")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "support", sup)

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    def __neg__(self):
        return WeightedEdgeFunction(self.ground, self.index, -self.values, self.support)

    def as_float(self) -> np.ndarray:
        return self.values.astype(float)

    def total(self):
        """Sum of values over K_A(X)."""
        if self.exact:
            return sum(self.values.reshape(-1).tolist(), Fraction(0))
        return float(self.values.sum())


def characteristic_function(Hc: PartiteComplex, A: Iterable[int], exact: bool = True) -> WeightedEdgeFunction:
    A = as_index(A)
    m = Hc.mask(A)
    vals = m.astype(np.int64)
    if exact:
        vals = to_fraction_array(vals)
    else:
        vals = vals.astype(float)
    return WeightedEdgeFunction(Hc.ground, A, vals, m)


def balanced_function(Hc: PartiteComplex, A: Iterable[int], exact: bool = True) -> WeightedEdgeFunction:
    """H_A - d_A * H_A^*: value 1-d on H_A, -d on the rest of the star, 0 elsewhere."""
    A = as_index(A)
    d = Hc.relative_density(A)
    if d is UNDEFINED:
        raise UndefinedDensityError(f"balanced function of index {A} needs a nonempty star")
    layer = Hc.mask(A)
    star = Hc.star_mask(A)
    if exact:
        vals = np.full(layer.shape, Fraction(0), dtype=object)
        vals[layer] = 1 - Fraction(d)
        vals[star & ~layer] = -Fraction(d)
    else:
        df = float(d)
        vals = np.where(layer, 1.0 - df, np.where(star, -df, 0.0))
    return WeightedEdgeFunction(Hc.ground, A, vals, star)


# -- exact helpers ---------------------------------------------------------------

def _common_scale(arrays: Sequence[np.ndarray]) -> tuple[list[np.ndarray], int]:
    """Scale Fraction arrays to integer object arrays sharing one denominator."""
    den = 1
    for a in arrays:
        for v in a.reshape(-1).tolist():
            den = math.lcm(den, Fraction(v).denominator)
    out = []
    for a in arrays:
        ints = np.empty(a.shape, dtype=object)
        ints.reshape(-1)[:] = [int(Fraction(v) * den) for v in a.reshape(-1).tolist()]
        out.append(ints)
    return out, den


def _faces(m: int) -> list[Face]:
    return list(product((0, 1), repeat=m))


def _gip_total(fs: dict[Face, np.ndarray]):
    """Sum over doubled maps of the face product; arrays carry a leading batch axis."""
    m = len(next(iter(fs)))
    if m == 0:
        return fs[()].sum()
    if m == 1:
        return (fs[(0,)].sum(axis=1) * fs[(1,)].sum(axis=1)).sum()
    n1 = next(iter(fs.values())).shape[1]
    total = 0
    for x in range(n1):
        nxt = {}
        for rest in _faces(m - 1):
            a0 = fs[(0,) + rest]
            a1 = fs[(1,) + rest]
            g = a0[:, x:x + 1] * a1
            nxt[rest] = g.reshape((-1,) + a1.shape[2:])
        total = total + _gip_total(nxt)
    return total


def _oct_total(F: np.ndarray):
    """Sum over doubled maps of prod_faces f; F carries a leading batch axis.

    The last axis is collapsed as a square, which is why Oct >= 0 for |A| >= 1.
    """
    if F.ndim == 2:
        s = F.sum(axis=1)
        return (s * s).sum()
    total = 0
    for x in range(F.shape[1]):
        g = (F[:, x:x + 1] * F).reshape((-1,) + F.shape[2:])
        total = total + _oct_total(g)
    return total


def _check_budget(ground: PartiteGround, A: Index, budget):
    budget = default_budget() if budget is None else budget
    needed = 1
    for i in A:
        needed *= ground.sizes[i] ** 2
    if needed > budget:
        raise BudgetExceeded(f"exact octahedral evaluation needs {needed} doubled maps", needed, budget)
    return needed


def _normaliser(ground: PartiteGround, A: Index) -> int:
    out = 1
    for i in A:
        out *= ground.sizes[i] ** 2
    return out


def gowers_inner_product(
    fs: Mapping[Face, WeightedEdgeFunction],
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    budget: int | None = None,
):
    """E over doubled partite maps of prod_{B in O_A} f_B(omega(B)).

    Faces are 0/1 tuples: entry j says which copy of the vertex class of
    the j-th part of A the face uses.
    """
    fs = dict(fs)
    first = next(iter(fs.values()))
    ground, A = first.ground, first.index
    m = len(A)
    if set(fs) != set(_faces(m)):
        raise ContractError(f"need one function per face of the {m}-octahedron")
    for f in fs.values():
        if f.ground != ground or f.index != A:
            raise ContractError("all functions must share ground and index")
    if mode == "montecarlo":
        return _gip_montecarlo({B: f.as_float() for B, f in fs.items()}, samples, seed)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    _check_budget(ground, A, budget)
    N = _normaliser(ground, A)
    if all(f.exact for f in fs.values()):
        keys = list(fs)
        ints, den = _common_scale([fs[B].values for B in keys])
        total = _gip_total({B: a[None] for B, a in zip(keys, ints)})
        return Fraction(int(total), den ** len(keys) * N)
    total = _gip_total({B: f.as_float()[None] for B, f in fs.items()})
    return float(total) / N


def _gip_montecarlo(arrays: dict[Face, np.ndarray], samples: int, seed: int) -> HomEstimate:
    if samples <= 0:
        raise ValueError("Monte-Carlo mode needs a positive sample count")
    shape = next(iter(arrays.values())).shape
    rng = rng_stream(seed, 2)
    picks = [rng.integers(0, n, size=(samples, 2)) for n in shape]
    prod_ = np.ones(samples)
    for B, a in arrays.items():
        prod_ *= a[tuple(picks[j][:, B[j]] for j in range(len(shape)))]
    mean = float(prod_.mean())
    se = float(prod_.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    return HomEstimate(mean, se, samples)


def oct(f: WeightedEdgeFunction, mode: str = "exact", samples: int = 100_000, seed: int = 0, budget: int | None = None):
    """Oct(f): the Gowers inner product with f on every face."""
    m = len(f.index)
    if mode == "montecarlo":
        return _gip_montecarlo({B: f.as_float() for B in _faces(m)}, samples, seed)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if m == 0:
        v = f.values[()]
        return Fraction(v) if f.exact else float(v)
    _check_budget(f.ground, f.index, budget)
    N = _normaliser(f.ground, f.index)
    if f.exact:
        (ints,), den = _common_scale([f.values])
        value = Fraction(int(_oct_total(ints[None])), den ** (2**m) * N)
        if value < 0:
            raise InternalError(f"negative Oct {value}")
        return value
    value = float(_oct_total(f.values.astype(float)[None])) / N
    if value < -1e-12:
        raise InternalError(f"negative Oct {value}")
    return value


def box_norm(f: WeightedEdgeFunction, mode: str = "exact", **kw) -> float:
    """Oct(f) ** 2^-|A|."""
    v = oct(f, mode=mode, **kw)
    if isinstance(v, HomEstimate):
        v = v.mean
    return max(float(v), 0.0) ** (2.0 ** -len(f.index))


def c4(f: np.ndarray):
    """C4(f) for a function on X x Y, via the row-correlation matrix."""
    f = np.asarray(f)
    nx, ny = f.shape
    M = f @ f.T
    total = (M * M).sum()
    if f.dtype == object:
        return Fraction(total) / (nx * nx * ny * ny)
    return float(total) / (nx * nx * ny * ny)


def o3(f: WeightedEdgeFunction, mode: str = "exact", **kw):
    if len(f.index) != 3:
        raise ContractError("O_3 needs a function on a 3-index")
    return oct(f, mode=mode, **kw)


# -- quasirandomness ------------------------------------------------------------

def octahedron_boundary_exponents(A: Index) -> dict[Index, int]:
    """Multiplicity 2^|B| of each proper sub-index B in the strict-subset complex of O_A."""
    return {B: 2 ** len(B) for B in subsets(A, proper=True)}


def quasirandom_bound(Hc: PartiteComplex, A: Iterable[int], eta) -> Fraction | float:
    A = as_index(A)
    out = Fraction(eta) if isinstance(eta, (int, Fraction)) else eta
    for B, mult in octahedron_boundary_exponents(A).items():
        d = Hc.relative_density(B)
        if d is UNDEFINED:
            raise UndefinedDensityError(f"density of boundary index {B} is undefined")
        out = out * (Fraction(d) ** mult if isinstance(out, Fraction) else float(d) ** mult)
    return out


def three_graph_bound(eta, d12, d13, d23):
    """eta * (d12 d13 d23)^4, the bound for a 3-index when vertex layers are complete."""
    return eta * (d12 * d13 * d23) ** 4


@dataclass
class QuasirandomnessReport:
    index: Index
    oct_value: object
    bound: float
    passes: object  # True, False or "inconclusive"
    method: dict

    def to_dict(self) -> dict:
        if isinstance(self.oct_value, Fraction):
            oct_json = fraction_json(self.oct_value)
        elif isinstance(self.oct_value, HomEstimate):
            oct_json = self.oct_value.mean
        else:
            oct_json = float(self.oct_value)
        return {
            "index": [a + 1 for a in self.index],
            "oct": oct_json,
            "bound": float(self.bound),
            "passes": self.passes,
            "method": self.method,
        }


def quasirandom_check(
    Hc: PartiteComplex,
    A: Iterable[int],
    eta,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    z: float = 3.0,
    budget: int | None = None,
) -> QuasirandomnessReport:
    """Test Oct(balanced function of H_A) <= eta * prod_{B in O_A^<} d_B."""
    A = as_index(A)
    bound = quasirandom_bound(Hc, A, eta)
    if mode == "exact":
        f = balanced_function(Hc, A, exact=True)
        value = oct(f, mode="exact", budget=budget)
        return QuasirandomnessReport(A, value, float(bound), bool(value <= bound), {"kind": "exact"})
    if mode == "exact-float":
        f = balanced_function(Hc, A, exact=False)
        value = oct(f, mode="exact", budget=budget)
        return QuasirandomnessReport(A, value, float(bound), bool(value <= float(bound)), {"kind": "exact-float"})
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    f = balanced_function(Hc, A, exact=False)
    est = oct(f, mode="montecarlo", samples=samples, seed=seed)
    b = float(bound)
    if est.mean + z * est.stderr <= b:
        verdict = True
    elif est.mean - z * est.stderr > b:
        verdict = False
    else:
        verdict = "inconclusive"
    method = {"kind": "montecarlo", "samples": samples, "stderr": est.stderr, "z": z}
    return QuasirandomnessReport(A, est, b, verdict, method)


# -- counting --------------------------------------------------------------------

_LETTERS = string.ascii_letters


def _pattern_vertices(Fc: PartiteComplex) -> tuple[list[tuple[int, int]], dict]:
    verts = [(i, x) for i in range(Fc.r) for x in range(Fc.ground.sizes[i])]
    return verts, {v: j for j, v in enumerate(verts)}


def pattern_faces(Fc: PartiteComplex, include_empty: bool = False):
    """All nonempty faces of a pattern complex as (index, local tuple)."""
    out = []
    for A in Fc.indices():
        if not A and not include_empty:
            continue
        for t in sorted(Fc.layer(A)):
            out.append((A, t))
    return out


def _einsum_average(Fc: PartiteComplex, Hground: PartiteGround, weights: Mapping, faces, budget):
    verts, pos = _pattern_vertices(Fc)
    if len(verts) > len(_LETTERS):
        raise BudgetExceeded("pattern has too many vertices for exact contraction", len(verts), len(_LETTERS))
    maps = 1
    for i, _ in verts:
        maps *= Hground.sizes[i]
    budget = default_budget() if budget is None else budget
    if maps > budget:
        raise BudgetExceeded(f"exact partite count needs {maps} maps", maps, budget)
    operands, subs = [], []
    covered = set()
    for A, t in faces:
        subs.append("".join(_LETTERS[pos[(i, x)]] for i, x in zip(A, t)))
        operands.append(weights[(A, t)])
        covered.update(pos[(i, x)] for i, x in zip(A, t))
    for j, (i, _) in enumerate(verts):
        if j not in covered:
            subs.append(_LETTERS[j])
            operands.append(np.ones(Hground.sizes[i], dtype=np.int64))
    if not verts:
        return Fraction(1), maps
    total = contract(subs, operands)
    return total, maps


def _as_int_operand(mask: np.ndarray, big: bool) -> np.ndarray:
    a = mask.astype(np.int64)
    return a.astype(object) if big else a


@dataclass(frozen=True)
class CountingResult:
    measured: object  # DensityValue / Fraction / float / HomEstimate
    predicted: object

    @property
    def value(self):
        return self.measured.mean if isinstance(self.measured, HomEstimate) else self.measured


def predicted_density(Fc: PartiteComplex, Hc: PartiteComplex) -> Fraction:
    """prod over nonempty faces e of F of d_{i(e)}(H)."""
    out = Fraction(1)
    for A, _ in pattern_faces(Fc):
        out *= Fraction(Hc.require_density(A))
    return out


def partite_hom_density(
    Fc: PartiteComplex,
    Hc: PartiteComplex,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    budget: int | None = None,
) -> CountingResult:
    """Probability that a random partite map F -> H sends every face of F into H."""
    if Fc.r != Hc.r:
        raise ContractError(f"pattern has {Fc.r} parts, host {Hc.r}")
    if Fc.k > Hc.k:
        raise ContractError("pattern has faces above the host's top level")
    faces = pattern_faces(Fc)
    predicted = predicted_density(Fc, Hc)
    if mode == "montecarlo":
        return CountingResult(_partite_montecarlo(Fc, Hc.ground, {(A, t): Hc.mask(A) for A, t in faces}, faces, samples, seed), predicted)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    verts, _ = _pattern_vertices(Fc)
    maps = 1
    for i, _ in verts:
        maps *= Hc.ground.sizes[i]
    big = maps >= 2**62
    weights = {(A, t): _as_int_operand(Hc.mask(A), big) for A, t in faces}
    total, maps = _einsum_average(Fc, Hc.ground, weights, faces, budget)
    return CountingResult(DensityValue(int(total), maps), predicted)


def _partite_montecarlo(Fc, Hground, weights, faces, samples, seed) -> HomEstimate:
    if samples <= 0:
        raise ValueError("Monte-Carlo mode needs a positive sample count")
    rng = rng_stream(seed, 3)
    verts, pos = _pattern_vertices(Fc)
    phi = np.stack([rng.integers(0, Hground.sizes[i], size=samples) for i, _ in verts], axis=1) if verts else np.zeros((samples, 0), dtype=np.intp)
    val = np.ones(samples)
    for A, t in faces:
        w = np.asarray(weights[(A, t)])
        w = w.astype(float)
        val *= w[tuple(phi[:, pos[(i, x)]] for i, x in zip(A, t))]
    mean = float(val.mean())
    se = float(val.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    return HomEstimate(mean, se, samples)


def weighted_hom_average(
    Fc: PartiteComplex,
    F0: Iterable[tuple[Index, tuple[int, ...]]],
    fs: Mapping[tuple[Index, tuple[int, ...]], object],
    Hc: PartiteComplex,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    budget: int | None = None,
) -> CountingResult:
    """E over partite maps of prod_{e in F} f_e(phi(e)), with f_e = H_e off F0.

    ``predicted`` is the factored value prod_{e not in F0} d_e * E[prod_{e in F0} f_e].
    """
    faces = pattern_faces(Fc)
    F0 = {(as_index(A), tuple(t)) for A, t in F0}
    face_set = set(faces)
    if not F0 <= face_set:
        raise ContractError(f"F0 contains non-faces {sorted(F0 - face_set)}")
    for A, t in F0:
        for j in range(len(A)):
            sub = (A[:j] + A[j + 1:], t[:j] + t[j + 1:])
            if sub[0] and sub not in F0:
                raise ContractError(f"F0 is not a subcomplex: {sub} missing below {(A, t)}")
    weights = {}
    exact = mode == "exact"
    for e in faces:
        A = e[0]
        if e in F0:
            if e not in fs:
                raise ContractError(f"no function supplied for face {e}")
            f = fs[e]
            vals = f.values if isinstance(f, WeightedEdgeFunction) else np.asarray(f)
            if vals.shape != Hc.ground.shape(A):
                raise ContractError(f"function for face {e} has the wrong shape")
            if np.any((vals != 0) & ~Hc.mask(A)):
                raise ContractError(f"function for face {e} is nonzero off H_{A}")
        else:
            vals = Hc.mask(A).astype(np.int64)
        if exact:
            vals = vals if vals.dtype == object else to_fraction_array(vals)
        else:
            vals = vals.astype(float)
        weights[e] = vals
    factor = Fraction(1)
    for e in faces:
        if e not in F0:
            factor *= Fraction(Hc.require_density(e[0]))
    if mode == "montecarlo":
        est = _partite_montecarlo(Fc, Hc.ground, weights, faces, samples, seed)
        f0_faces = [e for e in faces if e in F0]
        base = _partite_montecarlo(Fc, Hc.ground, weights, f0_faces, samples, seed)
        return CountingResult(est, float(factor) * base.mean)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    keys = list(weights)
    ints, den_all = _common_scale([weights[e] for e in keys])
    # every face carries its own scale factor den_all
    iw = dict(zip(keys, ints))
    total, maps = _einsum_average(Fc, Hc.ground, iw, faces, budget)
    measured = Fraction(int(total), maps * den_all ** len(keys))
    f0_faces = [e for e in faces if e in F0]
    if f0_faces:
        t0, maps0 = _einsum_average(Fc, Hc.ground, iw, f0_faces, budget)
        base = Fraction(int(t0), maps0 * den_all ** len(f0_faces))
    else:
        base = Fraction(1)
    return CountingResult(measured, factor * base)


# -- graph-case tools ------------------------------------------------------------

@dataclass
class RegularityProbe:
    max_deviation: float
    witness: tuple[np.ndarray, np.ndarray]
    density: float
    trials: int


def epsilon_regular_estimate(G: np.ndarray, epsilon: float, trials: int, seed: int = 0) -> RegularityProbe:
    """Randomised search for a pair X' x Y' whose density deviates from d(G).

    Trials alternate between uniform random subsets and neighbourhood-derived
    subsets (N(y), non-N(y) for random y, likewise on the other side), with sizes
    at least ceil(epsilon |X|).  One-sided: a small maximum is no proof of
    regularity.
    """
    G = np.asarray(G, dtype=bool)
    nx, ny = G.shape
    if min(nx, ny) < 1 / epsilon:
        raise ContractError(f"parts of size {nx}, {ny} are smaller than 1/epsilon")
    rng = rng_stream(seed, 4)
    d = float(G.mean())
    mx, my = math.ceil(epsilon * nx), math.ceil(epsilon * ny)
    Gi = G.astype(np.int64)
    best, wit = 0.0, (np.arange(nx), np.arange(ny))

    def random_subset(n, m):
        size = int(rng.integers(m, n + 1))
        return rng.choice(n, size=size, replace=False)

    for t in range(trials):
        if t % 2 == 0:
            Xs, Ys = random_subset(nx, mx), random_subset(ny, my)
        else:
            y, x = int(rng.integers(ny)), int(rng.integers(nx))
            colx = G[:, y] if rng.random() < 0.5 else ~G[:, y]
            rowy = G[x, :] if rng.random() < 0.5 else ~G[x, :]
            Xs, Ys = np.flatnonzero(colx), np.flatnonzero(rowy)
            if len(Xs) < mx:
                Xs = random_subset(nx, mx)
            if len(Ys) < my:
                Ys = random_subset(ny, my)
        dev = abs(Gi[np.ix_(Xs, Ys)].mean() - d)
        if dev > best:
            best, wit = float(dev), (np.sort(Xs), np.sort(Ys))
    return RegularityProbe(best, wit, d, trials)


def second_moment_filter(a: Sequence[float], d: float, alpha: float) -> set[int]:
    """Indices i with |a_i - d| > alpha^(1/4).

    When sum(a) >= (d - alpha) n and sum(a^2) <= (d^2 + alpha) n the result
    has at most 3 alpha^(1/2) n elements; that is asserted here.
    """
    if not (0 < alpha < 1 and 0 < d < 1):
        raise ValueError("need 0 < alpha, d < 1")
    a = np.asarray(a, dtype=float)
    n = len(a)
    out = {int(i) for i in np.flatnonzero(np.abs(a - d) > alpha**0.25)}
    if a.sum() >= (d - alpha) * n and (a * a).sum() <= (d * d + alpha) * n:
        if len(out) > 3 * math.sqrt(alpha) * n:
            raise InternalError("second-moment bound violated")
    return out


def second_moment_hypotheses(a: Sequence[float], d: float, alpha: float) -> bool:
    a = np.asarray(a, dtype=float)
    n = len(a)
    return bool(a.sum() >= (d - alpha) * n and (a * a).sum() <= (d * d + alpha) * n)


# -- hidden parameters ----------------------------------------------------------

@dataclass
class HiddenParameterLadder:
    k: int
    F_size: int
    densities: dict
    eta: dict[int, object]
    eps: dict[int, object]

    def decreasing(self) -> bool:
        return all(self.eps[s - 1] < self.eta[s] < self.eps[s] for s in range(2, self.k + 1))


def hidden_parameters(epsilon, F, densities: Mapping | None = None, k: int | None = None) -> HiddenParameterLadder:
    """The ladder eps_k = epsilon, eta_s = (eps_s prod_{A in F, |A|>=s} d_A)^(2^s) / 2,
    eps_{s-1} = eta_s |F|^-1 prod_{t=s}^k 2^-t.

    ``F`` is a PartiteComplex (its nonempty faces are counted) or a sequence of
    face indices with multiplicity; ``densities`` maps an index to d_A (default 1).
    Float inputs are converted exactly, so every entry is a Fraction.
    """
    if isinstance(F, PartiteComplex):
        faces = [A for A, _ in pattern_faces(F)]
        k = F.k if k is None else k
    else:
        faces = [as_index(A) for A in F]
        k = max((len(A) for A in faces), default=0) if k is None else k
    densities = {as_index(A): v for A, v in (densities or {}).items()}
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not faces:
        raise ValueError("F must have at least one face")
    if any(v <= 0 for v in densities.values()):
        raise ValueError("densities must be positive")
    if k < 2:
        raise ValueError("the ladder needs k >= 2")
    # exact throughout: float powers underflow to 0 already at k = 4
    one = Fraction(1)
    densities = {A: Fraction(v) for A, v in densities.items()}
    eps = {k: Fraction(epsilon)}
    eta = {}
    for s in range(k, 1, -1):
        prod_d = one
        for A in faces:
            if len(A) >= s:
                prod_d = prod_d * densities.get(A, 1)
        eta[s] = (eps[s] * prod_d) ** (2**s) / 2
        scale = one
        for t in range(s, k + 1):
            scale = scale / 2**t
        eps[s - 1] = eta[s] / len(faces) * scale
    return HiddenParameterLadder(k, len(faces), densities, eta, eps)


# -- graph equivalences ---------------------------------------------------------
# Transfer constants between epsilon-regularity (1), C4 counting (2) and small
# C4 of the balanced function (3).  Each direction is a forward bound only.

def regular_to_counting(eps1):
    """eps_2 = 10 eps_1: an eps_1-regular pair has d_C4 = d^4 +- eps_2."""
    return 10 * eps1


def counting_to_quasirandom(eps2) -> float:
    """eps_3 = 64 eps_2^(1/4): d_C4 = d^4 +- eps_2 forces C4(G - d) < eps_3."""
    return 64 * float(eps2) ** 0.25


def quasirandom_to_regular(eps3) -> float:
    """eps_1 = eps_3^(1/12): C4(G - d) < eps_3 forces eps_1-regularity."""
    return float(eps3) ** (1 / 12)


@dataclass
class PathDensities:
    """Exact homomorphism densities of the subgraphs of C4 in a bipartite graph."""

    d: Fraction
    p2x: Fraction  # centre in X
    p2y: Fraction  # centre in Y
    p3: Fraction
    c4: Fraction

    def balanced_c4(self) -> Fraction:
        """C4(G - d) by expanding each factor as G - d."""
        d = self.d
        return self.c4 - 4 * d * self.p3 + 2 * d * d * (self.p2x + self.p2y) - d**4


def path_densities(G: np.ndarray) -> PathDensities:
    G = np.asarray(G, dtype=bool).astype(object)
    nx, ny = G.shape
    if nx == 0 or ny == 0:
        raise UndefinedDensityError("empty part")
    rows = G.sum(axis=1)
    cols = G.sum(axis=0)
    d = Fraction(int(rows.sum()), nx * ny)
    p2x = Fraction(int((rows * rows).sum()), nx * ny * ny)
    p2y = Fraction(int((cols * cols).sum()), nx * nx * ny)
    # x1 - y1, x1 - y2, x2 - y2: sum over edges x1y2 of deg(x1) deg(y2)
    p3 = Fraction(int((G * np.outer(rows, cols)).sum()), nx * nx * ny * ny)
    return PathDensities(d, p2x, p2y, p3, c4(G))


def subpair_deviation_bound(G: np.ndarray, Xs: Sequence[int], Ys: Sequence[int]) -> tuple[float, float]:
    """(|d(X',Y') - d|, |X||Y| / (|X'||Y'|) * C4(G - d)^(1/4)); the first never
    exceeds the second."""
    G = np.asarray(G, dtype=bool)
    nx, ny = G.shape
    Xs, Ys = np.asarray(Xs, dtype=int), np.asarray(Ys, dtype=int)
    if Xs.size == 0 or Ys.size == 0:
        raise UndefinedDensityError("empty sub-pair")
    d = G.mean()
    dev = abs(G[np.ix_(Xs, Ys)].mean() - d)
    bound = nx * ny / (Xs.size * Ys.size) * max(c4(G - d), 0.0) ** 0.25
    return float(dev), float(bound)
