"""r-partite vertex sets and downward-closed partite complexes.

Parts are contiguous ranges of global vertex labels.  Inside a complex,
a tuple of index ``A`` (a sorted tuple of part numbers, 0-based) is
written in *local* coordinates: entry ``j`` is the position of the
vertex inside part ``A[j]``.  Layers are boolean arrays over
``K_A(X)``, one axis per part in ``A``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError, InvalidArityError, NotPartiteError, UndefinedDensityError
from .hypergraph import DensityValue, UniformHypergraph

Index = tuple[int, ...]


class _Undefined:
    """Relative density of a layer whose star is empty."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        return False


UNDEFINED = _Undefined()


def as_index(A: Iterable[int]) -> Index:
    t = tuple(sorted(int(a) for a in A))
    if len(set(t)) != len(t):
        raise ValueError(f"index {t} repeats a part")
    return t


def subsets(A: Index, proper: bool = False):
    top = len(A) - 1 if proper else len(A)
    for s in range(top + 1):
        yield from combinations(A, s)


@dataclass(frozen=True)
class PartiteGround:
    sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if not self.sizes or any(s <= 0 for s in self.sizes):
            raise ValueError(f"parts must be nonempty, got sizes {self.sizes}")

    @property
    def r(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for s in self.sizes:
            out.append(acc)
            acc += s
        return tuple(out)

    def part_of(self, v: int) -> int:
        for i, (o, s) in enumerate(zip(self.offsets, self.sizes)):
            if o <= v < o + s:
                return i
        raise ValueError(f"vertex {v} outside ground of size {self.n}")

    def part(self, i: int) -> range:
        o = self.offsets[i]
        return range(o, o + self.sizes[i])

    def shape(self, A: Index) -> tuple[int, ...]:
        return tuple(self.sizes[i] for i in A)

    def size_of(self, A: Index) -> int:
        return int(np.prod(self.shape(A), dtype=object)) if A else 1

    def split(self, edge: Iterable[int]) -> tuple[Index, tuple[int, ...]]:
        """Index and local coordinates of a partite set of global vertices."""
        offs = self.offsets
        pairs = sorted((self.part_of(v), v) for v in edge)
        idx = tuple(p for p, _ in pairs)
        if len(set(idx)) != len(idx):
            raise NotPartiteError(f"set {tuple(edge)} meets a part twice")
        return idx, tuple(v - offs[p] for p, v in pairs)

    def to_global(self, A: Index, local: Sequence[int]) -> tuple[int, ...]:
        offs = self.offsets
        return tuple(offs[i] + x for i, x in zip(A, local))

    def all_indices(self, k: int):
        for s in range(min(k, self.r) + 1):
            yield from combinations(range(self.r), s)


def _expand(mask: np.ndarray, sub: Index, A: Index) -> np.ndarray:
    """Broadcast a layer over ``sub`` to the axes of ``A`` (sub is a subset of A)."""
    shape = [1] * len(A)
    pos = {a: j for j, a in enumerate(A)}
    for j, b in enumerate(sub):
        shape[pos[b]] = mask.shape[j]
    return mask.reshape(shape)


class PartiteComplex:
    """Downward-closed family of partite tuples of size at most ``k``."""

    def __init__(self, ground: PartiteGround, k: int, masks: Mapping[Index, np.ndarray], validate: bool = True):
        self.ground = ground
        self.k = int(k)
        self._masks: dict[Index, np.ndarray] = {}
        for A in ground.all_indices(self.k):
            if A not in masks:
                raise ContractError(f"missing layer for index {A}")
            m = np.asarray(masks[A], dtype=bool)
            if m.shape != ground.shape(A):
                raise ContractError(f"layer {A} has shape {m.shape}, expected {ground.shape(A)}")
            m = m.copy()
            m.setflags(write=False)
            self._masks[A] = m
        extra = set(masks) - set(self._masks)
        if extra:
            raise ContractError(f"layers {sorted(extra)} are not indices of size <= {k}")
        if validate:
            self.validate()

    # construction helpers ------------------------------------------------
    @classmethod
    def complete(cls, ground: PartiteGround, k: int) -> "PartiteComplex":
        return cls(ground, k, {A: np.ones(ground.shape(A), dtype=bool) for A in ground.all_indices(k)}, validate=False)

    @classmethod
    def from_layers(cls, ground: PartiteGround, k: int, layers: Mapping[Index, np.ndarray], fill: str = "complete"):
        """Build from a partial layer map; missing layers are complete (``fill='complete'``)
        or the projections of the given higher layers (``fill='closure'``)."""
        layers = {as_index(A): np.asarray(m, dtype=bool) for A, m in layers.items()}
        masks = {}
        if fill == "complete":
            for A in ground.all_indices(k):
                masks[A] = layers.get(A, np.ones(ground.shape(A), dtype=bool))
        elif fill == "closure":
            masks = {A: np.zeros(ground.shape(A), dtype=bool) for A in ground.all_indices(k)}
            masks[()] = np.array(True)
            for A, m in layers.items():
                masks[A] = masks[A] | m
            for s in range(k, 0, -1):
                for A in [A for A in masks if len(A) == s]:
                    for j in range(s):
                        B = A[:j] + A[j + 1:]
                        masks[B] = masks[B] | masks[A].any(axis=j)
        else:
            raise ValueError(f"unknown fill {fill!r}")
        return cls(ground, k, masks)

    # accessors -------------------------------------------------------------
    @property
    def r(self) -> int:
        return self.ground.r

    def indices(self):
        return list(self._masks)

    def mask(self, A: Iterable[int]) -> np.ndarray:
        A = as_index(A)
        if len(A) > self.k:
            raise InvalidArityError(f"|A|={len(A)} exceeds k={self.k}")
        return self._masks[A]

    def layer(self, A: Iterable[int]) -> set[tuple[int, ...]]:
        return {tuple(int(x) for x in t) for t in np.argwhere(self.mask(A))}

    def star_mask(self, A: Iterable[int]) -> np.ndarray:
        A = as_index(A)
        if len(A) > self.k:
            raise InvalidArityError(f"|A|={len(A)} exceeds k={self.k}")
        out = np.ones(self.ground.shape(A), dtype=bool)
        for j in range(len(A)):
            B = A[:j] + A[j + 1:]
            out = out & _expand(self._masks[B], B, A)
        return out

    def star(self, A: Iterable[int]) -> set[tuple[int, ...]]:
        return {tuple(int(x) for x in t) for t in np.argwhere(self.star_mask(A))}

    def count(self, A: Iterable[int]) -> int:
        return int(self.mask(A).sum())

    def relative_density(self, A: Iterable[int]):
        """|H_A| / |H_A*| exactly, or ``UNDEFINED`` if the star is empty."""
        A = as_index(A)
        star = int(self.star_mask(A).sum())
        if star == 0:
            return UNDEFINED
        return DensityValue(int(self._masks[A].sum()), star)

    def require_density(self, A: Iterable[int]) -> DensityValue:
        d = self.relative_density(A)
        if d is UNDEFINED:
            raise UndefinedDensityError(f"relative density of index {as_index(A)} is undefined (empty star)")
        return d

    def absolute_density(self, A: Iterable[int]) -> DensityValue:
        A = as_index(A)
        return DensityValue(int(self._masks[A].sum()), self.ground.size_of(A))

    def contains(self, A: Iterable[int], local: Sequence[int]) -> bool:
        return bool(self.mask(A)[tuple(local)])

    # validation ------------------------------------------------------------
    def validate(self) -> None:
        if not bool(self._masks[()]):
            raise ContractError("H_emptyset must be {emptyset}")
        for A, m in self._masks.items():
            if A and np.any(m & ~self.star_mask(A)):
                bad = tuple(int(x) for x in np.argwhere(m & ~self.star_mask(A))[0])
                raise ContractError(f"not downward closed: tuple {bad} of index {A} has a missing face")

    def is_downward_closed(self) -> bool:
        try:
            self.validate()
        except ContractError:
            return False
        return True

    # derived complexes -----------------------------------------------------
    def subcomplex(self, keep: Mapping[Index, np.ndarray]) -> "PartiteComplex":
        """Largest subcomplex inside ``keep`` (missing keys keep everything)."""
        masks: dict[Index, np.ndarray] = {}
        for A in sorted(self._masks, key=len):
            m = self._masks[A].copy()
            if A in keep:
                m &= np.asarray(keep[A], dtype=bool)
            if A:
                star = np.ones(m.shape, dtype=bool)
                for j in range(len(A)):
                    B = A[:j] + A[j + 1:]
                    star &= _expand(masks[B], B, A)
                m &= star
            masks[A] = m
        return PartiteComplex(self.ground, self.k, masks, validate=False)

    def restrict_vertices(self, W: Sequence[Sequence[int]]) -> "PartiteComplex":
        """Induced complex on local vertex subsets ``W[i]`` of each part, relabelled."""
        W = [np.asarray(sorted(w), dtype=np.intp) for w in W]
        ground = PartiteGround(tuple(len(w) for w in W))
        masks = {A: m[np.ix_(*[W[i] for i in A])] if A else m for A, m in self._masks.items()}
        return PartiteComplex(ground, self.k, masks, validate=False)

    def truncate(self, k: int) -> "PartiteComplex":
        return PartiteComplex(self.ground, k, {A: m for A, m in self._masks.items() if len(A) <= k}, validate=False)

    def __eq__(self, other):
        if not isinstance(other, PartiteComplex):
            return NotImplemented
        return (
            self.ground == other.ground
            and self.k == other.k
            and all(np.array_equal(self._masks[A], other._masks[A]) for A in self._masks)
        )

    def __repr__(self):
        counts = {A: int(m.sum()) for A, m in self._masks.items() if A}
        return f"PartiteComplex(sizes={self.ground.sizes}, k={self.k}, counts={counts})"

    # serialisation ---------------------------------------------------------
    def to_json(self) -> str:
        layers = {
            ",".join(str(a + 1) for a in A): sorted(list(t) for t in self.layer(A))
            for A in self._masks
            if A
        }
        return json.dumps({"parts": list(self.ground.sizes), "k": self.k, "layers": layers})

    @classmethod
    def from_json(cls, text: str) -> "PartiteComplex":
        data = json.loads(text)
        ground = PartiteGround(tuple(data["parts"]))
        k = data["k"]
        masks = {A: np.zeros(ground.shape(A), dtype=bool) for A in ground.all_indices(k)}
        masks[()] = np.array(True)
        for key, tuples in data["layers"].items():
            A = as_index(int(a) - 1 for a in key.split(","))
            for t in tuples:
                masks[A][tuple(t)] = True
        return cls(ground, k, masks)


def partite_edges(H: UniformHypergraph, ground: PartiteGround) -> dict[Index, list[tuple[int, ...]]]:
    """Group the edges of a partite hypergraph by index (local coordinates)."""
    if ground.n != H.n:
        raise ContractError(f"ground has {ground.n} vertices, hypergraph {H.n}")
    out: dict[Index, list] = {}
    for e in H.edges:
        A, loc = ground.split(e)
        out.setdefault(A, []).append(loc)
    return out


def generated_complex(
    H: UniformHypergraph, ground: PartiteGround, strict: bool = False, vertex_layers: str = "declared"
) -> PartiteComplex:
    """Downward closure H^<= of a partite k-graph (H^< when ``strict``).

    With ``vertex_layers='declared'`` every vertex of the ground is present
    (H_{i} = X_i); with ``'closure'`` only vertices covered by an edge are.
    """
    k = H.k
    layers = {}
    for A, locs in partite_edges(H, ground).items():
        m = np.zeros(ground.shape(A), dtype=bool)
        m[tuple(np.array(locs, dtype=np.intp).T)] = True
        layers[A] = m
    cx = PartiteComplex.from_layers(ground, k, layers, fill="closure")
    masks = {A: cx.mask(A) for A in cx.indices()}
    if vertex_layers == "declared":
        for i in range(ground.r):
            masks[(i,)] = np.ones(ground.sizes[i], dtype=bool)
    elif vertex_layers != "closure":
        raise ValueError(f"unknown vertex_layers {vertex_layers!r}")
    if strict:
        masks = {A: m for A, m in masks.items() if len(A) < k}
        return PartiteComplex(ground, k - 1, masks)
    return PartiteComplex(ground, k, masks)


def strict_subsets_complex(H: UniformHypergraph, ground: PartiteGround, vertex_layers: str = "declared") -> PartiteComplex:
    return generated_complex(H, ground, strict=True, vertex_layers=vertex_layers)


def top_layer_complex(
    ground: PartiteGround, top: np.ndarray, A: Index | None = None, lower: str = "complete"
) -> PartiteComplex:
    """k-complex whose layer ``A`` (default: all parts) is ``top``; lower layers complete."""
    A = tuple(range(ground.r)) if A is None else as_index(A)
    k = len(A)
    if lower != "complete":
        return PartiteComplex.from_layers(ground, k, {A: top}, fill="closure")
    return PartiteComplex.from_layers(ground, k, {A: top}, fill="complete")


def product_density(values: Iterable[Fraction]) -> Fraction:
    out = Fraction(1)
    for v in values:
        out *= v
    return out
