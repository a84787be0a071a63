from __future__ import annotations

import os
from fractions import Fraction
from typing import Iterable

import numpy as np

DEFAULT_BUDGET = 10**9
BUDGET_ENV = "HYPERQR_BUDGET"


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    value = int(raw)
    if value <= 0:
        raise ValueError(f"{BUDGET_ENV} must be positive, got {raw!r}")
    return value


def rng_stream(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed`` and a stream id.

    Draws for one stream never depend on how many other streams exist,
    so parallel consumers stay reproducible.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def popcount(x: int) -> int:
    return bin(x).count("1")


def bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(items: Iterable[int]) -> int:
    m = 0
    for v in items:
        m |= 1 << v
    return m


def to_fraction_array(a: np.ndarray) -> np.ndarray:
    out = np.empty(a.shape, dtype=object)
    flat = a.reshape(-1)
    out.reshape(-1)[:] = [Fraction(x) for x in flat.tolist()]
    return out


def fraction_json(x: Fraction) -> dict:
    return {"num": str(x.numerator), "den": str(x.denominator)}


_EINSUM_MAX_OPERANDS = 48


def contract(subs: list[str], operands: list[np.ndarray]):
    """Full sum of the product of factors, ``subs[j]`` naming the axes of ``operands[j]``.

    Small contractions go straight to ``np.einsum``; larger ones (numpy caps the
    operand count) use bucket elimination with a min-scope variable order.
    """
    if len(operands) <= _EINSUM_MAX_OPERANDS:
        return np.einsum(",".join(subs) + "->", *operands, optimize="greedy")
    factors = [(s, a) for s, a in zip(subs, operands)]
    size = {}
    for s, a in factors:
        for c, d in zip(s, a.shape):
            size[c] = d
    scalar = None
    while factors:
        live = {c for s, _ in factors for c in s}
        if not live:
            for _, a in factors:
                scalar = a if scalar is None else scalar * a
            break

        def scope(c):
            return set().union(*(set(s) for s, _ in factors if c in s))

        v = min(sorted(live), key=lambda c: len(scope(c)))
        bucket = [(s, a) for s, a in factors if v in s]
        factors = [(s, a) for s, a in factors if v not in s]
        # fold the bucket in small einsum groups
        acc_s, acc = bucket[0]
        for s, a in bucket[1:]:
            out = "".join(sorted(set(acc_s) | set(s)))
            acc = np.einsum(f"{acc_s},{s}->{out}", acc, a)
            acc_s = out
        out = acc_s.replace(v, "")
        factors.append((out, np.einsum(f"{acc_s}->{out}", acc)))
    return scalar
