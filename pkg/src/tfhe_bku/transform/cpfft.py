"""Depth-first conjugate-pair FFT over lifting butterflies.

Stage ordering (forward, coefficient -> Lagrange):

1. fold + twist: ``z_k = (p_k + i p_{k+M}) * exp(i pi k / N)`` for k < M = N/2,
   each product a lifting rotation. The fold sends the real length-N
   negacyclic input to M complex points.
2. a size-M conjugate-pair split-radix DFT with positive exponent,
   ``X_t = sum_k z_k exp(2 pi i k t / M) = P(exp(i pi (4t + 1) / N))``.
   Blocks are stored in input-permuted order ``[even half | x_{4n+1} | x_{4n-1}]``
   and swept in post-order, so every sub-transform finishes before its parent
   starts (depth first). Size-2 blocks are the radix-2 cleanup.
3. reorder into Lagrange order: index j holds ``P(exp(i pi (2j + 1) / N))``.
   Even j come from ``X_{j/2}``, odd j from ``conj(X_{(N-1-j)/2})``.

The inverse runs the same blocks in reverse, halving (with rounding) at each
butterfly, so the 1/M normalisation is spread across the stages and the round
trip is exact for every image of the forward map.
"""

from __future__ import annotations

import dataclasses
import functools

import numpy as np

from . import _kernels
from .table import DyadicTwiddleTable, build_twiddle_table


@functools.lru_cache(maxsize=None)
def conjugate_pair_schedule(M: int) -> tuple[np.ndarray, np.ndarray]:
    """(perm, blocks) for a size-M transform.

    ``perm[q]`` is the input index stored at position q; ``blocks`` lists
    (base, size) pairs in post-order.
    """
    if M < 1 or M & (M - 1):
        raise ValueError(f"transform size must be a power of two, got {M}")
    blocks: list[tuple[int, int]] = []

    def build(idx: list[int], base: int) -> list[int]:
        s = len(idx)
        if s == 1:
            return idx
        if s == 2:
            blocks.append((base, 2))
            return idx
        even = build(idx[0::2], base)
        z1 = build([idx[(4 * n + 1) % s] for n in range(s // 4)], base + s // 2)
        z3 = build([idx[(4 * n - 1) % s] for n in range(s // 4)], base + 3 * s // 4)
        blocks.append((base, s))
        return even + z1 + z3

    perm = np.array(build(list(range(M)), 0), dtype=np.int64)
    b = np.array(blocks, dtype=np.int64).reshape(-1, 2)
    perm.setflags(write=False)
    b.setflags(write=False)
    return perm, b


@functools.lru_cache(maxsize=None)
def lagrange_order(N: int) -> tuple[np.ndarray, np.ndarray]:
    """(src, conj): Lagrange slot j reads DFT output ``src[j]``, conjugated if ``conj[j]``."""
    M = N // 2
    j = np.arange(M)
    odd = (j & 1).astype(bool)
    src = np.where(odd, (N - 1 - j) // 2, j // 2).astype(np.int64)
    src.setflags(write=False)
    odd.setflags(write=False)
    return src, odd


@dataclasses.dataclass(frozen=True)
class LagrangeRep:
    """N/2 evaluations at exp(i pi (2j+1)/N).

    ``kind == "fixed"``: int64 array (..., 2, N/2) holding (re, im) at
    ``scale`` fractional bits. ``kind == "float"``: complex128 (..., N/2).
    """

    data: np.ndarray
    kind: str
    scale: int = 0

    @property
    def M(self) -> int:
        return self.data.shape[-1]

    @property
    def N(self) -> int:
        return 2 * self.data.shape[-1]

    def to_complex(self) -> np.ndarray:
        if self.kind == "float":
            return self.data
        return (self.data[..., 0, :] + 1j * self.data[..., 1, :].astype(np.float64)) / 2.0**self.scale


_COUNTER_FIELDS = (
    "forward_count",
    "inverse_count",
    "butterfly_count",
    "radix4_butterflies",
    "add_count",
    "shift_count",
    "butterfly_multiplies",
    "twiddle_reads",
    "pointwise_multiplies",
    "external_products",
    "bundle_terms",
    "bootstraps",
    "key_switches",
)


@dataclasses.dataclass
class TransformCounters:
    """Operation tallies; per worker, combined with ``merge``."""

    forward_count: int = 0
    inverse_count: int = 0
    butterfly_count: int = 0
    radix4_butterflies: int = 0
    add_count: int = 0
    shift_count: int = 0
    butterfly_multiplies: int = 0
    twiddle_reads: int = 0
    pointwise_multiplies: int = 0
    external_products: int = 0
    bundle_terms: int = 0
    bootstraps: int = 0
    key_switches: int = 0

    def reset(self) -> None:
        for f in _COUNTER_FIELDS:
            setattr(self, f, 0)

    def merge(self, other: "TransformCounters") -> "TransformCounters":
        for f in _COUNTER_FIELDS:
            setattr(self, f, getattr(self, f) + getattr(other, f))
        return self

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)

    def add_transform(self, cost: "TransformCost", count: int) -> None:
        if count <= 0:
            return
        self.butterfly_count += cost.butterflies * count
        self.radix4_butterflies += cost.radix4 * count
        self.add_count += cost.adds * count
        self.shift_count += cost.shifts * count
        self.twiddle_reads += cost.twiddle_reads * count


@dataclasses.dataclass(frozen=True)
class TransformCost:
    """Static operation counts of one transform under a given table.

    Counting model: a dyadic coefficient with r signed digits costs r shifts
    of the operand, r - 1 adds to combine them, one add for the rounding
    offset, one final shift and one add into the other lane. Butterfly adds
    are real-lane adds (12 per radix-4, 4 per radix-2); the inverse adds one
    rounding add and one shift per halving.
    """

    butterflies: int
    radix4: int
    adds: int
    shifts: int
    twiddle_reads: int
    twist_reads: int


def _rotation_cost(table: DyadicTwiddleTable) -> np.ndarray:
    """Per-entry (adds, shifts) of one lifting rotation."""
    cost = np.zeros((len(table), 2), dtype=np.int64)
    for e, triple in enumerate(table.entries):
        for c in triple:
            r = len(c.shift_recipe)
            if r:
                cost[e, 0] += r + 1
                cost[e, 1] += r + 1
    return cost


@functools.lru_cache(maxsize=64)
def transform_cost(table: DyadicTwiddleTable, inverse: bool = False) -> TransformCost:
    N = table.N
    M = N // 2
    rc = _rotation_cost(table)
    adds = shifts = 0
    reads = twist = 0
    for k in range(1, M):
        e = k if 2 * k <= M else M - k
        adds += rc[e, 0]
        shifts += rc[e, 1]
        twist += 1
    _, blocks = conjugate_pair_schedule(M)
    bfly = r4 = 0
    for base, size in blocks:
        if size == 2:
            bfly += 1
            adds += 8 if inverse else 4
            shifts += 4 if inverse else 0
            continue
        stride = M // size
        for k in range(size // 4):
            bfly += 1
            r4 += 1
            t = k * stride
            if t:
                e = 4 * t if 8 * t <= M else 4 * (M // 4 - t)
                adds += 2 * rc[e, 0]
                shifts += 2 * rc[e, 1]
                reads += 1
            adds += 24 if inverse else 12
            shifts += 12 if inverse else 0
    return TransformCost(bfly, r4, int(adds), int(shifts), reads, twist)


def _table_for(N: int, table) -> DyadicTwiddleTable:
    if table is None:
        return build_twiddle_table(N, 64)
    if table.N != N:
        raise ValueError(f"table built for N={table.N}, input has N={N}")
    return table


def forward_raw(x: np.ndarray, table: DyadicTwiddleTable, pre_shift: int = 0) -> np.ndarray:
    """int64 (..., N) * 2**pre_shift -> int64 (..., 2, N/2); no counters."""
    x = np.asarray(x, dtype=np.int64)
    N = x.shape[-1]
    table = _table_for(N, table)
    M = N // 2
    lead = x.shape[:-1]
    src = np.ascontiguousarray(x.reshape(-1, N))
    out = np.empty((src.shape[0], 2, M), dtype=np.int64)
    perm, blocks = conjugate_pair_schedule(M)
    lag_src, lag_conj = lagrange_order(N)
    _kernels.forward_fixed(src, out, perm, blocks, table.alpha_lo, table.alpha_hi, table.beta, lag_src, lag_conj, pre_shift)
    return out.reshape(lead + (2, M))


def inverse_raw(v: np.ndarray, table: DyadicTwiddleTable, round_shift: int = 0, dtype=np.int64) -> np.ndarray:
    """int64 (..., 2, N/2) -> (..., N); exact inverse of ``forward_raw`` on its image.

    With ``round_shift`` the result is rounded by 2**-round_shift; ``dtype``
    uint32 wraps it to torus words.
    """
    v = np.asarray(v, dtype=np.int64)
    M = v.shape[-1]
    N = 2 * M
    table = _table_for(N, table)
    lead = v.shape[:-2]
    src = np.ascontiguousarray(v.reshape(-1, 2, M))
    out = np.empty((src.shape[0], N), dtype=dtype)
    perm, blocks = conjugate_pair_schedule(M)
    lag_src, lag_conj = lagrange_order(N)
    _kernels.inverse_fixed(src, out, perm, blocks, table.alpha_lo, table.alpha_hi, table.beta, lag_src, lag_conj, round_shift)
    return out.reshape(lead + (N,))


def _batch(shape) -> int:
    return int(np.prod(shape, dtype=np.int64)) if shape else 1


def forward_transform(p, table: DyadicTwiddleTable | None = None, counters: TransformCounters | None = None, scale: int = 0) -> LagrangeRep:
    """Integer or torus polynomial(s) to the fixed-point Lagrange representation.

    uint32 input is read as centred torus words; integer input as is. The
    input is lifted by ``2**scale`` guard bits before the first stage.
    """
    p = np.asarray(p)
    if p.dtype == np.uint32:
        x = p.view(np.int32).astype(np.int64)
    else:
        x = p.astype(np.int64)
    N = x.shape[-1]
    table = _table_for(N, table)
    if scale:
        x = x << scale
    out = forward_raw(x, table)
    if counters is not None:
        n = _batch(x.shape[:-1])
        counters.forward_count += n
        counters.add_transform(transform_cost(table, False), n)
    return LagrangeRep(out, "fixed", scale)


def inverse_transform(rep: LagrangeRep, table: DyadicTwiddleTable | None = None, counters: TransformCounters | None = None, exact: bool = False) -> np.ndarray:
    """Fixed-point Lagrange values back to coefficients.

    The result is rounded from ``rep.scale`` fractional bits to the torus grid
    and wrapped to uint32. ``exact=True`` instead returns the unrounded int64
    coefficients (still at ``rep.scale``).
    """
    if rep.kind != "fixed":
        raise ValueError("inverse_transform needs a fixed-point representation")
    table = _table_for(rep.N, table)
    y = inverse_raw(rep.data, table)
    if counters is not None:
        n = _batch(rep.data.shape[:-2])
        counters.inverse_count += n
        counters.add_transform(transform_cost(table, True), n)
    if exact:
        return y
    s = rep.scale
    if s:
        y = (y + (1 << (s - 1))) >> s
    return y.astype(np.uint32)
