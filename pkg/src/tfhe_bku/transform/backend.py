"""Polynomial-multiplication backends used by the ciphertext layer.

Both backends expose the same batched operations on uint32 torus data:
Lagrange caches for key rows, bundle construction in the Lagrange domain,
and the transform / accumulate / inverse core of the external product.
"""

from __future__ import annotations

import dataclasses
import functools

import numpy as np

from ..torus import TORUS_DTYPE, centered
from . import _kernels
from .cpfft import (
    LagrangeRep,
    TransformCounters,
    forward_raw,
    forward_transform,
    inverse_raw,
    inverse_transform,
    transform_cost,
)
from .reference import forward_complex, inverse_complex, reference_multiply, round_to_torus
from .table import DyadicTwiddleTable, build_twiddle_table


@dataclasses.dataclass(frozen=True)
class FixedPointSchedule:
    """Guard bits of the integer pipeline.

    Digit polynomials enter the forward transform at ``digit_guard``
    fractional bits, torus polynomials (key rows) at ``torus_guard``. The
    pointwise product is shifted down to ``product_scale`` bits, which the
    inverse transform carries until the final rounding to the torus grid.
    """

    digit_guard: int = 30
    torus_guard: int = 12
    product_scale: int = 2

    @property
    def pointwise_shift(self) -> int:
        return self.digit_guard + self.torus_guard - self.product_scale


GATE_SCHEDULE = FixedPointSchedule(30, 12, 2)
# more guard bits for the transform error study (inputs there are single products)
PRECISION_SCHEDULE = FixedPointSchedule(40, 20, 8)


@functools.lru_cache(maxsize=None)
def _unit_circle(N: int) -> tuple[np.ndarray, np.ndarray]:
    """cos, sin of pi*q/N for q < 2N."""
    ang = np.pi * np.arange(2 * N) / N
    c, s = np.cos(ang), np.sin(ang)
    c.setflags(write=False)
    s.setflags(write=False)
    return c, s


def _twiddles(exps: np.ndarray, M: int) -> tuple[np.ndarray, np.ndarray]:
    B, P = exps.shape
    cos_t, sin_t = _unit_circle(2 * M)
    twr = np.empty((B, P, M))
    twi = np.empty((B, P, M))
    _kernels.bundle_twiddles(np.ascontiguousarray(exps, dtype=np.int64), cos_t, sin_t, twr, twi)
    return twr, twi


def gadget_constants(N: int, k: int, bg_bits: int, l: int) -> np.ndarray:
    """(R, C) gadget matrix h: row blk*l + j holds 2**32/Bg**(j+1) in column blk."""
    h = np.zeros(((k + 1) * l, k + 1), dtype=np.int64)
    for blk in range(k + 1):
        for j in range(l):
            h[blk * l + j, blk] = 1 << (32 - bg_bits * (j + 1))
    return h


class Backend:
    """Common interface; see ``ReferenceBackend`` and ``ApproximateBackend``."""

    name = "abstract"

    @property
    def cache_key(self) -> tuple:
        raise NotImplementedError

    def lagrange_keys(self, rows: np.ndarray):
        """Lagrange cache of uint32 key rows (..., N)."""
        raise NotImplementedError

    def bundle(self, group_cache, exps: np.ndarray, hconst: np.ndarray, counters=None):
        """Bundles h + sum_p (X**-e_p - 1) K_p for a batch of exponent rows."""
        raise NotImplementedError

    def bundle_operand(self, key_cache):
        """Convert a Lagrange cache into the operand layout ``bundle`` consumes."""
        return key_cache

    def external_product_lagrange(self, digits: np.ndarray, key, counters=None) -> np.ndarray:
        """sum_r digits[b, r] * key[b, r, c] back in the coefficient domain (uint32)."""
        raise NotImplementedError

    def multiply(self, a, b) -> np.ndarray:
        """Integer polynomial times torus polynomial, rounded to uint32."""
        raise NotImplementedError


class ReferenceBackend(Backend):
    """Double-precision FFT backend (numpy)."""

    name = "reference"

    @property
    def cache_key(self) -> tuple:
        return ("reference",)

    def lagrange_keys(self, rows):
        return forward_complex(centered(rows).astype(np.float64))

    def bundle(self, group_cache, exps, hconst, counters=None):
        P, R, C, M = group_cache.shape
        exps = np.atleast_2d(exps)
        twr, twi = _twiddles(exps, M)
        out = np.empty((exps.shape[0], R, C, M), dtype=np.complex128)
        _kernels.bundle_complex(group_cache, exps, twr, twi, hconst.astype(np.float64), out)
        if counters is not None:
            counters.bundle_terms += int(np.count_nonzero(exps % (4 * M)))
        return out

    def external_product_lagrange(self, digits, key, counters=None):
        B, R, N = digits.shape
        C = key.shape[-2]
        D = forward_complex(digits.astype(np.float64))
        key = np.broadcast_to(key, (B,) + key.shape[-3:])
        acc = np.empty((B, C, N // 2), dtype=np.complex128)
        _kernels.ep_accumulate_float(D, np.ascontiguousarray(key), acc)
        if counters is not None:
            counters.forward_count += B * R
            counters.inverse_count += B * C
            counters.pointwise_multiplies += B * R * C * (N // 2)
        return round_to_torus(inverse_complex(acc))

    def multiply(self, a, b):
        return reference_multiply(a, b)


class ApproximateBackend(Backend):
    """Integer conjugate-pair FFT with dyadic lifting twiddles."""

    name = "approximate"

    def __init__(self, table: DyadicTwiddleTable, schedule: FixedPointSchedule = GATE_SCHEDULE):
        self.table = table
        self.schedule = schedule

    @classmethod
    def for_params(cls, N: int, beta: int, schedule: FixedPointSchedule = GATE_SCHEDULE) -> "ApproximateBackend":
        return cls(build_twiddle_table(N, beta), schedule)

    @property
    def beta(self) -> int:
        return self.table.beta

    @property
    def cache_key(self) -> tuple:
        return ("approximate", self.table.N, self.table.beta, dataclasses.astuple(self.schedule))

    def lagrange_keys(self, rows):
        x = centered(rows) << self.schedule.torus_guard
        return forward_raw(x, self.table)

    def bundle_operand(self, key_cache):
        # integer fixed-point values below 2**53, exact as doubles
        return (
            np.ascontiguousarray(key_cache[..., 0, :], dtype=np.float64),
            np.ascontiguousarray(key_cache[..., 1, :], dtype=np.float64),
        )

    def bundle(self, group_cache, exps, hconst, counters=None):
        keys_re, keys_im = group_cache
        P, R, C, M = keys_re.shape
        exps = np.atleast_2d(exps)
        twr, twi = _twiddles(exps, M)
        out = np.empty((exps.shape[0], R, C, 2, M), dtype=np.int64)
        h = (hconst.astype(np.float64)) * float(1 << self.schedule.torus_guard)
        _kernels.bundle_lagrange(keys_re, keys_im, exps, twr, twi, h, out)
        if counters is not None:
            counters.bundle_terms += int(np.count_nonzero(exps % (4 * M)))
        return out

    def external_product_lagrange(self, digits, key, counters=None):
        B, R, N = digits.shape
        M = N // 2
        sch = self.schedule
        D = forward_raw(digits, self.table, sch.digit_guard)
        key = np.broadcast_to(key, (B,) + key.shape[-4:])
        C = key.shape[-3]
        acc = np.empty((B, C, 2, M), dtype=np.int64)
        _kernels.ep_accumulate_fixed(D, np.ascontiguousarray(key), sch.pointwise_shift, acc)
        y = inverse_raw(acc, self.table, sch.product_scale, TORUS_DTYPE)
        if counters is not None:
            counters.forward_count += B * R
            counters.inverse_count += B * C
            counters.add_transform(transform_cost(self.table, False), B * R)
            counters.add_transform(transform_cost(self.table, True), B * C)
            counters.pointwise_multiplies += B * R * C * M
        return y

    def multiply(self, a, b):
        sch = self.schedule
        A = forward_transform(np.asarray(a, dtype=np.int64), self.table, scale=sch.digit_guard)
        Bt = forward_transform(np.asarray(b, dtype=TORUS_DTYPE), self.table, scale=sch.torus_guard)
        return inverse_transform(lagrange_pointwise_mul(A, Bt, sch.product_scale), self.table)


def lagrange_pointwise_mul(a: LagrangeRep, b: LagrangeRep, out_scale: int | None = None, counters=None) -> LagrangeRep:
    """Element-wise complex product.

    Fixed-point: exact 64x64-bit integer products, rescaled once to
    ``out_scale`` fractional bits (default: the smaller input scale).
    """
    if a.kind != b.kind:
        raise ValueError(f"representation mismatch: {a.kind} vs {b.kind}")
    if a.M != b.M:
        raise ValueError(f"size mismatch: {a.N} vs {b.N}")
    shape = np.broadcast_shapes(a.data.shape, b.data.shape)
    if counters is not None:
        counters.pointwise_multiplies += int(np.prod(shape)) // (1 if a.kind == "float" else 2)
    if a.kind == "float":
        return LagrangeRep(a.data * b.data, "float", 0)
    if out_scale is None:
        out_scale = min(a.scale, b.scale)
    shift = a.scale + b.scale - out_scale
    if shift < 0:
        raise ValueError("output scale exceeds the product scale")
    x = np.ascontiguousarray(np.broadcast_to(a.data, shape)).reshape(-1, 2, a.M)
    y = np.ascontiguousarray(np.broadcast_to(b.data, shape)).reshape(-1, 2, a.M)
    out = np.empty_like(x)
    _kernels.pointwise_fixed(x, y, shift, out)
    return LagrangeRep(out.reshape(shape), "fixed", out_scale)


def make_backend(kind: str, N: int, beta: int = 64, schedule: FixedPointSchedule = GATE_SCHEDULE) -> Backend:
    if kind == "reference":
        return ReferenceBackend()
    if kind == "approximate":
        return ApproximateBackend.for_params(N, beta, schedule)
    raise ValueError(f"unknown backend {kind!r}")
