"""Relative error of transform-based products against the schoolbook oracle."""

from __future__ import annotations

import numpy as np

from ..torus import centered, make_rng, schoolbook_negacyclic_mul
from .backend import PRECISION_SCHEDULE, FixedPointSchedule, lagrange_pointwise_mul
from .cpfft import forward_transform, inverse_transform
from .reference import forward_complex, inverse_complex
from .table import build_twiddle_table

DEFAULT_BETAS = (16, 24, 32, 38, 48, 64)


def _random_operands(rng, trials: int, N: int, digit_bound: int):
    a = rng.integers(-digit_bound + 1, digit_bound + 1, size=(trials, N), dtype=np.int64)
    b = rng.integers(0, 1 << 32, size=(trials, N), dtype=np.uint32)
    return a, b


def _db(diff: np.ndarray, exact: np.ndarray) -> np.ndarray:
    num = np.sqrt(np.mean(diff.astype(np.float64) ** 2, axis=-1))
    den = np.sqrt(np.mean(exact.astype(np.float64) ** 2, axis=-1))
    return 20.0 * np.log10(np.maximum(num, 1e-300) / den)


def product_errors_db(
    beta: int | None,
    trials: int = 32,
    N: int = 1024,
    seed=0,
    schedule: FixedPointSchedule = PRECISION_SCHEDULE,
    digit_bound: int = 512,
) -> np.ndarray:
    """Per-trial dB error of one negacyclic product (``beta=None``: float reference).

    Operands are a digit-range integer polynomial (|a| <= ``digit_bound``)
    and a uniform torus polynomial. The error is taken on the unrounded
    transform output, so sub-grid accuracy is visible: the difference to the
    exact product is reduced modulo 1 (the torus) and compared with the RMS
    of the exact product.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(seed)
    a, b = _random_operands(rng, trials, N, digit_bound)
    exact = centered(schoolbook_negacyclic_mul(a, b))
    if beta is None:
        v = inverse_complex(forward_complex(a.astype(np.float64)) * forward_complex(centered(b).astype(np.float64)))
        diff = np.mod(v - exact + 2.0**31, 2.0**32) - 2.0**31
        return _db(diff, exact)
    table = build_twiddle_table(N, beta)
    A = forward_transform(a, table, scale=schedule.digit_guard)
    Bt = forward_transform(b, table, scale=schedule.torus_guard)
    s = schedule.product_scale
    v = inverse_transform(lagrange_pointwise_mul(A, Bt, s), table, exact=True)
    mod = 1 << (32 + s)
    d = (v - (exact << s)) % mod  # numpy int64: result in [0, mod)
    d = np.where(d >= mod // 2, d - mod, d)
    return _db(d.astype(np.float64) / (1 << s), exact)


def measure_error_db(beta: int | None, trials: int = 32, N: int = 1024, seed=0, schedule: FixedPointSchedule = PRECISION_SCHEDULE) -> float:
    """Mean over trials of 20*log10(rms(approx - exact) / rms(exact)), in dB."""
    return float(np.mean(product_errors_db(beta, trials, N, seed, schedule)))
