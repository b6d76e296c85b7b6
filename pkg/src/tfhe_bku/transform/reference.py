"""Double-precision reference transforms (oracle and baseline).

Same Lagrange convention as the integer transform: slot j holds the value at
exp(i pi (2j+1)/N). Built on numpy's FFT: fold, twist, a length-N/2 DFT with
positive exponent, then the shared reorder.
"""

from __future__ import annotations

import functools

import numpy as np

from ..torus import TORUS_DTYPE, centered
from .cpfft import LagrangeRep, TransformCounters, lagrange_order


@functools.lru_cache(maxsize=None)
def _twist(N: int) -> np.ndarray:
    t = np.exp(1j * np.pi * np.arange(N // 2) / N)
    t.setflags(write=False)
    return t


def _as_real(p) -> np.ndarray:
    p = np.asarray(p)
    if p.dtype == TORUS_DTYPE:
        return centered(p).astype(np.float64)
    return p.astype(np.float64)


def forward_complex(x: np.ndarray) -> np.ndarray:
    """Real (..., N) -> complex (..., N/2) Lagrange values."""
    N = x.shape[-1]
    M = N // 2
    z = (x[..., :M] + 1j * x[..., M:]) * _twist(N)
    X = np.fft.ifft(z, axis=-1) * M
    src, conj = lagrange_order(N)
    out = X[..., src]
    out[..., conj] = np.conj(out[..., conj])
    return out


def inverse_complex(v: np.ndarray) -> np.ndarray:
    """Complex (..., N/2) Lagrange values -> real (..., N), unrounded."""
    M = v.shape[-1]
    N = 2 * M
    src, conj = lagrange_order(N)
    X = np.empty_like(v)
    X[..., src] = np.where(conj, np.conj(v), v)
    z = np.fft.fft(X, axis=-1) / M
    z = z * np.conj(_twist(N))
    return np.concatenate([z.real, z.imag], axis=-1)


def round_to_torus(x: np.ndarray) -> np.ndarray:
    """Nearest integer, reduced to uint32 words."""
    return np.floor(x + 0.5).astype(np.int64).astype(TORUS_DTYPE)


def reference_forward(p, counters: TransformCounters | None = None) -> LagrangeRep:
    x = _as_real(p)
    if counters is not None:
        counters.forward_count += int(np.prod(x.shape[:-1], dtype=np.int64))
    return LagrangeRep(forward_complex(x), "float", 0)


def reference_inverse(rep: LagrangeRep, counters: TransformCounters | None = None, exact: bool = False) -> np.ndarray:
    """Back to coefficients; rounded to torus words unless ``exact``."""
    if rep.kind != "float":
        raise ValueError("reference_inverse needs a float representation")
    y = inverse_complex(rep.data)
    if counters is not None:
        counters.inverse_count += int(np.prod(rep.data.shape[:-1], dtype=np.int64))
    return y if exact else round_to_torus(y)


_SPLIT = 16


def reference_multiply(a, b) -> np.ndarray:
    """Integer polynomial times torus polynomial, bit-exact mod 2**32.

    The torus operand is split into 16-bit halves so every double-precision
    product stays far inside the 53-bit mantissa (exact after rounding for
    integer operands up to about 2**24 in magnitude at N = 1024).
    """
    a = np.asarray(a, dtype=np.float64)
    bc = centered(b)
    hi = (bc + (1 << (_SPLIT - 1))) >> _SPLIT
    lo = bc - (hi << _SPLIT)
    A = forward_complex(a)
    ph = inverse_complex(A * forward_complex(hi.astype(np.float64)))
    pl = inverse_complex(A * forward_complex(lo.astype(np.float64)))
    whole = (np.floor(ph + 0.5).astype(np.int64) << _SPLIT) + np.floor(pl + 0.5).astype(np.int64)
    return whole.astype(TORUS_DTYPE)
