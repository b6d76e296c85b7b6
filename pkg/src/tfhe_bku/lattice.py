"""LWE / TRLWE / TGSW ciphertexts, the external product, extraction, key switching.

All ciphertext containers accept leading batch axes so that many gates can be
pushed through one call:

* ``LweCiphertext``: ``a`` (..., n) and ``b`` (...) uint32.
* ``TrlweCiphertext``: ``data`` (..., k+1, N); components ``0..k-1`` are the
  mask polynomials and component ``k`` is the body.
* ``TgswCiphertext``: ``rows`` (..., (k+1)*l, k+1, N); row ``blk*l + j`` is a
  TRLWE zero-encryption plus ``m / Bg**(j+1)`` in component ``blk``, so block 0
  holds the mask rows and block k the body rows.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import _lwe_kernels
from .params import ParameterSet
from .torus import TORUS_DTYPE, centered, make_rng, sample_torus_gaussian, uniform_torus
from .transform import _kernels
from .transform.backend import Backend, gadget_constants
from .transform.cpfft import TransformCounters
from .transform.reference import reference_multiply

HALF = np.uint32(1 << 31)


# --------------------------------------------------------------------- LWE


@dataclasses.dataclass(frozen=True)
class LweCiphertext:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=TORUS_DTYPE)
        b = np.asarray(self.b, dtype=TORUS_DTYPE)
        if a.shape[:-1] != b.shape:
            raise ValueError(f"mask batch shape {a.shape[:-1]} does not match body shape {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dimension(self) -> int:
        return self.a.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.b.shape

    @classmethod
    def trivial(cls, mu, n: int) -> "LweCiphertext":
        mu = np.asarray(mu, dtype=TORUS_DTYPE)
        return cls(np.zeros(mu.shape + (n,), dtype=TORUS_DTYPE), mu.copy())

    def _check(self, other: "LweCiphertext") -> None:
        if self.dimension != other.dimension:
            raise ValueError(f"dimension mismatch: {self.dimension} vs {other.dimension}")

    def __add__(self, other: "LweCiphertext") -> "LweCiphertext":
        self._check(other)
        return LweCiphertext(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "LweCiphertext") -> "LweCiphertext":
        self._check(other)
        return LweCiphertext(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "LweCiphertext":
        return LweCiphertext(np.negative(self.a), np.negative(self.b))

    def scale(self, factor: int) -> "LweCiphertext":
        f = np.uint32(factor % (1 << 32))
        return LweCiphertext(self.a * f, self.b * f)

    def add_constant(self, mu) -> "LweCiphertext":
        return LweCiphertext(self.a.copy(), self.b + np.asarray(mu, dtype=TORUS_DTYPE))

    def __getitem__(self, idx) -> "LweCiphertext":
        return LweCiphertext(self.a[idx], self.b[idx])

    @staticmethod
    def stack(items) -> "LweCiphertext":
        items = list(items)
        return LweCiphertext(np.stack([c.a for c in items]), np.stack([c.b for c in items]))


def _lwe_dot(a: np.ndarray, s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.int64)
    if a.shape[-1] != s.shape[-1]:
        raise ValueError(f"key dimension {s.shape[-1]} does not match ciphertext dimension {a.shape[-1]}")
    return (a.astype(np.int64) @ s).astype(TORUS_DTYPE)


def lwe_encrypt_torus(mu, s: np.ndarray, stddev: float, rng) -> LweCiphertext:
    """Encrypt torus word(s) ``mu``: b = a.s + e + mu."""
    rng = make_rng(rng)
    mu = np.asarray(mu, dtype=TORUS_DTYPE)
    a = uniform_torus(rng, mu.shape + (len(s),))
    e = sample_torus_gaussian(stddev, rng, mu.shape)
    b = np.atleast_1d(_lwe_dot(a, s)) + np.atleast_1d(e) + np.atleast_1d(mu)  # arrays wrap silently
    return LweCiphertext(a, b.reshape(mu.shape))


def lwe_encrypt(m, s: np.ndarray, params: ParameterSet, rng) -> LweCiphertext:
    """Encrypt bit(s) m as m/2 with the LWE noise level of ``params``."""
    m = np.asarray(m)
    if np.any((m != 0) & (m != 1)):
        raise ValueError("messages must be bits")
    return lwe_encrypt_torus(m.astype(TORUS_DTYPE) * HALF, s, params.lwe_noise_stddev, rng)


def lwe_phase(c: LweCiphertext, s: np.ndarray) -> np.ndarray:
    """b - a.s as torus words."""
    return c.b - _lwe_dot(c.a, s)


def lwe_decrypt(c: LweCiphertext, s: np.ndarray) -> np.ndarray:
    """Nearest multiple of 1/2 of the phase, as a bit (ties round up)."""
    ph = lwe_phase(c, s).astype(np.uint64)
    return (((ph + (1 << 30)) >> np.uint64(31)) & np.uint64(1)).astype(np.int64)


# ------------------------------------------------------------------- TRLWE


@dataclasses.dataclass(frozen=True)
class TrlweCiphertext:
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=TORUS_DTYPE))
        if self.data.ndim < 2:
            raise ValueError("TRLWE data needs shape (..., k+1, N)")

    @property
    def k(self) -> int:
        return self.data.shape[-2] - 1

    @property
    def N(self) -> int:
        return self.data.shape[-1]

    @property
    def mask(self) -> np.ndarray:
        return self.data[..., :-1, :]

    @property
    def body(self) -> np.ndarray:
        return self.data[..., -1, :]

    @classmethod
    def trivial(cls, mu, k: int) -> "TrlweCiphertext":
        mu = np.asarray(mu, dtype=TORUS_DTYPE)
        data = np.zeros(mu.shape[:-1] + (k + 1, mu.shape[-1]), dtype=TORUS_DTYPE)
        data[..., k, :] = mu
        return cls(data)

    def __add__(self, other: "TrlweCiphertext") -> "TrlweCiphertext":
        if self.data.shape[-2:] != other.data.shape[-2:]:
            raise ValueError("dimension mismatch")
        return TrlweCiphertext(self.data + other.data)

    def __sub__(self, other: "TrlweCiphertext") -> "TrlweCiphertext":
        if self.data.shape[-2:] != other.data.shape[-2:]:
            raise ValueError("dimension mismatch")
        return TrlweCiphertext(self.data - other.data)


def key_products(key: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """sum_c key[c] * mask[..., c, :] in T_N[X], exact (binary key polynomials)."""
    key = np.asarray(key)
    if key.shape != mask.shape[-2:]:
        raise ValueError(f"key shape {key.shape} does not match mask shape {mask.shape[-2:]}")
    return reference_multiply(key, mask).sum(axis=-2, dtype=TORUS_DTYPE)


def trlwe_encrypt(mu, key: np.ndarray, stddev: float, rng) -> TrlweCiphertext:
    """Encrypt torus polynomial(s) ``mu`` (..., N) under ring key (k, N)."""
    rng = make_rng(rng)
    mu = np.asarray(mu, dtype=TORUS_DTYPE)
    k, N = key.shape
    if mu.shape[-1] != N:
        raise ValueError(f"message degree {mu.shape[-1]} does not match key degree {N}")
    lead = mu.shape[:-1]
    data = np.empty(lead + (k + 1, N), dtype=TORUS_DTYPE)
    data[..., :k, :] = uniform_torus(rng, lead + (k, N))
    e = sample_torus_gaussian(stddev, rng, lead + (N,))
    data[..., k, :] = key_products(key, data[..., :k, :]) + e + mu
    return TrlweCiphertext(data)


def trlwe_phase(c: TrlweCiphertext, key: np.ndarray) -> np.ndarray:
    return c.body - key_products(key, c.mask)


def trlwe_decrypt(c: TrlweCiphertext, key: np.ndarray, grid: int | None = None) -> np.ndarray:
    """Phase rounded to the nearest multiple of 1/grid (default grid 2N), as words."""
    ph = trlwe_phase(c, key)
    grid = 2 * c.N if grid is None else grid
    if grid & (grid - 1):
        raise ValueError("grid must be a power of two")
    sh = 32 - (grid.bit_length() - 1)
    if sh <= 0:
        return ph
    q = (ph.astype(np.uint64) + (1 << (sh - 1))) >> np.uint64(sh)
    return (q << np.uint64(sh)).astype(TORUS_DTYPE)


# -------------------------------------------------------------------- TGSW


@dataclasses.dataclass(frozen=True, eq=False)
class TgswCiphertext:
    """Rows (..., (k+1)*l, k+1, N); Lagrange images are cached per backend."""

    rows: np.ndarray
    lagrange_cache: dict = dataclasses.field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=TORUS_DTYPE))

    @property
    def row_count(self) -> int:
        return self.rows.shape[-3]

    def lagrange(self, backend: Backend):
        key = backend.cache_key
        if key not in self.lagrange_cache:
            self.lagrange_cache[key] = backend.lagrange_keys(self.rows)
        return self.lagrange_cache[key]


def gadget_offsets(params: ParameterSet, message) -> np.ndarray:
    """message * h as uint32 rows (..., R, k+1, N); ``message`` is (..., N) integer."""
    msg = np.asarray(message, dtype=np.int64)
    h = gadget_constants(params.N, params.k, params.bg_bits, params.l)
    return (msg[..., None, None, :] * h[:, :, None]).astype(TORUS_DTYPE)


def tgsw_encrypt(message, key: np.ndarray, params: ParameterSet, rng, stddev: float | None = None) -> TgswCiphertext:
    """TGSW of an integer polynomial (..., N); a scalar means a constant polynomial."""
    msg = np.asarray(message, dtype=np.int64)
    if msg.ndim == 0:
        msg = np.zeros(params.N, dtype=np.int64) + np.where(np.arange(params.N) == 0, msg, 0)
    if msg.shape[-1] != params.N:
        raise ValueError(f"message degree {msg.shape[-1]} does not match N={params.N}")
    stddev = params.trlwe_noise_stddev if stddev is None else stddev
    R = (params.k + 1) * params.l
    zeros = np.zeros(msg.shape[:-1] + (R, params.N), dtype=TORUS_DTYPE)
    rows = trlwe_encrypt(zeros, key, stddev, rng).data + gadget_offsets(params, msg)
    return TgswCiphertext(rows)


def gadget_decompose(p, Bg: int, l: int) -> np.ndarray:  # noqa: E741
    """Balanced base-Bg digits of torus polynomial(s): (..., N) -> int64 (..., l, N).

    Digit j weighs 1/Bg**(j+1) and lies in (-Bg/2, Bg/2]; the recomposition is
    within 1/(2 Bg**l) of p per coefficient.
    """
    if Bg < 2 or Bg & (Bg - 1):
        raise ValueError("Bg must be a power of two")
    bg_bits = Bg.bit_length() - 1
    if bg_bits * l > 32:
        raise ValueError("l * log2(Bg) must not exceed 32")
    p = np.asarray(p, dtype=TORUS_DTYPE)
    lead, N = p.shape[:-1], p.shape[-1]
    flat = np.ascontiguousarray(p.reshape(-1, 1, N))
    out = np.empty((flat.shape[0], l, N), dtype=np.int64)
    _kernels.gadget_digits(flat, bg_bits, l, out)
    return out.reshape(lead + (l, N))


def decompose_trlwe(c: TrlweCiphertext, params: ParameterSet) -> np.ndarray:
    """(B, k+1, N) ciphertexts -> (B, (k+1)*l, N) digit polynomials (row c*l + j)."""
    data = np.ascontiguousarray(c.data.reshape(-1, params.k + 1, params.N))
    out = np.empty((data.shape[0], (params.k + 1) * params.l, params.N), dtype=np.int64)
    _kernels.gadget_digits(data, params.bg_bits, params.l, out)
    return out


def external_product_cached(key_lagrange, c: TrlweCiphertext, params: ParameterSet, backend: Backend, counters: TransformCounters | None = None) -> TrlweCiphertext:
    """External product against an already transformed TGSW (shared or per batch item)."""
    lead = c.data.shape[:-2]
    digits = decompose_trlwe(c, params)
    out = backend.external_product_lagrange(digits, key_lagrange, counters)
    if counters is not None:
        counters.external_products += digits.shape[0]
    return TrlweCiphertext(out.reshape(lead + (params.k + 1, params.N)))


def external_product(A: TgswCiphertext, c: TrlweCiphertext, params: ParameterSet, backend: Backend, counters: TransformCounters | None = None) -> TrlweCiphertext:
    """A ⊡ c: decrypts to message(A) * message(c).

    Per ciphertext, (k+1)*l digit polynomials go forward and k+1 results come
    back; the TGSW rows are served from their Lagrange cache.
    """
    if A.rows.shape[-3:] != ((params.k + 1) * params.l, params.k + 1, params.N):
        raise ValueError(f"TGSW shape {A.rows.shape} does not match the parameter set")
    if c.data.shape[-2:] != (params.k + 1, params.N):
        raise ValueError(f"TRLWE shape {c.data.shape} does not match the parameter set")
    return external_product_cached(A.lagrange(backend), c, params, backend, counters)


# ------------------------------------------------------ extraction, switching


def sample_extract(c: TrlweCiphertext, position: int = 0) -> LweCiphertext:
    """LWE encryption (dimension k*N, extracted key) of coefficient 0 of c's phase."""
    if position != 0:
        raise ValueError("only constant-coefficient extraction is supported")
    mask = np.ascontiguousarray(c.mask.reshape(-1, c.k, c.N))
    out = np.empty((mask.shape[0], c.k * c.N), dtype=TORUS_DTYPE)
    _lwe_kernels.extract_masks(mask, out)
    lead = c.data.shape[:-2]
    return LweCiphertext(out.reshape(lead + (c.k * c.N,)), c.body[..., 0].copy())


@dataclasses.dataclass(frozen=True, eq=False)
class KeySwitchingKey:
    """keys[i, j, v-1] encrypts v * s'_i / base**(j+1) under s; (K, t, base-1, n+1)."""

    keys: np.ndarray
    base_log: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("key switching needs at least one level")
        if self.base_log < 1 or self.base_log * self.length > 32:
            raise ValueError("need base_log >= 1 and base_log * length <= 32")
        k = np.asarray(self.keys, dtype=TORUS_DTYPE)
        if k.ndim != 4 or k.shape[1] != self.length or k.shape[2] != (1 << self.base_log) - 1:
            raise ValueError(f"key switching key shape {k.shape} inconsistent with t={self.length}, base_log={self.base_log}")
        object.__setattr__(self, "keys", k)

    @property
    def input_dimension(self) -> int:
        return self.keys.shape[0]

    @property
    def output_dimension(self) -> int:
        return self.keys.shape[3] - 1


def generate_key_switching_key(long_key: np.ndarray, short_key: np.ndarray, base_log: int, length: int, stddev: float, rng) -> KeySwitchingKey:
    if length < 1:
        raise ValueError("key switching needs at least one level")
    rng = make_rng(rng)
    K, n = len(long_key), len(short_key)
    base = 1 << base_log
    v = np.arange(1, base, dtype=np.int64)
    shifts = 32 - base_log * np.arange(1, length + 1)
    # message v * s'_i * 2**(32 - (j+1) base_log), laid out (K, t, base-1)
    msg = (np.asarray(long_key, dtype=np.int64)[:, None, None] * v[None, None, :]) << shifts[None, :, None]
    keys = np.empty((K, length, base - 1, n + 1), dtype=TORUS_DTYPE)
    a = uniform_torus(rng, (K, length, base - 1, n))
    keys[..., :n] = a
    e = sample_torus_gaussian(stddev, rng, (K, length, base - 1))
    keys[..., n] = _lwe_dot(a, short_key) + e + msg.astype(TORUS_DTYPE)
    return KeySwitchingKey(keys, base_log, length)


def key_switch(c: LweCiphertext, ks: KeySwitchingKey) -> LweCiphertext:
    if c.dimension != ks.input_dimension:
        raise ValueError(f"ciphertext dimension {c.dimension} does not match key switching key input {ks.input_dimension}")
    lead = c.batch_shape
    a = np.ascontiguousarray(c.a.reshape(-1, c.dimension))
    b = np.ascontiguousarray(c.b.reshape(-1))
    out = np.empty((a.shape[0], ks.output_dimension + 1), dtype=TORUS_DTYPE)
    _lwe_kernels.key_switch_kernel(a, b, ks.keys, ks.base_log, ks.length, out)
    out = out.reshape(lead + (ks.output_dimension + 1,))
    return LweCiphertext(out[..., :-1], out[..., -1])


def phase_error(phase, expected) -> np.ndarray:
    """Signed distance (torus units, float) between phase words and expected words."""
    return centered(np.asarray(phase, dtype=TORUS_DTYPE) - np.asarray(expected, dtype=TORUS_DTYPE)).astype(np.float64) / 2.0**32
