"""Torus arithmetic on 32-bit words, randomness, and the schoolbook oracle.

A torus element ``x`` in R/Z is stored as the uint32 word ``round(x * 2**32)``;
every add/sub/integer-scale wraps modulo 2**32, which is the mod-1 of the torus.
Torus polynomials are uint32 arrays whose last axis has length N (coefficient
j multiplies X**j in T[X]/(X**N + 1)). Leading axes are batch axes.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .params import ParameterSet

TORUS_BITS = 32
TORUS_DTYPE = np.uint32
_MOD = 1 << TORUS_BITS


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; ``seed`` may be an int or SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def spawn_rngs(seed, count: int) -> list[np.random.Generator]:
    """Independent child streams for parallel workers."""
    if isinstance(seed, np.random.Generator):
        seqs = seed.bit_generator.seed_seq.spawn(count)
    else:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        seqs = ss.spawn(count)
    return [make_rng(s) for s in seqs]


def to_torus(x) -> np.ndarray:
    """Real number(s) to the nearest 2**-32 grid point (mod 1)."""
    v = np.round(np.asarray(x, dtype=np.float64) * _MOD)
    return np.mod(v, _MOD).astype(np.uint64).astype(TORUS_DTYPE)


def from_torus(t) -> np.ndarray:
    """Torus words to reals in [-1/2, 1/2)."""
    return centered(t).astype(np.float64) / _MOD


def centered(t) -> np.ndarray:
    """Torus words as signed int64 in [-2**31, 2**31)."""
    return np.asarray(t).astype(TORUS_DTYPE).view(np.int32).astype(np.int64)


def wrap(x) -> np.ndarray:
    """Any integer array reduced to torus words."""
    return np.asarray(x).astype(np.int64, copy=False).astype(TORUS_DTYPE)


def torus_linear(a: np.ndarray, b: np.ndarray, op: str = "add") -> np.ndarray:
    a = np.asarray(a, dtype=TORUS_DTYPE)
    b = np.asarray(b, dtype=TORUS_DTYPE)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"degree mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    raise ValueError(f"unknown op {op!r}")


def schoolbook_negacyclic_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact product of an integer polynomial and a torus polynomial mod X**N + 1.

    O(N**2); the oracle every transform-based multiply is checked against.
    Arithmetic is done in wrapping uint64, which is exact modulo 2**32.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    N = a.shape[-1]
    if b.shape[-1] != N:
        raise ValueError(f"degree mismatch: {N} vs {b.shape[-1]}")
    au = a.astype(np.int64).astype(np.uint64)
    bu = b.astype(np.uint64)
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = np.zeros(shape, dtype=np.uint64)
    for i in range(N):
        ai = au[..., i : i + 1]
        out[..., i:] += ai * bu[..., : N - i]
        if i:
            out[..., :i] -= ai * bu[..., N - i :]
    return out.astype(TORUS_DTYPE)


def monomial_mul(p: np.ndarray, e, N: int | None = None) -> np.ndarray:
    """X**e * p in the negacyclic ring, for integer e (any sign, per-batch allowed)."""
    p = np.asarray(p)
    N = p.shape[-1] if N is None else N
    e = np.mod(np.asarray(e, dtype=np.int64), 2 * N)
    idx = np.arange(N)
    # coefficient j of the result comes from j - e (mod 2N), sign flips past N
    src = np.mod(idx - e[..., None], 2 * N)
    neg = src >= N
    src = np.where(neg, src - N, src)
    if src.ndim < p.ndim:
        src = src.reshape((1,) * (p.ndim - src.ndim) + src.shape)
        neg = neg.reshape(src.shape)
    vals = np.take_along_axis(np.broadcast_to(p, np.broadcast_shapes(p.shape, src.shape)), src, axis=-1)
    if p.dtype == TORUS_DTYPE:
        return np.where(neg, (-vals.astype(np.int64)).astype(np.uint64).astype(TORUS_DTYPE), vals)
    return np.where(neg, -vals, vals)


def round_to_2N(x, N: int) -> np.ndarray:
    """Nearest integer to 2N*x (ties upward), reduced mod 2N."""
    two_n = 2 * N
    s = TORUS_BITS - (two_n.bit_length() - 1)
    xu = np.asarray(x, dtype=TORUS_DTYPE).astype(np.uint64)
    return (((xu + (1 << (s - 1))) >> np.uint64(s)) % np.uint64(two_n)).astype(np.int64)


def uniform_torus(rng: np.random.Generator, size) -> np.ndarray:
    return rng.integers(0, _MOD, size=size, dtype=TORUS_DTYPE)


def sample_torus_gaussian(stddev: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Centered Gaussian on the torus, rounded to the 2**-32 grid."""
    if stddev < 0:
        raise ValueError("stddev must be non-negative")
    if stddev == 0:
        return np.zeros(() if size is None else size, dtype=TORUS_DTYPE)
    return to_torus(rng.normal(0.0, stddev, size=size))


@dataclasses.dataclass(frozen=True)
class SecretKeys:
    lwe: np.ndarray  # (n,) bits
    trlwe: np.ndarray  # (k, N) bits

    @property
    def extracted(self) -> np.ndarray:
        """KeyExtract: the k ring keys flattened to an (N*k,) LWE key."""
        return self.trlwe.reshape(-1)


def sample_secret_keys(params: ParameterSet, rng_seed) -> SecretKeys:
    rng = make_rng(rng_seed)
    lwe = rng.integers(0, 2, size=params.n, dtype=np.int32)
    trlwe = rng.integers(0, 2, size=(params.k, params.N), dtype=np.int32)
    return SecretKeys(lwe=lwe, trlwe=trlwe)
