"""Dyadic twiddle tables and their binary file format."""

from __future__ import annotations

import dataclasses
import functools
import struct

import mpmath
import numpy as np

from .dyadic import DyadicCoefficient, csd_digits, lifting_coefficients

TABLE_MAGIC = b"DYTW"
TABLE_VERSION = 1
_HEADER = struct.Struct("<4sHHIII")


@dataclasses.dataclass(frozen=True, eq=False)
class DyadicTwiddleTable:
    """Lifting triples for the angles pi*k/N, k = 0 .. N/4.

    Every rotation the transform needs reduces to one of these angles (or its
    negation) up to a free multiplication by +-i: the negacyclic twist uses
    exp(i*pi*k/N) for k < N/2 and the size-N/2 conjugate-pair FFT uses
    exp(2*pi*i*t/(N/2)) = exp(i*pi*(4t)/N) for t < N/8. Entry k is read once
    per radix-4 butterfly and shared by its two rotations (by +theta and -theta).
    """

    ring_degree: int
    beta: int
    entries: tuple[tuple[DyadicCoefficient, DyadicCoefficient, DyadicCoefficient], ...]

    def __post_init__(self):
        # alpha as a signed 65-bit (hi:lo) pair, plane 0 as stored, plane 1 negated
        lo = np.zeros((2, len(self.entries), 3), dtype=np.uint64)
        hi = np.zeros((2, len(self.entries), 3), dtype=np.int64)
        for i, triple in enumerate(self.entries):
            for j, c in enumerate(triple):
                for plane, a in enumerate((c.alpha, -c.alpha)):
                    lo[plane, i, j] = a & 0xFFFFFFFFFFFFFFFF
                    hi[plane, i, j] = -1 if a < 0 else 0
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "alpha_lo", lo)
        object.__setattr__(self, "alpha_hi", hi)

    @property
    def N(self) -> int:
        return self.ring_degree

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyadicTwiddleTable):
            return NotImplemented
        return (self.ring_degree, self.beta, self.alphas()) == (other.ring_degree, other.beta, other.alphas())

    def __hash__(self) -> int:
        return hash((self.ring_degree, self.beta))

    def alphas(self) -> tuple[tuple[int, int, int], ...]:
        return tuple(tuple(c.alpha for c in t) for t in self.entries)

    def root(self, k: int, conjugate: bool = False):
        """cos + i sin (as mpmath.mpc) realised by the quantized triple of entry k."""
        with mpmath.workdps(60):
            p1, u, p2 = (mpmath.mpf(c.alpha) / mpmath.mpf(2) ** self.beta for c in self.entries[k])
            return mpmath.mpc(1 + p2 * u, -u if conjugate else u)

    def to_bytes(self) -> bytes:
        out = bytearray(_HEADER.pack(TABLE_MAGIC, TABLE_VERSION, 3, self.ring_degree, self.beta, len(self)))
        for triple in self.entries:
            for c in triple:
                out += c.alpha.to_bytes(16, "little", signed=True)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "DyadicTwiddleTable":
        if len(data) < _HEADER.size:
            raise ValueError("truncated twiddle table")
        magic, version, width, N, beta, count = _HEADER.unpack_from(data)
        if magic != TABLE_MAGIC:
            raise ValueError("not a twiddle table (bad magic)")
        if version != TABLE_VERSION or width != 3:
            raise ValueError(f"unsupported twiddle table version {version}")
        if len(data) != _HEADER.size + count * 3 * 16:
            raise ValueError("twiddle table length does not match header")
        entries = []
        off = _HEADER.size
        for _ in range(count):
            triple = []
            for _ in range(3):
                a = int.from_bytes(data[off : off + 16], "little", signed=True)
                off += 16
                triple.append(DyadicCoefficient(a, beta, tuple((beta - e, s) for e, s in csd_digits(a))))
            entries.append(tuple(triple))
        return cls(N, beta, tuple(entries))

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "DyadicTwiddleTable":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@functools.lru_cache(maxsize=32)
def build_twiddle_table(N: int, beta: int) -> DyadicTwiddleTable:
    if N < 4 or N & (N - 1):
        raise ValueError(f"N must be a power of two >= 4, got {N}")
    entries = []
    with mpmath.workdps(60):
        for k in range(N // 4 + 1):
            entries.append(lifting_coefficients(mpmath.pi * k / N, beta))
    return DyadicTwiddleTable(N, beta, tuple(entries))
