"""Compiled inner loops of key switching and sample extraction."""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True, nogil=True)
def key_switch_kernel(a, b, ks, base_log, t, out):
    """out[g] = (0, b[g]) - sum_{i,j} ks[i, j, digit_ij - 1] over nonzero digits.

    a (B, K) uint32 masks under the long key, b (B,) uint32, ks (K, t, base-1, n+1)
    uint32 with the body in the last column, out (B, n+1) uint32.
    """
    B, K = a.shape
    W = out.shape[1]
    mask = (np.uint32(1) << np.uint32(base_log)) - np.uint32(1)
    prec = base_log * t
    rnd = np.uint32(1) << np.uint32(32 - prec - 1) if prec < 32 else np.uint32(0)
    for g in range(B):
        o = out[g]
        for w in range(W - 1):
            o[w] = 0
        o[W - 1] = b[g]
        for i in range(K):
            v = a[g, i] + rnd
            for j in range(t):
                d = (v >> np.uint32(32 - (j + 1) * base_log)) & mask
                if d:
                    row = ks[i, j, d - 1]
                    for w in range(W):
                        o[w] -= row[w]


@nb.njit(cache=True, nogil=True)
def extract_masks(mask, out):
    """Constant-coefficient extraction: mask (B, k, N) -> out (B, k*N) uint32."""
    B, k, N = mask.shape
    for g in range(B):
        for c in range(k):
            out[g, c * N] = mask[g, c, 0]
            for i in range(1, N):
                out[g, c * N + i] = np.uint32(0) - mask[g, c, N - i]
