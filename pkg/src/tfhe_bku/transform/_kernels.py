"""Compiled integer kernels.

All data are int64 fixed-point values. Every product is formed exactly in a
signed 128-bit intermediate and rounded once, ``floor((x*a + 2**(s-1)) / 2**s)``
(ties upward). Inside the butterflies ``a`` is a dyadic numerator, so the
result equals the coefficient's shift-add recipe accumulated at full width and
rounded once, i.e. ``DyadicCoefficient.apply``; the 128-bit multiply is only a
faster way to evaluate that sum on a general-purpose CPU.
"""

from __future__ import annotations

import numba as nb
import numpy as np
from llvmlite import ir
from numba import types
from numba.extending import intrinsic


@intrinsic
def _mulshr128(typingctx, x, alo, ahi, s):
    sig = types.int64(types.int64, types.uint64, types.int64, types.int64)

    def codegen(context, builder, signature, args):
        x, alo, ahi, s = args
        i128 = ir.IntType(128)
        one = ir.Constant(i128, 1)
        a = builder.or_(builder.shl(builder.sext(ahi, i128), ir.Constant(i128, 64)), builder.zext(alo, i128))
        p = builder.mul(builder.sext(x, i128), a)
        s128 = builder.zext(s, i128)
        is0 = builder.icmp_signed("==", s, ir.Constant(ir.IntType(64), 0))
        half = builder.select(is0, ir.Constant(i128, 0), builder.shl(one, builder.sub(s128, one)))
        return builder.trunc(builder.ashr(builder.add(p, half), s128), ir.IntType(64))

    return sig, codegen


@nb.njit(inline="always", cache=True)
def mulshift(x, alo, ahi, s):
    """round(x * a / 2**s) for a = ahi * 2**64 + alo (signed 65-bit), 0 <= s <= 64."""
    return _mulshr128(x, alo, ahi, s)


@nb.njit(inline="always", cache=True)
def mulshift_ss(x, y, s):
    """round(x * y / 2**s) for two int64 operands."""
    return _mulshr128(x, np.uint64(y), y >> 63, s)


@nb.njit(inline="always", cache=True)
def _half(v):
    return (v + 1) >> 1


LANES = 4  # polynomials interleaved per pass so independent lifting chains overlap


@nb.njit(inline="always", cache=True)
def _rot_lanes(re, im, q, e, c, alo, ahi, beta):
    a0l = alo[c, e, 0]
    a0h = ahi[c, e, 0]
    a1l = alo[c, e, 1]
    a1h = ahi[c, e, 1]
    a2l = alo[c, e, 2]
    a2h = ahi[c, e, 2]
    for u in range(LANES):
        x = re[q, u]
        y = im[q, u]
        x = x + mulshift(y, a0l, a0h, beta)
        y = y + mulshift(x, a1l, a1h, beta)
        x = x + mulshift(y, a2l, a2h, beta)
        re[q, u] = x
        im[q, u] = y


@nb.njit(inline="always", cache=True)
def _rot_inv_lanes(re, im, q, e, c, alo, ahi, beta):
    a0l = alo[c, e, 0]
    a0h = ahi[c, e, 0]
    a1l = alo[c, e, 1]
    a1h = ahi[c, e, 1]
    a2l = alo[c, e, 2]
    a2h = ahi[c, e, 2]
    for u in range(LANES):
        x = re[q, u]
        y = im[q, u]
        x = x - mulshift(y, a2l, a2h, beta)
        y = y - mulshift(x, a1l, a1h, beta)
        x = x - mulshift(y, a0l, a0h, beta)
        re[q, u] = x
        im[q, u] = y


@nb.njit(inline="always", cache=True)
def _times_i(re, im, q):
    for u in range(LANES):
        x = re[q, u]
        re[q, u] = -im[q, u]
        im[q, u] = x


@nb.njit(inline="always", cache=True)
def _times_minus_i(re, im, q):
    for u in range(LANES):
        x = re[q, u]
        re[q, u] = im[q, u]
        im[q, u] = -x


@nb.njit(cache=True, nogil=True)
def forward_fixed(src, out, perm, blocks, alo, ahi, beta, lag_src, lag_conj, pre_shift):
    """src (B, N) int64 -> out (B, 2, M) int64 Lagrange values (re, im).

    Inputs are multiplied by 2**pre_shift on load (guard bits).
    """
    B, N = src.shape
    M = N // 2
    re = np.empty((M, LANES), dtype=np.int64)
    im = np.empty((M, LANES), dtype=np.int64)
    for b0 in range(0, B, LANES):
        # fold + negacyclic twist, written straight into conjugate-pair order
        for q in range(M):
            k = perm[q]
            for u in range(LANES):
                bb = min(b0 + u, B - 1)
                re[q, u] = src[bb, k] << pre_shift
                im[q, u] = src[bb, k + M] << pre_shift
            if k == 0:
                continue
            if 2 * k <= M:
                _rot_lanes(re, im, q, k, 0, alo, ahi, beta)
            else:
                _rot_lanes(re, im, q, M - k, 1, alo, ahi, beta)
                _times_i(re, im, q)
        # depth-first sweep: blocks are stored in post-order
        for bi in range(blocks.shape[0]):
            base = blocks[bi, 0]
            size = blocks[bi, 1]
            if size == 2:
                for u in range(LANES):
                    xr = re[base, u]
                    xi = im[base, u]
                    yr = re[base + 1, u]
                    yi = im[base + 1, u]
                    re[base, u] = xr + yr
                    im[base, u] = xi + yi
                    re[base + 1, u] = xr - yr
                    im[base + 1, u] = xi - yi
                continue
            h = size // 4
            stride = M // size
            for k in range(h):
                i0 = base + k
                i1 = i0 + h
                i2 = i1 + h
                i3 = i2 + h
                t = k * stride
                if t == 0:
                    pass
                elif 8 * t <= M:
                    e = 4 * t
                    _rot_lanes(re, im, i2, e, 0, alo, ahi, beta)
                    _rot_lanes(re, im, i3, e, 1, alo, ahi, beta)
                else:
                    e = 4 * (M // 4 - t)
                    _rot_lanes(re, im, i2, e, 1, alo, ahi, beta)
                    _times_i(re, im, i2)
                    _rot_lanes(re, im, i3, e, 0, alo, ahi, beta)
                    _times_minus_i(re, im, i3)
                for u in range(LANES):
                    wr = re[i2, u]
                    wi = im[i2, u]
                    vr = re[i3, u]
                    vi = im[i3, u]
                    sr = wr + vr
                    si = wi + vi
                    er = wr - vr
                    ei = wi - vi
                    ar = re[i0, u]
                    ai = im[i0, u]
                    br = re[i1, u]
                    bim = im[i1, u]
                    re[i0, u] = ar + sr
                    im[i0, u] = ai + si
                    re[i2, u] = ar - sr
                    im[i2, u] = ai - si
                    re[i1, u] = br - ei
                    im[i1, u] = bim + er
                    re[i3, u] = br + ei
                    im[i3, u] = bim - er
        for u in range(LANES):
            bb = b0 + u
            if bb >= B:
                break
            for j in range(M):
                s = lag_src[j]
                out[bb, 0, j] = re[s, u]
                out[bb, 1, j] = -im[s, u] if lag_conj[j] else im[s, u]


@nb.njit(cache=True, nogil=True)
def inverse_fixed(src, out, perm, blocks, alo, ahi, beta, lag_src, lag_conj, round_shift):
    """Exact inverse of ``forward_fixed`` (rounded halvings for non-images).

    The coefficients are finally rounded by 2**-round_shift (ties upward) and
    stored with the dtype of ``out`` (int64, or uint32 for torus words).
    """
    B = src.shape[0]
    M = src.shape[2]
    re = np.empty((M, LANES), dtype=np.int64)
    im = np.empty((M, LANES), dtype=np.int64)
    rnd = (np.int64(1) << (round_shift - 1)) if round_shift > 0 else np.int64(0)
    for b0 in range(0, B, LANES):
        for j in range(M):
            s = lag_src[j]
            for u in range(LANES):
                bb = min(b0 + u, B - 1)
                re[s, u] = src[bb, 0, j]
                im[s, u] = -src[bb, 1, j] if lag_conj[j] else src[bb, 1, j]
        for bi in range(blocks.shape[0] - 1, -1, -1):
            base = blocks[bi, 0]
            size = blocks[bi, 1]
            if size == 2:
                for u in range(LANES):
                    xr = re[base, u]
                    xi = im[base, u]
                    yr = re[base + 1, u]
                    yi = im[base + 1, u]
                    re[base, u] = _half(xr + yr)
                    im[base, u] = _half(xi + yi)
                    re[base + 1, u] = _half(xr - yr)
                    im[base + 1, u] = _half(xi - yi)
                continue
            h = size // 4
            stride = M // size
            for k in range(h):
                i0 = base + k
                i1 = i0 + h
                i2 = i1 + h
                i3 = i2 + h
                for u in range(LANES):
                    p0r = re[i0, u]
                    p0i = im[i0, u]
                    p1r = re[i1, u]
                    p1i = im[i1, u]
                    p2r = re[i2, u]
                    p2i = im[i2, u]
                    p3r = re[i3, u]
                    p3i = im[i3, u]
                    re[i0, u] = _half(p0r + p2r)
                    im[i0, u] = _half(p0i + p2i)
                    sr = _half(p0r - p2r)
                    si = _half(p0i - p2i)
                    re[i1, u] = _half(p1r + p3r)
                    im[i1, u] = _half(p1i + p3i)
                    # (P1 - P3)/2 = i*D
                    er = _half(p1i - p3i)
                    ei = -_half(p1r - p3r)
                    re[i2, u] = _half(sr + er)
                    im[i2, u] = _half(si + ei)
                    re[i3, u] = _half(sr - er)
                    im[i3, u] = _half(si - ei)
                t = k * stride
                if t == 0:
                    pass
                elif 8 * t <= M:
                    e = 4 * t
                    _rot_inv_lanes(re, im, i2, e, 0, alo, ahi, beta)
                    _rot_inv_lanes(re, im, i3, e, 1, alo, ahi, beta)
                else:
                    e = 4 * (M // 4 - t)
                    _times_minus_i(re, im, i2)
                    _rot_inv_lanes(re, im, i2, e, 1, alo, ahi, beta)
                    _times_i(re, im, i3)
                    _rot_inv_lanes(re, im, i3, e, 0, alo, ahi, beta)
        for q in range(M):
            k = perm[q]
            if k != 0:
                if 2 * k <= M:
                    _rot_inv_lanes(re, im, q, k, 0, alo, ahi, beta)
                else:
                    _times_minus_i(re, im, q)
                    _rot_inv_lanes(re, im, q, M - k, 1, alo, ahi, beta)
            for u in range(LANES):
                bb = b0 + u
                if bb < B:
                    out[bb, k] = (re[q, u] + rnd) >> round_shift
                    out[bb, k + M] = (im[q, u] + rnd) >> round_shift


@nb.njit(cache=True, nogil=True)
def pointwise_fixed(a, b, shift, out):
    """out = round(a * b / 2**shift), complex, over (B, 2, M) arrays."""
    B = out.shape[0]
    M = out.shape[2]
    for i in range(B):
        for j in range(M):
            ar = a[i, 0, j]
            ai = a[i, 1, j]
            br = b[i, 0, j]
            bi = b[i, 1, j]
            out[i, 0, j] = mulshift_ss(ar, br, shift) - mulshift_ss(ai, bi, shift)
            out[i, 1, j] = mulshift_ss(ar, bi, shift) + mulshift_ss(ai, br, shift)


@nb.njit(cache=True, nogil=True)
def ep_accumulate_fixed(dig, bkb, shift, out):
    """out[b, c] = sum_r dig[b, r] * bkb[b, r, c] (complex, rescaled by 2**-shift).

    dig (B, R, 2, M), bkb (B, R, C, 2, M), out (B, C, 2, M).
    """
    B, R, C = bkb.shape[0], bkb.shape[1], bkb.shape[2]
    M = out.shape[3]
    for b in range(B):
        for c in range(C):
            ar = out[b, c, 0]
            ai = out[b, c, 1]
            ar[:] = 0
            ai[:] = 0
            for r in range(R):
                dr = dig[b, r, 0]
                di = dig[b, r, 1]
                kr = bkb[b, r, c, 0]
                ki = bkb[b, r, c, 1]
                for j in range(M):
                    ar[j] += mulshift_ss(dr[j], kr[j], shift) - mulshift_ss(di[j], ki[j], shift)
                    ai[j] += mulshift_ss(dr[j], ki[j], shift) + mulshift_ss(di[j], kr[j], shift)


@nb.njit(cache=True, nogil=True)
def ep_accumulate_float(dig, bkb, out):
    """Complex analogue of ``ep_accumulate_fixed``: dig (B, R, M), bkb (B, R, C, M)."""
    B, R, C = bkb.shape[0], bkb.shape[1], bkb.shape[2]
    for b in range(B):
        for c in range(C):
            acc = out[b, c]
            acc[:] = 0
            for r in range(R):
                acc += dig[b, r] * bkb[b, r, c]


@nb.njit(cache=True, nogil=True)
def bundle_twiddles(exps, cos_t, sin_t, twr, twi):
    """twr + i twi = w_j**(-e) - 1 for every (gate, pattern), w_j = exp(i pi (2j+1)/N).

    ``cos_t[q] + i sin_t[q] = exp(i pi q / N)``; exps (B, P), tw* (B, P, M).
    """
    B, P = exps.shape
    M = twr.shape[2]
    two_n = cos_t.shape[0]
    for b in range(B):
        for p in range(P):
            e = exps[b, p] % two_n
            step = (2 * e) % two_n
            q = (two_n - e) % two_n  # -(2j+1)e at j = 0
            for j in range(M):
                twr[b, p, j] = cos_t[q] - 1.0
                twi[b, p, j] = sin_t[q]
                q -= step
                if q < 0:
                    q += two_n


@nb.njit(cache=True, nogil=True)
def bundle_lagrange(keys_re, keys_im, exps, twr, twi, hconst, out):
    """Bootstrapping-key bundle in the Lagrange domain, rounded to int64.

    out[b, r, c] = hconst[r, c] + sum_p tw[b, p] * keys[p, r, c] with tw from
    ``bundle_twiddles``. keys_* (P, R, C, M) float64 hold integer fixed-point
    values below 2**53, so each product is one correctly rounded double
    operation; out (B, R, C, 2, M). Patterns whose exponent is 0 are skipped.
    """
    P, R, C, M = keys_re.shape
    B = exps.shape[0]
    two_n = 4 * M
    accr = np.empty(M)
    acci = np.empty(M)
    for r in range(R):
        for c in range(C):
            h = hconst[r, c]
            for b in range(B):
                accr[:] = h
                acci[:] = 0.0
                for p in range(P):
                    if exps[b, p] % two_n == 0:
                        continue
                    kr = keys_re[p, r, c]
                    ki = keys_im[p, r, c]
                    tr = twr[b, p]
                    ti = twi[b, p]
                    for j in range(M):
                        accr[j] += kr[j] * tr[j] - ki[j] * ti[j]
                        acci[j] += kr[j] * ti[j] + ki[j] * tr[j]
                o = out[b, r, c]
                for j in range(M):
                    o[0, j] = np.int64(np.floor(accr[j] + 0.5))
                    o[1, j] = np.int64(np.floor(acci[j] + 0.5))


@nb.njit(cache=True, nogil=True)
def bundle_complex(keys, exps, twr, twi, hconst, out):
    """Float reference bundle: keys (P, R, C, M) complex, out (B, R, C, M) complex."""
    P, R, C, M = keys.shape
    B = exps.shape[0]
    two_n = 4 * M
    for b in range(B):
        for r in range(R):
            for c in range(C):
                acc = out[b, r, c]
                acc[:] = hconst[r, c]
                for p in range(P):
                    if exps[b, p] % two_n == 0:
                        continue
                    for j in range(M):
                        acc[j] += keys[p, r, c, j] * complex(twr[b, p, j], twi[b, p, j])


@nb.njit(cache=True, nogil=True)
def gadget_digits(t, bg_bits, l, out):
    """Balanced base-2**bg_bits digits of uint32 words, most significant first.

    t (B, C, N) uint32 -> out (B, C*l, N) int64 with row c*l + j holding
    digit j of component c, each in (-Bg/2, Bg/2].
    """
    B, C, N = t.shape
    Bg = np.int64(1) << bg_bits
    mask = Bg - 1
    half = Bg // 2 - 1
    offset = np.int64(0)
    for j in range(l):
        offset += half << (32 - bg_bits * (j + 1))
    if bg_bits * l < 32:
        offset += np.int64(1) << (32 - bg_bits * l - 1)  # round the dropped low bits
    for b in range(B):
        for c in range(C):
            for i in range(N):
                v = (np.int64(t[b, c, i]) + offset) & np.int64(0xFFFFFFFF)
                for j in range(l):
                    sh = 32 - bg_bits * (j + 1)
                    out[b, c * l + j, i] = ((v >> sh) & mask) - half
