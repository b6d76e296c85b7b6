"""Gate bootstrapping with m-way unrolled bootstrapping keys.

For a group of m secret bits the key set stores one TGSW per nonzero bit
pattern p (bit j of p selects position j of the group)::

    K_p = TGSW( prod_{j in p} s_j * prod_{j not in p} (1 - s_j) )

Exactly one pattern indicator (possibly the unstored all-zero one) is 1, so

    BKB = h + sum_p (X**-e_p - 1) K_p,   e_p = sum_{j in p} abar_j

encrypts X**-(sum_j abar_j s_j) and one external product per group advances
the blind rotation by m mask coefficients.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import enum

import numpy as np

from .lattice import (
    KeySwitchingKey,
    LweCiphertext,
    TgswCiphertext,
    TrlweCiphertext,
    decompose_trlwe,
    generate_key_switching_key,
    gadget_offsets,
    key_switch,
    lwe_encrypt_torus,
    lwe_phase,
    sample_extract,
    trlwe_encrypt,
)
from .params import MAX_UNROLL, ParameterSet
from .torus import TORUS_DTYPE, SecretKeys, centered, make_rng, monomial_mul, round_to_2N, spawn_rngs
from .transform.backend import Backend, gadget_constants
from .transform.cpfft import TransformCounters

GATE_MU = np.uint32(1 << 29)  # 1/8
GATE_MU_NEG = np.uint32((1 << 32) - (1 << 29))  # -1/8
_CACHE_CHUNK = 16
_BATCH_CHUNK = 128


class GateKind(enum.Enum):
    NAND = "NAND"
    AND = "AND"
    OR = "OR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"

    @property
    def arity(self) -> int:
        return 1 if self is GateKind.NOT else 2

    @classmethod
    def parse(cls, name: str) -> "GateKind":
        try:
            return cls(name.strip().upper())
        except ValueError:
            raise ValueError(f"unknown gate kind {name!r}") from None

    def plain(self, x: int, y: int = 0) -> int:
        x, y = int(x), int(y)
        return {
            GateKind.NAND: 1 - (x & y),
            GateKind.AND: x & y,
            GateKind.OR: x | y,
            GateKind.XOR: x ^ y,
            GateKind.XNOR: 1 - (x ^ y),
            GateKind.NOT: 1 - x,
        }[self]


# ------------------------------------------------------------- key material


def pattern_count(m: int) -> int:
    return (1 << m) - 1


def pattern_indicators(bits) -> np.ndarray:
    """Indicator of every nonzero pattern p = 1 .. 2**m - 1 for the group bits."""
    bits = np.asarray(bits, dtype=np.int64)
    m = bits.shape[-1]
    p = np.arange(1, 1 << m)
    sel = (p[:, None] >> np.arange(m)) & 1  # (P, m)
    match = np.where(sel == 1, bits[..., None, :], 1 - bits[..., None, :])
    return match.prod(axis=-1)


def pattern_exponents(abar: np.ndarray, m: int, N: int) -> np.ndarray:
    """(B, n) rounded mask -> (B, G, P) exponents e_p = sum_{j in p} abar_j mod 2N."""
    abar = np.atleast_2d(np.asarray(abar, dtype=np.int64))
    B, n = abar.shape
    G = -(-n // m)
    pad = np.zeros((B, G * m), dtype=np.int64)
    pad[:, :n] = abar
    grouped = pad.reshape(B, G, m)
    p = np.arange(1, 1 << m)
    sel = ((p[:, None] >> np.arange(m)) & 1).astype(np.int64)  # (P, m)
    return (grouped @ sel.T) % (2 * N)


@dataclasses.dataclass(frozen=True, eq=False)
class BootstrapKeyBundleSet:
    """TGSW rows of every pattern key, shape (G, 2**m - 1, (k+1)*l, k+1, N)."""

    unroll_factor: int
    lwe_dimension: int
    keys: np.ndarray

    def __post_init__(self):
        m = self.unroll_factor
        if not 1 <= m <= MAX_UNROLL:
            raise ValueError(f"unroll factor must lie in [1, {MAX_UNROLL}]")
        keys = np.asarray(self.keys, dtype=TORUS_DTYPE)
        G = -(-self.lwe_dimension // m)
        if keys.ndim != 5 or keys.shape[:2] != (G, pattern_count(m)):
            raise ValueError(f"bundle keys of shape {keys.shape} do not match n={self.lwe_dimension}, m={m}")
        object.__setattr__(self, "keys", keys)

    @property
    def m(self) -> int:
        return self.unroll_factor

    @property
    def group_count(self) -> int:
        return self.keys.shape[0]

    @property
    def keys_per_group(self) -> int:
        return self.keys.shape[1]

    @property
    def total_keys(self) -> int:
        return self.group_count * self.keys_per_group

    def key(self, group: int, pattern: int) -> TgswCiphertext:
        if not 1 <= pattern < (1 << self.m):
            raise ValueError(f"pattern must lie in [1, {(1 << self.m) - 1}]")
        return TgswCiphertext(self.keys[group, pattern - 1])


def generate_bundle_set(sk: SecretKeys, params: ParameterSet, rng, stddev: float | None = None) -> BootstrapKeyBundleSet:
    rng = make_rng(rng)
    m, n = params.m, params.n
    G = params.group_count
    bits = np.zeros(G * m, dtype=np.int64)
    bits[:n] = sk.lwe
    ind = pattern_indicators(bits.reshape(G, m))  # (G, P)
    P, R, C, N = ind.shape[1], (params.k + 1) * params.l, params.k + 1, params.N
    stddev = params.trlwe_noise_stddev if stddev is None else stddev
    msg = np.zeros((G, P, N), dtype=np.int64)
    msg[..., 0] = ind
    zeros = np.zeros((G, P, R, N), dtype=TORUS_DTYPE)
    rows = trlwe_encrypt(zeros, sk.trlwe, stddev, rng).data + gadget_offsets(params, msg)
    return BootstrapKeyBundleSet(m, n, rows.reshape(G, P, R, C, N))


@dataclasses.dataclass(eq=False)
class CloudKeySet:
    """Evaluation keys; Lagrange-domain bundle operands are cached per backend."""

    params: ParameterSet
    bundle_set: BootstrapKeyBundleSet
    ks: KeySwitchingKey
    _caches: dict = dataclasses.field(default_factory=dict, repr=False)

    def __post_init__(self):
        p = self.params
        if self.bundle_set.m != p.m or self.bundle_set.lwe_dimension != p.n:
            raise ValueError("bundle set does not match the parameter set")
        if self.bundle_set.keys.shape[2:] != ((p.k + 1) * p.l, p.k + 1, p.N):
            raise ValueError("bundle key rows do not match the parameter set")
        if self.ks.input_dimension != p.k * p.N or self.ks.output_dimension != p.n:
            raise ValueError("key switching key dimensions do not match the parameter set")

    def group_operands(self, backend: Backend):
        """Per-group bundle operands for ``backend.bundle`` (computed once)."""
        key = backend.cache_key
        if key not in self._caches:
            keys = self.bundle_set.keys
            parts = [
                backend.bundle_operand(backend.lagrange_keys(keys[g : g + _CACHE_CHUNK]))
                for g in range(0, keys.shape[0], _CACHE_CHUNK)
            ]
            if isinstance(parts[0], tuple):
                full = tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))
                groups = [tuple(a[g] for a in full) for g in range(keys.shape[0])]
            else:
                full = np.concatenate(parts)
                groups = [full[g] for g in range(keys.shape[0])]
            self._caches[key] = groups
        return self._caches[key]

    def clear_caches(self) -> None:
        self._caches.clear()


def generate_cloud_keys(sk: SecretKeys, params: ParameterSet, rng, noiseless: bool = False) -> CloudKeySet:
    """Bootstrapping bundle keys plus the key switching key, reproducible from ``rng``."""
    bk_rng, ks_rng = spawn_rngs(rng, 2)
    bundle = generate_bundle_set(sk, params, bk_rng, 0.0 if noiseless else None)
    ks = generate_key_switching_key(
        sk.extracted, sk.lwe, params.ks_base_log, params.ks_length, 0.0 if noiseless else params.lwe_noise_stddev, ks_rng
    )
    return CloudKeySet(params, bundle, ks)


# ------------------------------------------------------------------ bundles


def build_bundle(group: int, abar_group, bundle_set: BootstrapKeyBundleSet, params: ParameterSet) -> TgswCiphertext:
    """Coefficient-domain BKB for one group: h + sum_p (X**-e_p - 1) K_p."""
    abar_group = np.asarray(abar_group, dtype=np.int64)
    m, N = bundle_set.m, params.N
    if abar_group.shape != (m,):
        raise ValueError(f"expected {m} rounded mask values")
    if np.any((abar_group < 0) | (abar_group >= 2 * N)):
        raise ValueError("rounded mask values must lie in [0, 2N)")
    exps = pattern_exponents(abar_group[None], m, N)[0, 0]
    h = gadget_offsets(params, np.eye(1, N, dtype=np.int64)[0])
    acc = h.copy()
    for p, e in enumerate(exps):
        if e == 0:
            continue
        K = bundle_set.keys[group, p]
        acc += monomial_mul(K, 2 * N - e) - K
    return TgswCiphertext(acc)


def bundle_lagrange(cloud: CloudKeySet, group: int, exps: np.ndarray, backend: Backend, counters: TransformCounters | None = None):
    """Lagrange-domain BKBs for a batch of exponent rows (B, P)."""
    p = cloud.params
    h = gadget_constants(p.N, p.k, p.bg_bits, p.l)
    return backend.bundle(cloud.group_operands(backend)[group], np.ascontiguousarray(exps), h, counters)


# ----------------------------------------------------------- blind rotation


def blind_rotate(
    acc: TrlweCiphertext,
    abar: np.ndarray,
    cloud: CloudKeySet,
    backend: Backend,
    counters: TransformCounters | None = None,
    pipelined: bool = False,
) -> TrlweCiphertext:
    """Multiply acc (B, k+1, N) by X**-(sum_j abar_j s_j), one external product per group.

    With ``pipelined`` the bundle of group i+1 is built on a helper thread
    while the external product of group i runs (one stage of lookahead).
    """
    p = cloud.params
    data = acc.data.reshape(-1, p.k + 1, p.N)
    abar = np.asarray(abar, dtype=np.int64).reshape(data.shape[0], -1)
    if abar.shape[1] != p.n:
        raise ValueError(f"mask dimension {abar.shape[1]} does not match n={p.n}")
    exps = pattern_exponents(abar, p.m, p.N)  # (B, G, P)
    G = exps.shape[1]
    cur = TrlweCiphertext(data)

    def ep(bkb, c):
        digits = decompose_trlwe(c, p)
        out = backend.external_product_lagrange(digits, bkb, counters)
        if counters is not None:
            counters.external_products += digits.shape[0]
        return TrlweCiphertext(out)

    if not pipelined:
        for g in range(G):
            cur = ep(bundle_lagrange(cloud, g, exps[:, g], backend, counters), cur)
    else:
        side = TransformCounters() if counters is not None else None
        with concurrent.futures.ThreadPoolExecutor(max_workers=1) as pool:
            nxt = pool.submit(bundle_lagrange, cloud, 0, exps[:, 0], backend, side)
            for g in range(G):
                bkb = nxt.result()
                if g + 1 < G:
                    nxt = pool.submit(bundle_lagrange, cloud, g + 1, exps[:, g + 1], backend, side)
                cur = ep(bkb, cur)
        if counters is not None:
            counters.merge(side)
    return TrlweCiphertext(cur.data.reshape(acc.data.shape))


# ---------------------------------------------------------------- bootstrap


def make_test_vector(N: int, mu, pre_rotation: int = 0) -> np.ndarray:
    """X**pre_rotation * mu * (1 + X + ... + X**(N-1)) as torus words."""
    tv = np.full(N, np.uint32(mu), dtype=TORUS_DTYPE)
    return monomial_mul(tv, pre_rotation) if pre_rotation else tv


def _bootstrap_chunk(c: LweCiphertext, tv: np.ndarray, offset, cloud: CloudKeySet, backend: Backend, counters, pipelined: bool, switch: bool):
    p = cloud.params
    abar = round_to_2N(c.a, p.N)
    bbar = round_to_2N(c.b, p.N)
    acc = TrlweCiphertext.trivial(monomial_mul(tv, bbar), p.k)
    acc = blind_rotate(acc, abar, cloud, backend, counters, pipelined)
    out = sample_extract(acc)
    if offset:
        out = out.add_constant(offset)
    if switch:
        out = key_switch(out, cloud.ks)
        if counters is not None:
            counters.key_switches += c.b.size
    if counters is not None:
        counters.bootstraps += c.b.size
    return out


def bootstrap_with(
    c: LweCiphertext,
    tv: np.ndarray,
    cloud: CloudKeySet,
    backend: Backend,
    counters: TransformCounters | None = None,
    offset=0,
    pipelined: bool = False,
    threads: int = 1,
    key_switching: bool = True,
) -> LweCiphertext:
    """Rounding, ACC = X**bbar * tv, blind rotation, extraction, offset, key switch.

    ``c`` may carry any batch shape; work is split into chunks and, with
    ``threads > 1``, spread across worker threads.
    """
    p = cloud.params
    if c.dimension != p.n:
        raise ValueError(f"ciphertext dimension {c.dimension} does not match n={p.n}")
    lead = c.batch_shape
    flat = LweCiphertext(c.a.reshape(-1, p.n), c.b.reshape(-1))
    B = flat.b.shape[0]
    spans = [(i, min(i + _BATCH_CHUNK, B)) for i in range(0, B, _BATCH_CHUNK)]
    if threads > 1 and len(spans) < threads and B >= threads:
        step = -(-B // threads)
        spans = [(i, min(i + step, B)) for i in range(0, B, step)]
    args = (tv, offset, cloud, backend)
    if threads <= 1 or len(spans) == 1:
        parts = [_bootstrap_chunk(flat[i:j], *args, counters, pipelined, key_switching) for i, j in spans]
    else:
        locals_ = [TransformCounters() for _ in spans]
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_bootstrap_chunk, flat[i:j], *args, lc, pipelined, key_switching) for (i, j), lc in zip(spans, locals_)]
            parts = [f.result() for f in futs]
        if counters is not None:
            for lc in locals_:
                counters.merge(lc)
    a = np.concatenate([q.a for q in parts]) if parts else np.zeros((0, p.n), TORUS_DTYPE)
    b = np.concatenate([q.b for q in parts]) if parts else np.zeros(0, TORUS_DTYPE)
    return LweCiphertext(a.reshape(lead + (a.shape[-1],)), b.reshape(lead))


def gate_bootstrap(c: LweCiphertext, cloud: CloudKeySet, backend: Backend, counters: TransformCounters | None = None, **kw) -> LweCiphertext:
    """Sign bootstrap: fresh encryption of +1/8 if the phase of c is in (0, 1/2), else -1/8."""
    # coefficient 0 of X**phi * tv is -tv_0 for phi in [1, N], so tv = -mu
    tv = make_test_vector(cloud.params.N, GATE_MU_NEG)
    return bootstrap_with(c, tv, cloud, backend, counters, **kw)


def half_codec_bootstrap(c: LweCiphertext, cloud: CloudKeySet, backend: Backend, counters: TransformCounters | None = None, **kw) -> LweCiphertext:
    """Bootstrap for the m/2 message codec (messages 0 and 1/2).

    Uses the test vector X**(N/2) * mu' * (1 + ... + X**(N-1)) with mu' = 1/4
    and adds (0, mu') after extraction; output decrypts with ``lwe_decrypt``.
    """
    N = cloud.params.N
    mu_p = np.uint32(1 << 30)
    return bootstrap_with(c, make_test_vector(N, mu_p, N // 2), cloud, backend, counters, offset=mu_p, **kw)


# -------------------------------------------------------------------- gates


def encrypt_bit(bits, s: np.ndarray, params: ParameterSet, rng, stddev: float | None = None) -> LweCiphertext:
    """Gate encoding: true -> +1/8, false -> -1/8."""
    bits = np.asarray(bits)
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("messages must be bits")
    mu = np.where(bits == 1, GATE_MU, GATE_MU_NEG).astype(TORUS_DTYPE)
    return lwe_encrypt_torus(mu, s, params.lwe_noise_stddev if stddev is None else stddev, rng)


def decrypt_bit(c: LweCiphertext, s: np.ndarray) -> np.ndarray:
    """Sign decoder of the gate encoding: 1 iff the centred phase is positive."""
    return (centered(lwe_phase(c, s)) > 0).astype(np.int64)


_LINEAR = {
    # kind: (constant in eighths, coefficient on c0 + c1)
    GateKind.NAND: (1, -1),
    GateKind.AND: (-1, 1),
    GateKind.OR: (1, 1),
    GateKind.XOR: (2, 2),
    GateKind.XNOR: (-2, -2),
}


def gate_linear(kind: GateKind, c0: LweCiphertext, c1: LweCiphertext | None = None) -> LweCiphertext:
    """The pre-bootstrap linear combination of a gate (NOT: the negation itself)."""
    kind = GateKind.parse(kind) if isinstance(kind, str) else kind
    if kind is GateKind.NOT:
        if c1 is not None:
            raise ValueError("NOT takes exactly one input")
        return -c0
    if c1 is None:
        raise ValueError(f"{kind.value} takes two inputs")
    const, coef = _LINEAR[kind]
    return (c0 + c1).scale(coef).add_constant(np.uint32((const * (1 << 29)) % (1 << 32)))


def eval_gate(
    kind: GateKind | str,
    c0: LweCiphertext,
    c1: LweCiphertext | None,
    cloud: CloudKeySet,
    backend: Backend,
    counters: TransformCounters | None = None,
    **kw,
) -> LweCiphertext:
    """Homomorphic gate on (batches of) encrypted bits; NOT never bootstraps."""
    kind = GateKind.parse(kind) if isinstance(kind, str) else kind
    lin = gate_linear(kind, c0, c1)
    if kind is GateKind.NOT:
        return lin
    return gate_bootstrap(lin, cloud, backend, counters, **kw)
