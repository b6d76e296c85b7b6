from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfhe_bku.lattice import (
    LweCiphertext,
    TrlweCiphertext,
    external_product,
    gadget_decompose,
    key_switch,
    lwe_decrypt,
    lwe_encrypt,
    lwe_encrypt_torus,
    lwe_phase,
    phase_error,
    sample_extract,
    tgsw_encrypt,
    trlwe_decrypt,
    trlwe_encrypt,
    trlwe_phase,
)
from tfhe_bku.torus import centered, make_rng, monomial_mul, schoolbook_negacyclic_mul, to_torus, uniform_torus
from tfhe_bku.transform import TransformCounters, make_backend

HALF = 1 << 31


def _bits(n, rng):
    return rng.integers(0, 2, n)


# ------------------------------------------------------------------- LWE


def test_lwe_round_trip_many(toy, toy_keys, rng):
    sk, _ = toy_keys
    m = _bits(10_000, rng)
    assert np.array_equal(lwe_decrypt(lwe_encrypt(m, sk.lwe, toy, rng), sk.lwe), m)


def test_lwe_noiseless_zero_mask_body():
    s = np.array([1, 0, 1, 1])
    c = LweCiphertext(np.zeros(4, np.uint32), np.uint32(HALF))
    assert lwe_phase(c, s) == HALF and lwe_decrypt(c, s) == 1
    c0 = lwe_encrypt_torus(np.uint32(HALF), np.zeros(4, np.int64), 0.0, 3)
    assert c0.b == HALF


def test_lwe_encryptions_differ(toy, toy_keys):
    sk, _ = toy_keys
    c1 = lwe_encrypt(1, sk.lwe, toy, 1)
    c2 = lwe_encrypt(1, sk.lwe, toy, 2)
    assert not np.array_equal(c1.a, c2.a)


def test_lwe_rejects_non_bits(toy, toy_keys):
    with pytest.raises(ValueError):
        lwe_encrypt(2, toy_keys[0].lwe, toy, 0)


def test_lwe_dimension_mismatch(toy, toy_keys):
    c = lwe_encrypt(0, toy_keys[0].lwe, toy, 0)
    with pytest.raises(ValueError):
        lwe_phase(c, np.zeros(3, np.int64))
    with pytest.raises(ValueError):
        c + LweCiphertext(np.zeros(3, np.uint32), np.uint32(0))


@pytest.mark.parametrize(
    "error, bit",
    [(Fraction(0), 0), (Fraction(1, 2), 1), (Fraction(249, 1000), 0), (Fraction(3, 10), 1), (Fraction(-249, 1000), 0)],
)
def test_lwe_decrypt_thresholds(error, bit):
    # oracle: round(2 * phase) mod 2 in exact arithmetic
    expected = round(2 * error) % 2
    assert expected == bit
    s = np.zeros(4, np.int64)
    word = int(error * 2**32) % 2**32
    assert lwe_decrypt(LweCiphertext(np.zeros(4, np.uint32), np.uint32(word)), s) == bit


@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1), st.integers(0, 2**16))
def test_lwe_phase_linear(m1, m2, seed):
    rng = make_rng(seed)
    s = rng.integers(0, 2, 16)
    c1 = lwe_encrypt_torus(np.uint32(m1), s, 2**-15, rng)
    c2 = lwe_encrypt_torus(np.uint32(m2), s, 2**-15, rng)
    assert lwe_phase(c1 + c2, s) == np.uint32((int(lwe_phase(c1, s)) + int(lwe_phase(c2, s))) % 2**32)
    assert lwe_phase(c1 - c2, s) == np.uint32((int(lwe_phase(c1, s)) - int(lwe_phase(c2, s))) % 2**32)


def test_fresh_phase_statistics(toy, toy_keys, rng):
    sk, _ = toy_keys
    c = lwe_encrypt(np.zeros(10_000, np.int64), sk.lwe, toy, rng)
    e = centered(lwe_phase(c, sk.lwe)) / 2**32
    assert abs(e.std() / toy.lwe_noise_stddev - 1) < 0.1
    assert np.abs(e).max() < 1 / 16


# ----------------------------------------------------------------- TRLWE


def test_trlwe_noiseless_zero_mask(rng):
    mu = uniform_torus(rng, 16)
    c = TrlweCiphertext.trivial(mu, 1)
    assert np.array_equal(c.body, mu)
    assert np.array_equal(trlwe_phase(c, np.ones((1, 16), np.int64)), mu)


def test_trlwe_round_trip_grid(toy, toy_keys, rng):
    sk, _ = toy_keys
    N = toy.N
    mu = (rng.integers(0, 2 * N, (1000, N)) * (2**32 // (2 * N))).astype(np.uint32)
    c = trlwe_encrypt(mu, sk.trlwe, toy.trlwe_noise_stddev, rng)
    assert np.array_equal(trlwe_decrypt(c, sk.trlwe), mu)


def test_trlwe_additive(toy, toy_keys, rng):
    sk, _ = toy_keys
    N = toy.N
    m1 = (rng.integers(0, 8, N) << 29).astype(np.uint32)
    m2 = (rng.integers(0, 8, N) << 29).astype(np.uint32)
    c = trlwe_encrypt(m1, sk.trlwe, toy.trlwe_noise_stddev, rng) + trlwe_encrypt(m2, sk.trlwe, toy.trlwe_noise_stddev, rng)
    assert np.array_equal(trlwe_decrypt(c, sk.trlwe, grid=8), m1 + m2)


def test_trlwe_dimension_mismatch(toy_keys):
    with pytest.raises(ValueError):
        trlwe_encrypt(np.zeros(8, np.uint32), toy_keys[0].trlwe, 0.0, 0)


# ------------------------------------------------------------------ TGSW


def test_tgsw_zero_rows_decrypt_to_zero(toy, toy_keys):
    sk, _ = toy_keys
    A = tgsw_encrypt(0, sk.trlwe, toy, 5)
    ph = centered(trlwe_phase(TrlweCiphertext(A.rows), sk.trlwe)) / 2**32
    assert np.abs(ph).max() < 2**-20


@pytest.mark.parametrize("kind", ["reference", "approximate"])
def test_external_product_identity_and_zero(kind, toy, toy_keys, rng):
    sk, _ = toy_keys
    be = make_backend(kind, toy.N, toy.beta)
    mu = (rng.integers(0, 8, toy.N) << 29).astype(np.uint32)
    c = trlwe_encrypt(mu, sk.trlwe, toy.trlwe_noise_stddev, rng)
    one = external_product(tgsw_encrypt(1, sk.trlwe, toy, rng), c, toy, be)
    assert np.array_equal(trlwe_decrypt(one, sk.trlwe, grid=8), mu)
    zero = external_product(tgsw_encrypt(0, sk.trlwe, toy, rng), c, toy, be)
    assert not trlwe_decrypt(zero, sk.trlwe, grid=8).any()


def test_external_product_by_x_rotates(toy, toy_keys, rng):
    sk, _ = toy_keys
    be = make_backend("approximate", toy.N, toy.beta)
    N = toy.N
    testv = (rng.integers(0, 2 * N, N) * (2**32 // (2 * N))).astype(np.uint32)
    x = np.zeros(N, np.int64)
    x[1] = 1
    out = external_product(tgsw_encrypt(x, sk.trlwe, toy, rng), trlwe_encrypt(testv, sk.trlwe, toy.trlwe_noise_stddev, rng), toy, be)
    want = schoolbook_negacyclic_mul(x, testv)
    assert np.array_equal(want, monomial_mul(testv, 1))
    assert np.array_equal(trlwe_decrypt(out, sk.trlwe), want)


def test_external_product_counts(toy, toy_keys, rng):
    sk, _ = toy_keys
    be = make_backend("approximate", toy.N, toy.beta)
    counters = TransformCounters()
    c = trlwe_encrypt(np.zeros((3, toy.N), np.uint32), sk.trlwe, 0.0, rng)
    external_product(tgsw_encrypt(1, sk.trlwe, toy, rng), c, toy, be, counters)
    assert counters.external_products == 3
    assert counters.forward_count == 3 * (toy.k + 1) * toy.l
    assert counters.inverse_count == 3 * (toy.k + 1)


def test_external_product_backends_agree(toy, toy_keys, rng):
    sk, _ = toy_keys
    A = tgsw_encrypt(rng.integers(0, 2, toy.N), sk.trlwe, toy, rng)
    c = TrlweCiphertext(uniform_torus(rng, (4, toy.k + 1, toy.N)))
    ref = external_product(A, c, toy, make_backend("reference", toy.N))
    apx = external_product(A, c, toy, make_backend("approximate", toy.N, 64))
    d = np.abs(centered(trlwe_phase(ref, sk.trlwe) - trlwe_phase(apx, sk.trlwe))) / 2**32
    assert d.max() <= 2**-20


def test_external_product_shape_checked(toy, toy_keys):
    A = tgsw_encrypt(1, toy_keys[0].trlwe, toy, 0)
    with pytest.raises(ValueError):
        external_product(A, TrlweCiphertext(np.zeros((2, 16), np.uint32)), toy, make_backend("reference", toy.N))


# ---------------------------------------------------------------- gadget


def test_gadget_zero():
    assert not gadget_decompose(np.zeros(8, np.uint32), 1024, 3).any()


def test_gadget_single_digit():
    p = np.full(4, 2**32 // 1024, np.uint32)
    d = gadget_decompose(p, 1024, 3)
    assert np.array_equal(d[:, 0], [1, 0, 0])
    assert np.all(d[0] == 1) and not d[1:].any()


def test_gadget_recomposition_bound(rng):
    Bg, l = 1024, 3
    p = uniform_torus(rng, 10_000)
    d = gadget_decompose(p, Bg, l)
    assert d.min() > -Bg // 2 and d.max() <= Bg // 2
    bound = Fraction(1, 2 * Bg**l)
    for i in rng.choice(10_000, 400, replace=False):
        rec = sum(Fraction(int(d[j, i]), Bg ** (j + 1)) for j in range(l))
        diff = (rec - Fraction(int(p[i]), 2**32)) % 1
        assert min(diff, 1 - diff) <= bound
    # vectorised check of the same bound on all coefficients
    rec = sum(d[j].astype(np.int64) << (32 - 10 * (j + 1)) for j in range(l))
    assert np.abs(centered(to_torus_words(rec) - p)).max() <= 2**32 // (2 * Bg**l)


def to_torus_words(x):
    return (np.asarray(x, np.int64) % 2**32).astype(np.uint32)


@pytest.mark.parametrize("Bg, l", [(1000, 3), (1024, 4)])
def test_gadget_rejects_bad_geometry(Bg, l):
    with pytest.raises(ValueError):
        gadget_decompose(np.zeros(4, np.uint32), Bg, l)


# ----------------------------------------------------- extraction, switch


def test_extract_noiseless_constant():
    mu = np.zeros(16, np.uint32)
    mu[0] = 12345
    lwe = sample_extract(TrlweCiphertext.trivial(mu, 1))
    assert lwe.dimension == 16 and lwe_phase(lwe, np.ones(16, np.int64)) == 12345


@given(st.integers(0, 2**20), st.integers(1, 2))
def test_extract_phase_matches_coefficient_zero(seed, k):
    rng = make_rng(seed)
    key = rng.integers(0, 2, (k, 32))
    c = TrlweCiphertext(uniform_torus(rng, (k + 1, 32)))
    lwe = sample_extract(c)
    assert lwe.dimension == k * 32
    assert lwe_phase(lwe, key.reshape(-1)) == trlwe_phase(c, key)[0]


def test_extract_then_decrypt(toy, toy_keys, rng):
    sk, _ = toy_keys
    mu = (rng.integers(0, 2, toy.N) << 31).astype(np.uint32)
    c = trlwe_encrypt(mu, sk.trlwe, toy.trlwe_noise_stddev, rng)
    assert lwe_decrypt(sample_extract(c), sk.extracted) == trlwe_decrypt(c, sk.trlwe, grid=2)[0] >> 31


def test_extract_position_restricted():
    with pytest.raises(ValueError):
        sample_extract(TrlweCiphertext(np.zeros((2, 8), np.uint32)), 1)


def test_key_switch_eighth(toy, toy_keys, rng):
    sk, cloud = toy_keys
    c = lwe_encrypt_torus(np.full(200, 1 << 29, np.uint32), sk.extracted, 0.0, rng)
    out = key_switch(c, cloud.ks)
    assert out.dimension == toy.n
    err = phase_error(lwe_phase(out, sk.lwe), np.uint32(1 << 29))
    assert np.abs(err).max() < 1 / 16


def test_key_switch_zero_many(toy, toy_keys, rng):
    sk, cloud = toy_keys
    c = lwe_encrypt(np.zeros(1000, np.int64), sk.extracted, toy, rng)
    assert not lwe_decrypt(key_switch(c, cloud.ks), sk.lwe).any()


def test_key_switch_dimension_mismatch(toy_keys):
    _, cloud = toy_keys
    with pytest.raises(ValueError):
        key_switch(LweCiphertext(np.zeros(7, np.uint32), np.uint32(0)), cloud.ks)
