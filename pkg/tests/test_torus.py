from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfhe_bku.params import ParameterError, default_params
from tfhe_bku.torus import (
    centered,
    make_rng,
    monomial_mul,
    round_to_2N,
    sample_secret_keys,
    sample_torus_gaussian,
    schoolbook_negacyclic_mul,
    spawn_rngs,
    to_torus,
    torus_linear,
)

words = st.integers(0, 2**32 - 1)


def brute_negacyclic(a, b):
    """Pure-Python double loop with explicit sign folding (independent oracle)."""
    N = len(a)
    out = [0] * N
    for i in range(N):
        for j in range(N):
            k = i + j
            if k < N:
                out[k] += int(a[i]) * int(b[j])
            else:
                out[k - N] -= int(a[i]) * int(b[j])
    return [v % 2**32 for v in out]


def test_secret_keys_deterministic():
    p = default_params()
    a, b = sample_secret_keys(p, 99), sample_secret_keys(p, 99)
    assert np.array_equal(a.lwe, b.lwe) and np.array_equal(a.trlwe, b.trlwe)


def test_secret_key_bits_balanced():
    sk = sample_secret_keys(default_params(), 7)
    assert set(np.unique(sk.lwe)) <= {0, 1}
    assert 0.4 <= sk.lwe.mean() <= 0.6


def test_empty_lwe_key_rejected():
    with pytest.raises(ParameterError):
        default_params(lwe_dimension=0)


def test_extracted_key_is_flattened_ring_key():
    sk = sample_secret_keys(default_params(), 3)
    assert sk.extracted.shape == (1024,)
    assert np.array_equal(sk.extracted, sk.trlwe[0])


def test_torus_linear_examples(rng):
    p = rng.integers(0, 2**32, 16, dtype=np.uint32)
    zero = np.zeros(16, np.uint32)
    assert np.array_equal(torus_linear(p, zero, "add"), p)
    assert not torus_linear(p, p, "sub").any()
    top = np.full(4, 2**32 - 1, np.uint32)
    assert not torus_linear(top, np.ones(4, np.uint32)).any()


def test_torus_linear_degree_mismatch():
    with pytest.raises(ValueError):
        torus_linear(np.zeros(4, np.uint32), np.zeros(8, np.uint32))


@given(st.lists(words, min_size=3, max_size=3), st.lists(words, min_size=3, max_size=3))
def test_torus_add_commutes_and_associates(x, y):
    a, b = np.array(x, np.uint32), np.array(y, np.uint32)
    assert np.array_equal(torus_linear(a, b), torus_linear(b, a))
    c = a[::-1].copy()
    assert np.array_equal(torus_linear(torus_linear(a, b), c), torus_linear(a, torus_linear(b, c)))


def test_schoolbook_identity_and_fold(rng):
    N = 16
    b = rng.integers(0, 2**32, N, dtype=np.uint32)
    one = np.zeros(N, np.int64)
    one[0] = 1
    assert np.array_equal(schoolbook_negacyclic_mul(one, b), b)
    half = np.zeros(N, np.int64)
    half[N // 2] = 1
    got = schoolbook_negacyclic_mul(half, half.astype(np.uint32))
    want = np.zeros(N, np.uint32)
    want[0] = 2**32 - 1
    assert np.array_equal(got, want)


def test_schoolbook_matches_brute_force_N8(rng):
    for _ in range(20):
        a = rng.integers(-512, 513, 8)
        b = rng.integers(0, 2**32, 8, dtype=np.uint32)
        assert schoolbook_negacyclic_mul(a, b).tolist() == brute_negacyclic(a, b)


def test_schoolbook_shift_property_N64(rng):
    N = 64
    for _ in range(100):
        a = rng.integers(-512, 513, N)
        b = rng.integers(0, 2**32, N, dtype=np.uint32)
        xa = np.concatenate([[-a[-1]], a[:-1]])
        rotated = monomial_mul(schoolbook_negacyclic_mul(a, b), 1)
        assert np.array_equal(schoolbook_negacyclic_mul(xa, b), rotated)


@given(st.integers(0, 31), st.integers(-64, 64))
def test_monomial_mul_matches_schoolbook(seed, e):
    N = 16
    b = make_rng(seed).integers(0, 2**32, N, dtype=np.uint32)
    mono = np.zeros(N, np.int64)
    r = e % (2 * N)
    mono[r % N] = 1 if r < N else -1
    assert np.array_equal(monomial_mul(b, e), schoolbook_negacyclic_mul(mono, b))


def test_monomial_mul_broadcasts_over_rows(rng):
    rows = rng.integers(0, 2**32, (3, 2, 16), dtype=np.uint32)
    got = monomial_mul(rows, 5)
    for idx in np.ndindex(3, 2):
        assert np.array_equal(got[idx], monomial_mul(rows[idx], 5))


def test_round_to_2N_examples():
    assert round_to_2N(np.uint32(0), 1024) == 0
    assert round_to_2N(np.uint32(2**31), 1024) == 1024
    x = Fraction(2**31 + 2**20, 2**32)
    want = int((2 * 1024 * x + Fraction(1, 2)) // 1) % 2048
    assert want == 1025
    assert round_to_2N(np.uint32(2**31 + 2**20), 1024) == want


@given(words, st.sampled_from([4, 16, 1024]))
def test_round_to_2N_matches_rational(x, N):
    want = int((Fraction(2 * N * x, 2**32) + Fraction(1, 2)) // 1) % (2 * N)
    assert round_to_2N(np.uint32(x), N) == want


def test_round_to_2N_monotone_and_onto():
    N = 16
    xs = np.arange(0, 2**32, 2**20, dtype=np.uint64).astype(np.uint32)
    r = round_to_2N(xs, N)
    # one period starting just past the wrap point of residue 0
    start = int(np.argmax(r == 1))
    period = np.concatenate([r[start:], r[:start]])
    tail = period[period != 0]
    assert np.all(np.diff(tail) >= 0)
    assert set(r.tolist()) == set(range(2 * N))


def test_gaussian_zero_stddev_is_exact_zero(rng):
    assert not sample_torus_gaussian(0.0, rng, 100).any()


def test_gaussian_statistics():
    sigma = 2.0**-15
    x = centered(sample_torus_gaussian(sigma, make_rng(5), 100_000)) / 2.0**32
    assert abs(x.std() / sigma - 1) < 0.05
    assert abs(x.mean()) < 4 * sigma / np.sqrt(x.size)


def test_gaussian_negative_stddev_rejected(rng):
    with pytest.raises(ValueError):
        sample_torus_gaussian(-1.0, rng)


def test_spawned_streams_are_independent_and_reproducible():
    a1, b1 = spawn_rngs(42, 2)
    a2, _ = spawn_rngs(42, 2)
    x = a1.integers(0, 2**32, 8)
    assert np.array_equal(x, a2.integers(0, 2**32, 8))
    assert not np.array_equal(x, b1.integers(0, 2**32, 8))


def test_to_torus_wraps():
    assert to_torus(0.25) == 2**30
    assert to_torus(-0.25) == 3 * 2**30
    assert to_torus(1.0) == 0
