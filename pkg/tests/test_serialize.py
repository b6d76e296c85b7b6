import numpy as np
import pytest

from tfhe_bku.bootstrap import decrypt_bit, encrypt_bit, eval_gate, generate_cloud_keys
from tfhe_bku.serialize import (
    FormatError,
    load_ciphertexts,
    load_cloud_keys,
    load_secret_keys,
    save_ciphertexts,
    save_cloud_keys,
    save_secret_keys,
)
from tfhe_bku.torus import sample_secret_keys
from tfhe_bku.transform import make_backend


def test_secret_round_trip(tmp_path, toy, toy_keys):
    sk, _ = toy_keys
    save_secret_keys(tmp_path / "s.key", sk, toy)
    back, params = load_secret_keys(tmp_path / "s.key", toy)
    assert params == toy
    assert np.array_equal(back.lwe, sk.lwe) and np.array_equal(back.trlwe, sk.trlwe)


def test_cloud_round_trip_evaluates(tmp_path, toy, toy_keys):
    sk, cloud = toy_keys
    save_cloud_keys(tmp_path / "c.key", cloud)
    back = load_cloud_keys(tmp_path / "c.key")
    assert np.array_equal(back.bundle_set.keys, cloud.bundle_set.keys)
    assert np.array_equal(back.ks.keys, cloud.ks.keys)
    c0, c1 = encrypt_bit([1, 1], sk.lwe, toy, 0), encrypt_bit([0, 1], sk.lwe, toy, 1)
    out = eval_gate("AND", c0, c1, back, make_backend("approximate", toy.N, 64))
    assert decrypt_bit(out, sk.lwe).tolist() == [0, 1]


def test_ciphertext_round_trip(tmp_path, toy, toy_keys):
    sk, _ = toy_keys
    named = {"a": encrypt_bit(1, sk.lwe, toy, 2), "b": encrypt_bit(0, sk.lwe, toy, 3)}
    save_ciphertexts(tmp_path / "c.bin", named, toy)
    back, _ = load_ciphertexts(tmp_path / "c.bin")
    assert list(back) == ["a", "b"]
    for w in named:
        assert np.array_equal(back[w].a, named[w].a) and back[w].b == named[w].b


def test_parameter_echo_mismatch(tmp_path, toy, toy_keys):
    sk, _ = toy_keys
    save_secret_keys(tmp_path / "s.key", sk, toy)
    with pytest.raises(FormatError, match="parameter echo"):
        load_secret_keys(tmp_path / "s.key", toy.replace(unroll_factor=3))


def test_kind_and_magic_checked(tmp_path, toy, toy_keys):
    sk, _ = toy_keys
    save_secret_keys(tmp_path / "s.key", sk, toy)
    with pytest.raises(FormatError, match="expected cloud keys"):
        load_cloud_keys(tmp_path / "s.key")
    (tmp_path / "junk").write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(FormatError):
        load_secret_keys(tmp_path / "junk")
    data = (tmp_path / "s.key").read_bytes()
    (tmp_path / "short").write_bytes(data[: len(data) // 2])
    with pytest.raises(FormatError):
        load_secret_keys(tmp_path / "short")
    with pytest.raises(FormatError):
        load_secret_keys(tmp_path / "missing")


def test_keygen_files_deterministic(tmp_path, toy):
    for name in ("x", "y"):
        sk = sample_secret_keys(toy, 99)
        save_cloud_keys(tmp_path / name, generate_cloud_keys(sk, toy, 100))
    assert (tmp_path / "x").read_bytes() == (tmp_path / "y").read_bytes()
