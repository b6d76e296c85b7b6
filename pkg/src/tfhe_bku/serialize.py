"""Versioned binary files for keys and ciphertexts.

Layout (little-endian)::

    magic "TGLW" | u16 version | u16 kind | u32 len | ParameterSet text (utf-8)
    u32 len | JSON metadata | u16 array count | arrays...

and each array is ``u8 dtype code | u8 ndim | u32 shape[ndim] | raw data``.
Readers compare the embedded parameter echo with the caller's expectation
and refuse mismatches.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from .bootstrap import BootstrapKeyBundleSet, CloudKeySet
from .lattice import KeySwitchingKey, LweCiphertext
from .params import ParameterSet, parse_preset
from .torus import SecretKeys

MAGIC = b"TGLW"
VERSION = 1
KIND_SECRET = 1
KIND_CLOUD = 2
KIND_LWE = 3
_KIND_NAMES = {KIND_SECRET: "secret keys", KIND_CLOUD: "cloud keys", KIND_LWE: "LWE ciphertexts"}
_DTYPES = {1: np.dtype("<u4"), 2: np.dtype("<i4"), 3: np.dtype("<i8"), 4: np.dtype("u1")}
_CODES = {v: k for k, v in _DTYPES.items()}


class FormatError(ValueError):
    """Unreadable file, wrong kind, or parameter echo mismatch."""


def _write_array(out: io.BufferedIOBase, a: np.ndarray) -> None:
    a = np.ascontiguousarray(a)
    code = _CODES.get(a.dtype.newbyteorder("<"))
    if code is None:
        raise TypeError(f"unsupported dtype {a.dtype}")
    out.write(struct.pack("<BB", code, a.ndim))
    out.write(struct.pack(f"<{a.ndim}I", *a.shape))
    out.write(a.astype(_DTYPES[code], copy=False).tobytes())


def _read_exact(f, n: int) -> bytes:
    b = f.read(n)
    if len(b) != n:
        raise FormatError("truncated file")
    return b


def _read_array(f) -> np.ndarray:
    code, ndim = struct.unpack("<BB", _read_exact(f, 2))
    if code not in _DTYPES:
        raise FormatError(f"unknown dtype code {code}")
    shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim))
    dt = _DTYPES[code]
    count = int(np.prod(shape, dtype=np.int64))
    return np.frombuffer(_read_exact(f, count * dt.itemsize), dtype=dt).reshape(shape).copy()


def _write(path, kind: int, params: ParameterSet, meta: dict, arrays: list[np.ndarray]) -> int:
    text = params.to_text().encode()
    blob = json.dumps(meta, sort_keys=True).encode()
    with open(path, "wb") as out:
        out.write(MAGIC + struct.pack("<HH", VERSION, kind))
        out.write(struct.pack("<I", len(text)) + text)
        out.write(struct.pack("<I", len(blob)) + blob)
        out.write(struct.pack("<H", len(arrays)))
        for a in arrays:
            _write_array(out, a)
        return out.tell()


def _read(path, kind: int, expected: ParameterSet | None):
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise FormatError(f"cannot open {path}: {exc}") from None
    with f:
        head = _read_exact(f, 8)
        if head[:4] != MAGIC:
            raise FormatError(f"{path}: not a TGLW file")
        version, got_kind = struct.unpack("<HH", head[4:])
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        if got_kind != kind:
            raise FormatError(f"{path}: holds {_KIND_NAMES.get(got_kind, got_kind)}, expected {_KIND_NAMES[kind]}")
        (n,) = struct.unpack("<I", _read_exact(f, 4))
        params = parse_preset(_read_exact(f, n).decode())
        if expected is not None and params != expected:
            raise FormatError(f"{path}: parameter echo does not match the expected parameter set")
        (n,) = struct.unpack("<I", _read_exact(f, 4))
        meta = json.loads(_read_exact(f, n).decode())
        (count,) = struct.unpack("<H", _read_exact(f, 2))
        arrays = [_read_array(f) for _ in range(count)]
    return params, meta, arrays


def save_secret_keys(path, sk: SecretKeys, params: ParameterSet) -> int:
    return _write(path, KIND_SECRET, params, {}, [sk.lwe.astype(np.int32), sk.trlwe.astype(np.int32)])


def load_secret_keys(path, expected: ParameterSet | None = None) -> tuple[SecretKeys, ParameterSet]:
    params, _, (lwe, trlwe) = _read(path, KIND_SECRET, expected)
    return SecretKeys(lwe=lwe.astype(np.int32), trlwe=trlwe.astype(np.int32)), params


def save_cloud_keys(path, cloud: CloudKeySet) -> int:
    meta = {"ks_base_log": cloud.ks.base_log, "ks_length": cloud.ks.length, "unroll_factor": cloud.bundle_set.m}
    return _write(path, KIND_CLOUD, cloud.params, meta, [cloud.bundle_set.keys, cloud.ks.keys])


def load_cloud_keys(path, expected: ParameterSet | None = None) -> CloudKeySet:
    params, meta, (bk, ks) = _read(path, KIND_CLOUD, expected)
    try:
        bundle = BootstrapKeyBundleSet(int(meta["unroll_factor"]), params.n, bk)
        ksk = KeySwitchingKey(ks, int(meta["ks_base_log"]), int(meta["ks_length"]))
        return CloudKeySet(params, bundle, ksk)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: inconsistent cloud key file: {exc}") from None


def save_ciphertexts(path, named: dict[str, LweCiphertext], params: ParameterSet) -> int:
    names = list(named)
    a = np.stack([named[w].a for w in names]) if names else np.zeros((0, params.n), np.uint32)
    b = np.stack([named[w].b for w in names]) if names else np.zeros(0, np.uint32)
    return _write(path, KIND_LWE, params, {"wires": names}, [a, b])


def load_ciphertexts(path, expected: ParameterSet | None = None) -> tuple[dict[str, LweCiphertext], ParameterSet]:
    params, meta, (a, b) = _read(path, KIND_LWE, expected)
    names = meta.get("wires", [])
    if len(names) != a.shape[0]:
        raise FormatError(f"{path}: wire list does not match ciphertext count")
    return {w: LweCiphertext(a[i], b[i]) for i, w in enumerate(names)}, params
