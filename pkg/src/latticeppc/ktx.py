"""KTX commitments: the t-bit vector flavour and the string flavour COM.

Both keys are re-expanded from the parameter seed, so a key file only needs
``Params`` plus the domain tags below.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .ring import Params, is_binary, mat_vec_mul_add, sample_uniform_matrix

TAG_BIT_A = b"ktx-A"
TAG_BIT_B = b"ktx-B"
TAG_COM_A = b"com-A"
TAG_COM_B = b"com-B"
DIGEST_BITS = 256


def _check_bits(x, length: int, name: str) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (length,):
        raise ValueError(f"{name} must have length {length}, got {x.size}")
    if not is_binary(x):
        raise ValueError(f"{name} must be binary")
    return x


@dataclass(frozen=True)
class BitCommitKey:
    params: Params
    t: int
    A: np.ndarray = field(repr=False, compare=False)
    B: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def derive(cls, params: Params, t: int, tags=(TAG_BIT_A, TAG_BIT_B)) -> "BitCommitKey":
        A = sample_uniform_matrix(params.matrix_seed, tags[0], params.n, t, params.q)
        B = sample_uniform_matrix(params.matrix_seed, tags[1], params.n, params.m, params.q)
        return cls(params, t, A, B)


def commit_bits(key: BitCommitKey, x, r) -> np.ndarray:
    x = _check_bits(x, key.t, "message")
    r = _check_bits(r, key.params.m, "randomness")
    return mat_vec_mul_add(key.A, x, key.B, r, key.params.q)


def open_bits(key: BitCommitKey, c, x, r) -> bool:
    try:
        return bool(np.array_equal(commit_bits(key, x, r), np.asarray(c)))
    except ValueError:
        return False


@dataclass(frozen=True)
class StringCommitKey:
    """COM: digest the message with SHA-256, then commit to the 256 digest bits."""

    params: Params
    A: np.ndarray = field(repr=False, compare=False)
    B: np.ndarray = field(repr=False, compare=False)
    digest_name: str = "sha256"

    @classmethod
    def derive(cls, params: Params) -> "StringCommitKey":
        A = sample_uniform_matrix(params.matrix_seed, TAG_COM_A, params.n, DIGEST_BITS, params.q)
        B = sample_uniform_matrix(params.matrix_seed, TAG_COM_B, params.n, params.m, params.q)
        return cls(params, A, B)

    def digest(self, msg: bytes) -> np.ndarray:
        d = hashlib.new(self.digest_name, msg).digest()
        return np.unpackbits(np.frombuffer(d, dtype=np.uint8))


def commit_digest(key: StringCommitKey, digest_bits, rho) -> np.ndarray:
    rho = _check_bits(rho, key.params.m, "randomness")
    return mat_vec_mul_add(key.A, digest_bits, key.B, rho, key.params.q)


def commit_string(key: StringCommitKey, msg: bytes, rho) -> np.ndarray:
    return commit_digest(key, key.digest(msg), rho)


def open_string(key: StringCommitKey, c, msg: bytes, rho) -> bool:
    try:
        return bool(np.array_equal(commit_string(key, msg, rho), np.asarray(c)))
    except ValueError:
        return False


def commitment_to_bytes(c) -> bytes:
    return np.asarray(c, dtype="<u2").tobytes()


def commitment_from_bytes(data: bytes, params: Params) -> np.ndarray:
    if len(data) != 2 * params.n:
        raise ValueError("commitment has the wrong size")
    c = np.frombuffer(data, dtype="<u2").astype(np.int64)
    if np.any(c >= params.q):
        raise ValueError("commitment entry out of range")
    return c
