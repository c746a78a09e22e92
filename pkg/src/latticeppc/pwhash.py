"""Randomised password hashing over KTX commitments.

A password of length ``t`` is encoded as 8-bit blocks, padded with
``n_max - t`` copies of the NUL block and shuffled by the pre-hash salt
``chi``. The hash commits to ``(bin(chi) || shuffled blocks)`` with binary
randomness ``r``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .encoding import (
    CHAR_BITS,
    PAD_CODE,
    apply_block_perm,
    decode_char,
    encode_char,
    encode_password,
    invert_block_perm,
    is_printable,
    nmax_width,
    perm_to_blocks,
)
from .ktx import BitCommitKey, commit_bits
from .ring import (
    SEED_BYTES,
    Expander,
    Params,
    RandomSource,
    default_source,
    fingerprint,
    fisher_yates,
    is_binary,
    is_perm,
)

MAX_NMAX = 256
_PP_MAGIC = b"LPPC\x01"
_PP_LAYOUT = struct.Struct("<6I")


@dataclass(frozen=True)
class PublicParams:
    params: Params
    n_min: int
    n_max: int

    def __post_init__(self):
        if not 0 < self.n_min <= self.n_max:
            raise ValueError(f"need 0 < n_min <= n_max, got {self.n_min}, {self.n_max}")
        if self.n_max > MAX_NMAX:
            raise ValueError(f"n_max must not exceed {MAX_NMAX}")

    @property
    def perm_bits(self) -> int:
        return nmax_width(self.n_max)

    @property
    def x_len(self) -> int:
        """Columns of A: the permutation encoding plus the pre-hash blocks."""
        return self.n_max * self.perm_bits + CHAR_BITS * self.n_max

    @cached_property
    def key(self) -> BitCommitKey:
        return BitCommitKey.derive(self.params, self.x_len)

    @property
    def A(self) -> np.ndarray:
        return self.key.A

    @property
    def B(self) -> np.ndarray:
        return self.key.B

    def to_bytes(self) -> bytes:
        p = self.params
        return (_PP_MAGIC
                + _PP_LAYOUT.pack(p.security_level, p.n, p.q, p.m, self.n_min, self.n_max)
                + p.matrix_seed)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PublicParams":
        head = len(_PP_MAGIC)
        if data[:head] != _PP_MAGIC or len(data) != head + _PP_LAYOUT.size + SEED_BYTES:
            raise ValueError("not a public-parameter blob")
        lam, n, q, m, n_min, n_max = _PP_LAYOUT.unpack_from(data, head)
        seed = data[head + _PP_LAYOUT.size :]
        return cls(Params(n=n, q=q, m=m, matrix_seed=seed, security_level=lam), n_min, n_max)

    @cached_property
    def fingerprint(self) -> bytes:
        return fingerprint(self.to_bytes())


def setup(security_level: int, n_min: int, n_max: int, seed: bytes,
          params: Params | None = None) -> PublicParams:
    """Public parameters; the standard lattice profile unless ``params`` is given."""
    if params is None:
        params = Params.standard(seed=seed, security_level=security_level)
    elif params.matrix_seed != seed:
        params = Params(n=params.n, q=params.q, m=params.m, matrix_seed=seed,
                        security_level=security_level)
    return PublicParams(params, n_min, n_max)


def pre_salt(pp: PublicParams, rng: RandomSource | None = None) -> np.ndarray:
    source = Expander(default_source(rng).bytes(SEED_BYTES), b"pre-salt")
    return fisher_yates(pp.n_max, source)


def salt(pp: PublicParams, rng: RandomSource | None = None) -> np.ndarray:
    return Expander(default_source(rng).bytes(SEED_BYTES), b"salt").bits(pp.params.m)


def _check_chi(pp: PublicParams, chi) -> np.ndarray:
    chi = np.asarray(chi, dtype=np.int64)
    if not is_perm(chi, pp.n_max):
        raise ValueError(f"pre-hash salt must be a permutation of {pp.n_max} elements")
    return chi


def pre_hash(pp: PublicParams, pw: str, chi) -> np.ndarray:
    chi = _check_chi(pp, chi)
    t = len(pw)
    if not pp.n_min <= t <= pp.n_max:
        raise ValueError(f"password length {t} outside [{pp.n_min}, {pp.n_max}]")
    padding = np.tile(encode_char(PAD_CODE), pp.n_max - t)
    e = np.concatenate([encode_password(pw), padding])
    return apply_block_perm(chi, e, CHAR_BITS)


def hash_x(pp: PublicParams, P, chi) -> np.ndarray:
    """The committed message ``x = (bin(chi) || P)``."""
    chi = _check_chi(pp, chi)
    P = np.asarray(P, dtype=np.uint8)
    if P.shape != (CHAR_BITS * pp.n_max,):
        raise ValueError("pre-hash value has the wrong length")
    return np.concatenate([perm_to_blocks(chi), P])


def hash(pp: PublicParams, P, chi, r) -> np.ndarray:  # noqa: A001 - scheme algorithm name
    return commit_bits(pp.key, hash_x(pp, P, chi), r)


def invert_pre_hash(pp: PublicParams, P, chi) -> str:
    """Recover the password from its pre-hash value given the pre-hash salt."""
    chi = _check_chi(pp, chi)
    P = np.asarray(P)
    if P.shape != (CHAR_BITS * pp.n_max,) or not is_binary(P):
        raise ValueError("malformed pre-hash value")
    e = invert_block_perm(chi, P, CHAR_BITS).reshape(-1, CHAR_BITS)
    chars = []
    for i, block in enumerate(e):
        code = decode_char(block)
        if is_printable(code):
            chars.append(chr(code))
        elif code != PAD_CODE:
            raise ValueError(f"block {i} holds non-printable code {code}")
    return "".join(chars)
