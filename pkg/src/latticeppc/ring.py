"""Exact arithmetic over Z_q.

Vectors and matrices are plain numpy arrays: field elements are ``int64``
reduced into ``[0, q)``, bit vectors are ``uint8`` with entries in ``{0, 1}``,
and permutations are ``int64`` index arrays where ``perm[i]`` is the 0-based
image of ``i``.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

STANDARD_N = 256
STANDARD_Q = 1021
SEED_BYTES = 32


class RandomSource(Protocol):
    """Anything that hands out random bytes (``numpy.random.Generator`` works)."""

    def bytes(self, length: int) -> bytes: ...


class SystemRandom:
    """OS entropy, the default randomness source outside of tests."""

    def bytes(self, length: int) -> bytes:
        return os.urandom(length)


def default_source(rng: RandomSource | None) -> RandomSource:
    return SystemRandom() if rng is None else rng


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    d = 3
    while d * d <= q:
        if q % d == 0:
            return False
        d += 2
    return True


def ceil_log2(x: int) -> int:
    """Smallest b with 2**b >= x (0 for x == 1)."""
    if x < 1:
        raise ValueError("ceil_log2 needs a positive integer")
    return (x - 1).bit_length()


@dataclass(frozen=True)
class Params:
    """Lattice parameter set shared by every component of the system."""

    n: int
    q: int
    m: int
    matrix_seed: bytes = field(default=bytes(SEED_BYTES), repr=False)
    security_level: int = 128

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"modulus q={self.q} is not prime")
        if self.q > 1 << 16:
            raise ValueError("q must fit in 16 bits")
        if self.n < 1 or self.m < 1:
            raise ValueError("dimensions must be positive")
        if len(self.matrix_seed) != SEED_BYTES:
            raise ValueError(f"matrix seed must be {SEED_BYTES} bytes")

    @property
    def log_q(self) -> int:
        return ceil_log2(self.q)

    @classmethod
    def make(cls, n: int, q: int, m: int | None = None, seed: bytes | None = None,
             security_level: int = 128) -> "Params":
        """Build a parameter set; ``m`` defaults to ``2 * n * ceil(log2 q)``."""
        if m is None:
            m = 2 * n * ceil_log2(q)
        return cls(n=n, q=q, m=m, matrix_seed=seed if seed is not None else bytes(SEED_BYTES),
                   security_level=security_level)

    @classmethod
    def standard(cls, seed: bytes | None = None, security_level: int = 128) -> "Params":
        return cls.make(STANDARD_N, STANDARD_Q, seed=seed, security_level=security_level)


# -- seeded expansion -------------------------------------------------------

class Expander:
    """Deterministic byte stream keyed by ``(seed, tag)``.

    Block ``i`` of the stream is ``SHAKE-256(len(seed) || seed || tag || i)``
    truncated to ``BLOCK`` bytes, with ``len(seed)`` a 2-byte and ``i`` an
    8-byte little-endian integer. Reads consume the stream strictly in order.
    """

    BLOCK = 1 << 10

    def __init__(self, seed: bytes, tag: bytes):
        self._key = len(seed).to_bytes(2, "little") + bytes(seed) + bytes(tag)
        self._counter = 0
        self._buf = bytearray()
        self._pos = 0

    def _refill(self, need: int) -> None:
        del self._buf[: self._pos]
        self._pos = 0
        while len(self._buf) < need:
            block = hashlib.shake_256(self._key + self._counter.to_bytes(8, "little"))
            self._buf += block.digest(self.BLOCK)
            self._counter += 1

    def read(self, length: int) -> bytes:
        if self._pos + length > len(self._buf):
            self._refill(length)
        out = bytes(self._buf[self._pos : self._pos + length])
        self._pos += length
        return out

    # lets an expander stand in wherever a RandomSource is expected
    bytes = read

    def uniform_mod(self, q: int, count: int) -> np.ndarray:
        """``count`` values uniform over Z_q via 16-bit rejection sampling."""
        bound = q * ((1 << 16) // q)
        out = np.empty(count, dtype=np.int64)
        filled = 0
        while filled < count:
            chunk = np.frombuffer(self.read(2 * (count - filled)), dtype="<u2")
            accepted = chunk[chunk < bound]
            out[filled : filled + accepted.size] = accepted
            filled += accepted.size
        return out % q

    def bits(self, count: int) -> np.ndarray:
        raw = np.frombuffer(self.read((count + 7) // 8), dtype=np.uint8)
        return np.unpackbits(raw)[:count].copy()

    def below(self, bound: int) -> int:
        """One integer uniform in ``[0, bound)`` (32-bit rejection sampling)."""
        limit = bound * ((1 << 32) // bound)
        while True:
            u = int.from_bytes(self.read(4), "little")
            if u < limit:
                return u % bound

    def permutation(self, k: int) -> np.ndarray:
        """Uniform permutation of ``k`` elements.

        Sorts ``k`` fresh 64-bit keys; a draw with repeated keys is discarded,
        so the result is exactly uniform.
        """
        while True:
            keys = np.frombuffer(self.read(8 * k), dtype="<u8")
            order = np.argsort(keys, kind="stable")
            if k < 2 or np.all(np.diff(keys[order]) != 0):
                return order.astype(np.int64)


def sample_uniform_matrix(seed: bytes, domain_tag: bytes, rows: int, cols: int, q: int) -> np.ndarray:
    """Row-major ``rows x cols`` matrix over Z_q expanded from ``seed``."""
    values = Expander(seed, domain_tag).uniform_mod(q, rows * cols)
    return values.reshape(rows, cols)


def fingerprint(*chunks: bytes) -> bytes:
    h = hashlib.sha256()
    for chunk in chunks:
        h.update(len(chunk).to_bytes(4, "little"))
        h.update(chunk)
    return h.digest()


# -- binary decomposition -----------------------------------------------------

def bin_decompose(value: int, width: int) -> np.ndarray:
    """``width`` bits of ``value``, most significant bit first."""
    if width < 0 or value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bin_compose(bits) -> int:
    value = 0
    for b in np.asarray(bits).tolist():
        if b not in (0, 1):
            raise ValueError("non-binary entry")
        value = (value << 1) | b
    return value


def ints_to_blocks(values, width: int) -> np.ndarray:
    """Concatenate the MSB-first ``width``-bit decompositions of ``values``."""
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >> width):
        raise ValueError(f"values do not fit in {width} bits")
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def blocks_to_ints(bits, width: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if width == 0:
        raise ValueError("zero-width blocks carry no value")
    if bits.size % width:
        raise ValueError("length is not a multiple of the block width")
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return bits.reshape(-1, width) @ weights


def is_binary(x) -> bool:
    x = np.asarray(x)
    return bool(np.all((x == 0) | (x == 1)))


# -- linear algebra -----------------------------------------------------------

def as_field(x, q: int) -> np.ndarray:
    return np.asarray(x, dtype=np.int64) % q


def mat_vec(M: np.ndarray, x, q: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    if M.shape[1] != x.shape[0]:
        raise ValueError(f"matrix has {M.shape[1]} columns, vector has {x.shape[0]} entries")
    return (M @ x) % q


def mat_vec_mul_add(M1: np.ndarray, x1, M2: np.ndarray, x2, q: int) -> np.ndarray:
    """``M1 @ x1 + M2 @ x2 mod q``."""
    if M1.shape[0] != M2.shape[0]:
        raise ValueError("row counts differ")
    return (mat_vec(M1, x1, q) + mat_vec(M2, x2, q)) % q


def _eliminate(aug: np.ndarray, q: int, rows: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``aug`` (last column is the RHS)."""
    aug = aug.copy()
    pivots: list[int] = []
    r = 0
    for c in range(aug.shape[1] - 1):
        if r == rows:
            break
        nz = np.flatnonzero(aug[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            aug[[r, p]] = aug[[p, r]]
        aug[r] = aug[r] * pow(int(aug[r, c]), -1, q) % q
        col = aug[:, c].copy()
        col[r] = 0
        aug = (aug - np.outer(col, aug[r])) % q
        pivots.append(c)
        r += 1
    return aug, pivots


def solve_linear(M: np.ndarray, v, q: int) -> np.ndarray:
    """Some ``w`` in Z_q^cols with ``M @ w = v mod q``.

    Gaussian elimination with the first nonzero entry (lowest row index) as
    pivot; free variables are set to zero. Raises ``ValueError`` when the
    system is inconsistent.
    """
    M = as_field(M, q)
    v = as_field(v, q)
    rows, cols = M.shape
    if v.shape != (rows,):
        raise ValueError("right-hand side has the wrong length")
    # zero columns never pivot; a column prefix reaching full row rank yields
    # the same pivots as the full matrix
    live = np.flatnonzero(M.any(axis=0))
    w = np.zeros(cols, dtype=np.int64)
    for width in (min(live.size, rows + 32), live.size):
        sub = live[:width]
        aug, pivots = _eliminate(np.column_stack([M[:, sub], v]), q, rows)
        if len(pivots) == rows or width == live.size:
            break
    r = len(pivots)
    if np.any(aug[r:, -1]):
        raise ValueError("inconsistent linear system")
    w[sub[pivots]] = aug[:r, -1]
    return w


# -- permutations -------------------------------------------------------------

def identity_perm(k: int) -> np.ndarray:
    return np.arange(k, dtype=np.int64)


def is_perm(p, k: int | None = None) -> bool:
    p = np.asarray(p)
    if p.ndim != 1 or (k is not None and p.size != k):
        return False
    return bool(np.array_equal(np.sort(p), np.arange(p.size)))


def perm_inverse(p) -> np.ndarray:
    p = np.asarray(p, dtype=np.int64)
    inv = np.empty_like(p)
    inv[p] = np.arange(p.size, dtype=np.int64)
    return inv


def perm_compose(p, s) -> np.ndarray:
    """``p o s``: the permutation ``i -> p(s(i))``."""
    return np.asarray(p, dtype=np.int64)[np.asarray(s, dtype=np.int64)]


def perm_from_one_based(images) -> np.ndarray:
    """Convert ``(pi(1), ..., pi(k))`` into a 0-based index array."""
    p = np.asarray(images, dtype=np.int64) - 1
    if not is_perm(p):
        raise ValueError("not a permutation")
    return p


def fisher_yates(k: int, source: Expander) -> np.ndarray:
    p = np.arange(k, dtype=np.int64)
    for i in range(k - 1, 0, -1):
        j = source.below(i + 1)
        p[i], p[j] = p[j], p[i]
    return p
