"""Character classes, password encoding and the structured block sets.

A block vector is a flat bit vector viewed as consecutive blocks of a fixed
width. ``apply_block_perm(psi, v, width)`` returns the vector whose block
``i`` is block ``psi[i]`` of ``v``.
"""

from __future__ import annotations

import enum
import functools

import numpy as np

from .ring import blocks_to_ints, ceil_log2, identity_perm, ints_to_blocks, is_binary, perm_inverse

CHAR_BITS = 8
PRINTABLE = range(33, 127)
# padding character used to fill passwords up to n_max blocks
PAD_CODE = 0x00


class CharClass(enum.Enum):
    DIGIT = "D"
    SYMBOL = "S"
    LOWER = "L"
    UPPER = "U"
    ALL = "all"
    NON_PRINTABLE = "np"


POLICY_CLASSES = (CharClass.DIGIT, CharClass.SYMBOL, CharClass.LOWER, CharClass.UPPER)


def classify_char(code: int) -> CharClass:
    if not 0 <= code <= 255:
        raise ValueError(f"{code} is not an 8-bit code")
    if 48 <= code <= 57:
        return CharClass.DIGIT
    if 65 <= code <= 90:
        return CharClass.UPPER
    if 97 <= code <= 122:
        return CharClass.LOWER
    if 33 <= code <= 126:
        return CharClass.SYMBOL
    return CharClass.NON_PRINTABLE


def is_printable(code: int) -> bool:
    return 33 <= code <= 126


@functools.lru_cache(maxsize=None)
def class_codes(cls: CharClass) -> tuple[int, ...]:
    """Codes of ``cls`` in ascending order."""
    if cls is CharClass.ALL:
        return tuple(PRINTABLE)
    if cls is CharClass.NON_PRINTABLE:
        raise ValueError("the non-printable class is not a password alphabet")
    return tuple(c for c in PRINTABLE if classify_char(c) is cls)


@functools.lru_cache(maxsize=None)
def _code_array(cls: CharClass) -> np.ndarray:
    out = np.array(class_codes(cls), dtype=np.int64)
    out.setflags(write=False)
    return out


CLASS_SIZES = {cls: len(class_codes(cls)) for cls in (*POLICY_CLASSES, CharClass.ALL)}


def encode_char(code: int) -> np.ndarray:
    if not 0 <= code <= 255:
        raise ValueError(f"{code} is not an 8-bit code")
    return ints_to_blocks([code], CHAR_BITS)


def decode_char(bits) -> int:
    bits = np.asarray(bits)
    if bits.shape != (CHAR_BITS,) or not is_binary(bits):
        raise ValueError("expected 8 bits")
    return int(blocks_to_ints(bits, CHAR_BITS)[0])


def encode_password(pw: str) -> np.ndarray:
    codes = [ord(c) for c in pw]
    for i, code in enumerate(codes):
        if not is_printable(code):
            raise ValueError(f"character at index {i} is not printable ASCII")
    return ints_to_blocks(codes, CHAR_BITS)


def decode_password(bits) -> str:
    return "".join(chr(c) for c in blocks_to_ints(bits, CHAR_BITS))


def _blocks(v, width: int, count: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1 or width < 1 or v.size % width:
        raise ValueError(f"length {v.size} is not a multiple of block width {width}")
    if count is not None and v.size != count * width:
        raise ValueError(f"expected {count} blocks of width {width}, got {v.size // width}")
    return v.reshape(-1, width)


def apply_block_perm(psi, v, width: int) -> np.ndarray:
    if width == 0 and np.asarray(v).size == 0:
        return np.asarray(v).copy()  # zero-width blocks: nothing to move
    blocks = _blocks(v, width)
    psi = np.asarray(psi, dtype=np.int64)
    if psi.size != blocks.shape[0]:
        raise ValueError(f"permutation of size {psi.size} applied to {blocks.shape[0]} blocks")
    return blocks[psi].reshape(-1)


def invert_block_perm(psi, v, width: int) -> np.ndarray:
    return apply_block_perm(perm_inverse(psi), v, width)


def is_balanced(x, half: int) -> bool:
    """Membership of ``x`` in the length-``2*half`` vectors of weight ``half``."""
    x = np.asarray(x)
    if x.shape != (2 * half,):
        raise ValueError(f"expected length {2 * half}, got {x.size}")
    return is_binary(x) and int(x.sum()) == half


def is_set_alpha(v, cls: CharClass) -> bool:
    """Blocks of ``v`` are exactly the encodings of ``cls``, each once."""
    codes = class_codes(cls)
    blocks = _blocks(v, CHAR_BITS, len(codes))
    if not is_binary(blocks):
        return False
    return bool(np.array_equal(np.sort(blocks_to_ints(blocks, CHAR_BITS)), _code_array(cls)))


def nmax_width(n_max: int) -> int:
    return ceil_log2(n_max)


def is_set_nmax(v, n_max: int) -> bool:
    """Blocks of ``v`` are exactly ``bin(0), ..., bin(n_max - 1)``, each once."""
    width = nmax_width(n_max)
    if width == 0:  # n_max = 1: the single block is the empty string
        return n_max == 1 and np.asarray(v).size == 0
    blocks = _blocks(v, width, n_max)
    if not is_binary(blocks):
        return False
    return bool(np.array_equal(np.sort(blocks_to_ints(blocks, width)), np.arange(n_max)))


def perm_to_blocks(chi) -> np.ndarray:
    chi = np.asarray(chi, dtype=np.int64)
    return ints_to_blocks(chi, nmax_width(chi.size))


def blocks_to_perm(v, n_max: int) -> np.ndarray:
    if not is_set_nmax(v, n_max):
        raise ValueError("vector does not encode a permutation")
    if n_max == 1:
        return identity_perm(1)
    return blocks_to_ints(v, nmax_width(n_max)).astype(np.int64)
