"""Reduce "the password behind ``h`` satisfies policy ``f``" to a Stern statement.

The witness vector has the layout::

    w = ( e0 | x*_1 | ... | x*_{n_min} | z* )

``e0`` encodes the pre-hash salt, each ``x*`` extends the block at one
disclosed position (``Delta``) to every encoding of that slot's character
class, and ``z*`` extends the remaining blocks plus the hash randomness to a
balanced binary vector. ``M`` mirrors the layout: the matching columns of
``A`` and ``B``, with zero columns under every padding entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .encoding import (
    CHAR_BITS,
    CLASS_SIZES,
    POLICY_CLASSES,
    CharClass,
    blocks_to_perm,
    classify_char,
    class_codes,
    decode_char,
    invert_block_perm,
    is_printable,
    perm_to_blocks,
)
from .frames import Reader, Writer
from .ktx import StringCommitKey
from .policy import Policy, PolicyError, evaluate
from .pwhash import PublicParams, pre_hash
from .ring import Params, RandomSource, ints_to_blocks, perm_inverse
from .stern import (
    Balanced,
    CharClassSet,
    HonestProver,
    PermElement,
    PermutationCode,
    SessionResult,
    Statement,
    ValidityProfile,
    WireMode,
    round_size,
    run_prover,
    run_verifier,
)

SLOT_ORDER = (*POLICY_CLASSES, CharClass.ALL)


@lru_cache(maxsize=8)
def com_key(params: Params) -> StringCommitKey:
    return StringCommitKey.derive(params)


def check_compatible(pp: PublicParams, f: Policy) -> None:
    if f.n_max != pp.n_max:
        raise PolicyError(f"policy n_max={f.n_max} differs from the hashing n_max={pp.n_max}")
    if f.n_min < pp.n_min:
        raise PolicyError(f"policy n_min={f.n_min} is below the hashing n_min={pp.n_min}")


@dataclass(frozen=True)
class Delta:
    """Disclosed 1-based positions inside the pre-hash value, one list per class."""

    D: tuple[int, ...] = ()
    S: tuple[int, ...] = ()
    L: tuple[int, ...] = ()
    U: tuple[int, ...] = ()
    all: tuple[int, ...] = ()

    def by_class(self) -> list[tuple[CharClass, tuple[int, ...]]]:
        return list(zip(SLOT_ORDER, (self.D, self.S, self.L, self.U, self.all)))

    def slots(self) -> list[tuple[CharClass, int]]:
        return [(cls, pos) for cls, positions in self.by_class() for pos in positions]

    def positions(self) -> list[int]:
        return [pos for _, pos in self.slots()]

    def validate(self, f: Policy) -> None:
        counts = [len(p) for _, p in self.by_class()]
        if counts != [*f.counts, f.k_all]:
            raise ValueError("Delta does not match the policy's slot counts")
        pos = self.positions()
        if len(set(pos)) != len(pos) or not all(1 <= p <= f.n_max for p in pos):
            raise ValueError("Delta positions must be distinct and lie in [1, n_max]")

    def to_bytes(self) -> bytes:
        out = Writer()
        for _, positions in self.by_class():
            out.u16s(positions)
        return out.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Delta":
        inp = Reader(data)
        lists = [tuple(int(p) for p in inp.u16s()) for _ in SLOT_ORDER]
        inp.finish()
        return cls(*lists)


def derive_delta(pp: PublicParams, pw: str, chi, f: Policy) -> Delta:
    """Greedy first-match assignment of password characters to policy slots."""
    check_compatible(pp, f)
    if not evaluate(f, pw):
        raise PolicyError("password does not satisfy the policy")
    claimed: set[int] = set()
    chosen: dict[CharClass, list[int]] = {cls: [] for cls in SLOT_ORDER}
    for cls in SLOT_ORDER:
        need = f.minimum(cls)
        for j, c in enumerate(pw):
            if len(chosen[cls]) == need:
                break
            if j not in claimed and (cls is CharClass.ALL or classify_char(ord(c)) is cls):
                claimed.add(j)
                chosen[cls].append(j)
    # source block j sits at pre-hash position i with chi(i) = j
    where = perm_inverse(chi)
    lists = [tuple(int(where[j]) + 1 for j in chosen[cls]) for cls in SLOT_ORDER]
    return Delta(*lists)


def segment_profile(pp: PublicParams, f: Policy, delta: Delta) -> ValidityProfile:
    z_half = CHAR_BITS * (f.n_max - f.n_min) + pp.params.m
    segments = [PermutationCode(pp.n_max, pp.perm_bits)]
    segments += [CharClassSet(cls) for cls, _ in delta.slots()]
    segments.append(Balanced(z_half))
    return ValidityProfile(tuple(segments))


def witness_length(pp: PublicParams, f: Policy) -> int:
    return (pp.n_max * pp.perm_bits
            + CHAR_BITS * sum(k * CLASS_SIZES[cls] for cls, k in zip(POLICY_CLASSES, f.counts))
            + CHAR_BITS * f.k_all * CLASS_SIZES[CharClass.ALL]
            + 2 * (CHAR_BITS * (f.n_max - f.n_min) + pp.params.m))


@dataclass
class WitnessBundle:
    w: np.ndarray
    profile: ValidityProfile
    x: np.ndarray
    r: np.ndarray
    chi: np.ndarray


def _free_positions(f: Policy, delta: Delta) -> list[int]:
    taken = set(delta.positions())
    return [p for p in range(1, f.n_max + 1) if p not in taken]


def build_witness(pp: PublicParams, pw: str, chi, r, f: Policy, delta: Delta) -> WitnessBundle:
    check_compatible(pp, f)
    delta.validate(f)
    chi = np.asarray(chi, dtype=np.int64)
    r = np.asarray(r, dtype=np.uint8)
    if r.shape != (pp.params.m,):
        raise ValueError("hash randomness has the wrong length")
    P = pre_hash(pp, pw, chi)
    blocks = P.reshape(pp.n_max, CHAR_BITS)
    parts = [perm_to_blocks(chi)]
    for cls, pos in delta.slots():
        code = decode_char(blocks[pos - 1])
        codes = class_codes(cls)
        if code not in codes:
            raise ValueError(f"position {pos} does not hold a {cls.name} character")
        rest = [c for c in codes if c != code]
        parts.append(np.concatenate([blocks[pos - 1], ints_to_blocks(rest, CHAR_BITS)]))
    y = np.concatenate([blocks[p - 1] for p in _free_positions(f, delta)] or
                       [np.zeros(0, dtype=np.uint8)])
    z = np.concatenate([y, r])
    weight = int(z.sum())
    parts.append(np.concatenate([z, np.ones(z.size - weight, np.uint8),
                                 np.zeros(weight, np.uint8)]))
    w = np.concatenate(parts).astype(np.uint8)
    profile = segment_profile(pp, f, delta)
    if not profile.contains(w):
        raise ValueError("assembled witness is not in VALID")
    return WitnessBundle(w, profile, np.concatenate([perm_to_blocks(chi), P]), r, chi)


def build_statement(pp: PublicParams, f: Policy, delta: Delta, h) -> Statement:
    check_compatible(pp, f)
    delta.validate(f)
    params = pp.params
    A, B = pp.A, pp.B
    e0_cols = pp.n_max * pp.perm_bits

    def block_cols(pos: int) -> np.ndarray:
        start = e0_cols + CHAR_BITS * (pos - 1)
        return A[:, start : start + CHAR_BITS]

    def zeros(k: int) -> np.ndarray:
        return np.zeros((params.n, k), dtype=np.int64)

    cols = [A[:, :e0_cols]]
    for cls, pos in delta.slots():
        cols += [block_cols(pos), zeros(CHAR_BITS * (CLASS_SIZES[cls] - 1))]
    cols += [block_cols(p) for p in _free_positions(f, delta)]
    cols += [B, zeros(CHAR_BITS * (f.n_max - f.n_min) + params.m)]
    M = np.ascontiguousarray(np.concatenate(cols, axis=1))
    v = np.asarray(h, dtype=np.int64) % params.q
    return Statement(M, v, segment_profile(pp, f, delta), com_key(params))


def gamma_apply(profile: ValidityProfile, phi: PermElement, w) -> np.ndarray:
    return profile.gamma(phi, w)


@dataclass
class Opening:
    chi: np.ndarray
    P: np.ndarray
    r: np.ndarray


def extract_opening(w, pp: PublicParams, f: Policy, delta: Delta) -> Opening:
    """Undo the witness transformations: pre-hash salt, pre-hash value, randomness."""
    profile = segment_profile(pp, f, delta)
    if not profile.contains(w):
        raise ValueError("vector is not in VALID")
    parts = profile.split(np.asarray(w, dtype=np.uint8))
    chi = blocks_to_perm(parts[0], pp.n_max)
    blocks = np.zeros((pp.n_max, CHAR_BITS), dtype=np.uint8)
    for (cls, pos), part in zip(delta.slots(), parts[1:-1]):
        blocks[pos - 1] = part[:CHAR_BITS]
    free = _free_positions(f, delta)
    z = parts[-1]
    y = z[: CHAR_BITS * len(free)].reshape(-1, CHAR_BITS)
    for pos, block in zip(free, y):
        blocks[pos - 1] = block
    r = z[CHAR_BITS * len(free) : CHAR_BITS * len(free) + pp.params.m]
    return Opening(chi, blocks.reshape(-1), r.copy())


def extract_password(w, pp: PublicParams, f: Policy, delta: Delta) -> str:
    opening = extract_opening(w, pp, f, delta)
    e = invert_block_perm(opening.chi, opening.P, CHAR_BITS).reshape(-1, CHAR_BITS)
    codes = [decode_char(block) for block in e]
    pw = "".join(chr(c) for c in codes if is_printable(c))
    if not evaluate(f, pw):
        raise ValueError("extracted password violates the policy")
    return pw


@dataclass(frozen=True)
class CommCost:
    ell: int
    log_q: int
    round_bytes: dict  # (mode, challenge) -> bytes per round

    @property
    def bound_bits(self) -> int:
        return self.ell * self.log_q

    @property
    def bound_bytes(self) -> float:
        return self.bound_bits / 8

    def worst_round(self, mode: WireMode = WireMode.COMPACT) -> int:
        return max(self.round_bytes[mode, ch] for ch in (1, 2, 3))

    def mean_round(self, mode: WireMode = WireMode.COMPACT) -> float:
        return sum(self.round_bytes[mode, ch] for ch in (1, 2, 3)) / 3

    def total_bits(self, kappa: int) -> int:
        return kappa * self.bound_bits

    def expected_total_bytes(self, kappa: int, mode: WireMode = WireMode.COMPACT) -> float:
        return kappa * self.mean_round(mode)


def comm_cost(pp: PublicParams, f: Policy) -> CommCost:
    """Communication cost model from the serialization layout of one round."""
    # sizes depend on the slot counts only, not on where the slots sit
    delta = Delta(*_dummy_positions(f))
    profile = segment_profile(pp, f, delta)
    sizes = {(mode, ch): round_size(profile, pp.params, ch, mode)
             for mode in WireMode for ch in (1, 2, 3)}
    return CommCost(profile.length, pp.params.log_q, sizes)


def _dummy_positions(f: Policy) -> list[tuple[int, ...]]:
    out, nxt = [], 1
    for k in (*f.counts, f.k_all):
        out.append(tuple(range(nxt, nxt + k)))
        nxt += k
    return out


# -- session drivers ----------------------------------------------------------

def prove(pp: PublicParams, f: Policy, pw: str, chi, r, h, delta: Delta, kappa: int,
          transport, rng: RandomSource | None = None,
          mode: WireMode = WireMode.COMPACT) -> bool:
    st = build_statement(pp, f, delta, h)
    bundle = build_witness(pp, pw, chi, r, f, delta)
    return run_prover(transport, HonestProver(st, bundle.w, rng), kappa, st, mode)


def verify(pp: PublicParams, f: Policy, delta: Delta, h, kappa: int, transport,
           rng: RandomSource | None = None, mode: WireMode = WireMode.COMPACT) -> SessionResult:
    st = build_statement(pp, f, delta, h)
    return run_verifier(transport, st, kappa, rng, mode)

