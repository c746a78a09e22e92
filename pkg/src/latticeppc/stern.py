"""Stern-like zero-knowledge argument for ``M @ w = v mod q`` with ``w`` in VALID.

VALID is described by a :class:`ValidityProfile`: an ordered list of segments,
each carrying its own membership test and permutation action. The group
element ``phi`` holds one permutation per segment and ``gamma`` applies them
segment-wise.

Each round runs commit / challenge / respond. ``C1`` binds ``(phi, M r_w)``,
``C2`` binds ``gamma(r_w)`` and ``C3`` binds ``gamma(w + r_w)``. All round
randomness (``r_w``, ``phi`` and the three commitment openings) is expanded
from fresh 32-byte seeds, which lets the compact wire mode ship seeds instead
of the expanded values.
"""

from __future__ import annotations

import enum
import logging
import threading
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .encoding import (
    CHAR_BITS,
    CharClass,
    apply_block_perm,
    class_codes,
    is_balanced,
    is_set_alpha,
    is_set_nmax,
)
from .frames import (
    DEFAULT_TIMEOUT,
    HEADER,
    FrameError,
    LoopbackTransport,
    MessageTag,
    ProtocolError,
    Reader,
    RemoteError,
    Writer,
)
from .ktx import StringCommitKey, commit_digest
from .ring import (
    SEED_BYTES,
    Expander,
    Params,
    RandomSource,
    default_source,
    ints_to_blocks,
    is_binary,
    is_perm,
    perm_inverse,
    solve_linear,
)

log = logging.getLogger(__name__)

TAG_PHI = b"stern-phi"
TAG_RHO = b"stern-rho"
TAG_RW = b"stern-rw"
TAG_VALID = b"stern-valid"
TAG_CHALLENGE = b"stern-challenge"


# -- validity profiles --------------------------------------------------------

@dataclass(frozen=True)
class PermutationCode:
    """``n_blocks`` blocks holding ``bin(0) .. bin(n_blocks - 1)`` in some order."""

    n_blocks: int
    block_bits: int

    @property
    def length(self) -> int:
        return self.n_blocks * self.block_bits

    @property
    def perm_size(self) -> int:
        return self.n_blocks

    def contains(self, x) -> bool:
        return is_set_nmax(x, self.n_blocks)

    def apply(self, perm, x) -> np.ndarray:
        return apply_block_perm(perm, x, self.block_bits)

    def sample_member(self, source: Expander) -> np.ndarray:
        return ints_to_blocks(source.permutation(self.n_blocks), self.block_bits)


@dataclass(frozen=True)
class CharClassSet:
    """8-bit blocks that are exactly the encodings of one character class."""

    cls: CharClass

    @property
    def length(self) -> int:
        return CHAR_BITS * self.perm_size

    @property
    def perm_size(self) -> int:
        return len(class_codes(self.cls))

    def contains(self, x) -> bool:
        return is_set_alpha(x, self.cls)

    def apply(self, perm, x) -> np.ndarray:
        return apply_block_perm(perm, x, CHAR_BITS)

    def sample_member(self, source: Expander) -> np.ndarray:
        codes = np.asarray(class_codes(self.cls), dtype=np.int64)
        return ints_to_blocks(codes[source.permutation(codes.size)], CHAR_BITS)


@dataclass(frozen=True)
class Balanced:
    """Binary vectors of length ``2 * half`` and Hamming weight ``half``."""

    half: int

    @property
    def length(self) -> int:
        return 2 * self.half

    @property
    def perm_size(self) -> int:
        return 2 * self.half

    def contains(self, x) -> bool:
        return is_balanced(x, self.half)

    def apply(self, perm, x) -> np.ndarray:
        return np.asarray(x)[np.asarray(perm, dtype=np.int64)]

    def sample_member(self, source: Expander) -> np.ndarray:
        base = np.repeat(np.array([1, 0], dtype=np.uint8), self.half)
        return base[source.permutation(base.size)]


Segment = Union[PermutationCode, CharClassSet, Balanced]


@dataclass(frozen=True, eq=False)
class PermElement:
    perms: tuple
    seed: bytes | None = field(default=None, compare=False)

    def inverse(self) -> "PermElement":
        return PermElement(tuple(perm_inverse(p) for p in self.perms))

    def __eq__(self, other):
        return (isinstance(other, PermElement) and len(self.perms) == len(other.perms)
                and all(np.array_equal(a, b) for a, b in zip(self.perms, other.perms)))


@dataclass(frozen=True)
class ValidityProfile:
    segments: tuple

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        return tuple(np.cumsum([0] + [s.length for s in self.segments]).tolist())

    @property
    def length(self) -> int:
        return self.offsets[-1]

    def split(self, w) -> list[np.ndarray]:
        w = np.asarray(w)
        if w.shape != (self.length,):
            raise ValueError(f"expected a vector of length {self.length}, got {w.shape}")
        o = self.offsets
        return [w[o[i] : o[i + 1]] for i in range(len(self.segments))]

    def contains(self, w) -> bool:
        w = np.asarray(w)
        if w.shape != (self.length,) or not is_binary(w):
            return False
        return all(s.contains(part) for s, part in zip(self.segments, self.split(w)))

    def check_phi(self, phi: PermElement) -> bool:
        return len(phi.perms) == len(self.segments) and all(
            is_perm(p, s.perm_size) for s, p in zip(self.segments, phi.perms))

    def gamma(self, phi: PermElement, w) -> np.ndarray:
        """Apply ``Gamma_phi``; works on binary and Z_q vectors alike."""
        if not self.check_phi(phi):
            raise ValueError("permutation element does not match the profile")
        parts = [s.apply(p, part) for s, p, part in zip(self.segments, phi.perms, self.split(w))]
        return np.concatenate(parts)

    def gamma_inverse(self, phi: PermElement, w) -> np.ndarray:
        return self.gamma(phi.inverse(), w)

    def phi_from_seed(self, seed: bytes) -> PermElement:
        source = Expander(seed, TAG_PHI)
        return PermElement(tuple(source.permutation(s.perm_size) for s in self.segments), seed)

    def sample_phi(self, rng: RandomSource | None = None) -> PermElement:
        return self.phi_from_seed(default_source(rng).bytes(SEED_BYTES))

    def sample_member(self, rng: RandomSource | None = None) -> np.ndarray:
        source = Expander(default_source(rng).bytes(SEED_BYTES), TAG_VALID)
        return np.concatenate([s.sample_member(source) for s in self.segments])


# -- statements ---------------------------------------------------------------

@dataclass(frozen=True)
class Statement:
    """Public input ``(M, v)``, the shape of VALID and the commitment key."""

    M: np.ndarray = field(repr=False)
    v: np.ndarray
    profile: ValidityProfile
    com: StringCommitKey = field(repr=False)

    def __post_init__(self):
        n = self.com.params.n
        if self.M.shape != (n, self.profile.length) or self.v.shape != (n,):
            raise ValueError("statement dimensions do not match the profile")

    @property
    def q(self) -> int:
        return self.com.params.q

    @property
    def m(self) -> int:
        return self.com.params.m

    @property
    def ell(self) -> int:
        return self.profile.length

    @cached_property
    def _live(self) -> tuple[np.ndarray, np.ndarray]:
        cols = np.flatnonzero(self.M.any(axis=0))
        return cols, np.ascontiguousarray(self.M[:, cols])

    def apply(self, x) -> np.ndarray:
        """``M @ x mod q``, skipping zero columns."""
        cols, M_live = self._live
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.ell,):
            raise ValueError("vector length does not match M")
        return (M_live @ x[cols]) % self.q

    def is_witness(self, w) -> bool:
        return self.profile.contains(w) and bool(np.array_equal(self.apply(w), self.v))

    @cached_property
    def particular_solution(self) -> np.ndarray:
        """Some (generally non-binary) ``w'`` with ``M w' = v``."""
        return solve_linear(self.M, self.v, self.q)


# -- commitment messages ------------------------------------------------------

def com_message(tag: int, *components) -> bytes:
    """Canonical COM input: tag byte, then each component length-prefixed."""
    out = Writer().u8(tag)
    for comp in components:
        if isinstance(comp, PermElement):
            for p in comp.perms:
                out.blob(np.asarray(p, dtype="<u2").tobytes())
        else:
            out.blob(np.asarray(comp, dtype="<u2").tobytes())
    return out.getvalue()


@dataclass(frozen=True)
class ComRandomness:
    bits: np.ndarray
    seed: bytes | None = None

    @classmethod
    def from_seed(cls, seed: bytes, m: int) -> "ComRandomness":
        return cls(Expander(seed, TAG_RHO).bits(m), seed)

    @classmethod
    def sample(cls, m: int, rng: RandomSource) -> "ComRandomness":
        return cls.from_seed(rng.bytes(SEED_BYTES), m)


def com(st: Statement, tag: int, components: tuple, rho: ComRandomness) -> np.ndarray:
    msg = com_message(tag, *components)
    return commit_digest(st.com, st.com.digest(msg), rho.bits)


def _c1(st, phi, value, rho):
    return com(st, 1, (phi, value), rho)


def _c2(st, value, rho):
    return com(st, 2, (value,), rho)


def _c3(st, value, rho):
    return com(st, 3, (value,), rho)


# -- transcript types ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RoundCommitment:
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray

    def __eq__(self, other):
        return isinstance(other, RoundCommitment) and all(
            np.array_equal(a, b) for a, b in zip((self.c1, self.c2, self.c3),
                                                 (other.c1, other.c2, other.c3)))


@dataclass(frozen=True)
class Response1:
    t_w: np.ndarray
    t_r: np.ndarray
    rho2: ComRandomness
    rho3: ComRandomness
    ch = 1


@dataclass(frozen=True)
class Response2:
    phi: PermElement
    w2: np.ndarray
    rho1: ComRandomness
    rho3: ComRandomness
    ch = 2


@dataclass(frozen=True)
class Response3:
    phi: PermElement
    w3: np.ndarray
    rho1: ComRandomness
    rho2: ComRandomness
    ch = 3


Response = Union[Response1, Response2, Response3]
CHALLENGES = (1, 2, 3)


@dataclass(frozen=True)
class Transcript:
    cmt: RoundCommitment
    ch: int
    rsp: Response


# -- prover -------------------------------------------------------------------

@dataclass
class _RoundSecrets:
    st: Statement
    w: np.ndarray  # binary witness, or the simulator's stand-in
    r_w: np.ndarray
    phi: PermElement
    rho: tuple

    @classmethod
    def sample(cls, st: Statement, w, rng: RandomSource) -> "_RoundSecrets":
        r_w = Expander(rng.bytes(SEED_BYTES), TAG_RW).uniform_mod(st.q, st.ell)
        phi = st.profile.phi_from_seed(rng.bytes(SEED_BYTES))
        rho = tuple(ComRandomness.sample(st.m, rng) for _ in range(3))
        return cls(st, np.asarray(w, dtype=np.int64), r_w, phi, rho)

    def commitment(self, c1_value=None) -> RoundCommitment:
        st, gamma = self.st, self.st.profile.gamma
        if c1_value is None:
            c1_value = st.apply(self.r_w)
        return RoundCommitment(
            _c1(st, self.phi, c1_value, self.rho[0]),
            _c2(st, gamma(self.phi, self.r_w), self.rho[1]),
            _c3(st, gamma(self.phi, (self.w + self.r_w) % st.q), self.rho[2]),
        )

    def response(self, ch: int) -> Response:
        st, gamma = self.st, self.st.profile.gamma
        if ch == 1:
            return Response1(gamma(self.phi, self.w).astype(np.uint8), gamma(self.phi, self.r_w),
                             self.rho[1], self.rho[2])
        if ch == 2:
            return Response2(self.phi, (self.w + self.r_w) % st.q, self.rho[0], self.rho[2])
        if ch == 3:
            return Response3(self.phi, self.r_w, self.rho[0], self.rho[1])
        raise ValueError(f"challenge must be 1, 2 or 3, got {ch}")


class StateReuseError(RuntimeError):
    pass


class ProverState:
    """Round secrets of an honest prover; answers exactly one challenge."""

    def __init__(self, secrets: _RoundSecrets):
        self._secrets = secrets
        self._used = False

    def respond(self, ch: int) -> Response:
        if self._used:
            raise StateReuseError("prover state already answered a challenge")
        rsp = self._secrets.response(ch)
        self._used = True
        return rsp


def commit(st: Statement, w, rng: RandomSource | None = None,
           check: bool = True) -> tuple[RoundCommitment, ProverState]:
    if check and not st.is_witness(w):
        raise ValueError("w is not a witness for the statement")
    secrets = _RoundSecrets.sample(st, w, default_source(rng))
    return secrets.commitment(), ProverState(secrets)


def respond(state: ProverState, ch: int) -> Response:
    return state.respond(ch)


# -- verifier -----------------------------------------------------------------

def _field_ok(st: Statement, x) -> bool:
    x = np.asarray(x)
    return x.shape == (st.ell,) and bool(np.all((x >= 0) & (x < st.q)))


def _rho_ok(st: Statement, rho) -> bool:
    return (isinstance(rho, ComRandomness) and rho.bits.shape == (st.m,)
            and is_binary(rho.bits))


def _eq(a, b) -> bool:
    return bool(np.array_equal(a, b))


def verify_round(st: Statement, cmt: RoundCommitment, ch: int, rsp: Response) -> bool:
    """Run the verification checks for one round; malformed input rejects."""
    gamma, q = st.profile.gamma, st.q
    try:
        if ch == 1 and isinstance(rsp, Response1):
            if not (_field_ok(st, rsp.t_r) and _rho_ok(st, rsp.rho2) and _rho_ok(st, rsp.rho3)):
                return False
            if not st.profile.contains(rsp.t_w):
                return False
            t_w = np.asarray(rsp.t_w, dtype=np.int64)
            return (_eq(cmt.c2, _c2(st, rsp.t_r, rsp.rho2))
                    and _eq(cmt.c3, _c3(st, (t_w + rsp.t_r) % q, rsp.rho3)))
        if ch == 2 and isinstance(rsp, Response2):
            if not (_field_ok(st, rsp.w2) and st.profile.check_phi(rsp.phi)
                    and _rho_ok(st, rsp.rho1) and _rho_ok(st, rsp.rho3)):
                return False
            lhs = (st.apply(rsp.w2) - st.v) % q
            return (_eq(cmt.c1, _c1(st, rsp.phi, lhs, rsp.rho1))
                    and _eq(cmt.c3, _c3(st, gamma(rsp.phi, rsp.w2), rsp.rho3)))
        if ch == 3 and isinstance(rsp, Response3):
            if not (_field_ok(st, rsp.w3) and st.profile.check_phi(rsp.phi)
                    and _rho_ok(st, rsp.rho1) and _rho_ok(st, rsp.rho2)):
                return False
            return (_eq(cmt.c1, _c1(st, rsp.phi, st.apply(rsp.w3), rsp.rho1))
                    and _eq(cmt.c2, _c2(st, gamma(rsp.phi, rsp.w3), rsp.rho2)))
    except (ValueError, TypeError, AttributeError):
        return False
    return False


# -- simulator ----------------------------------------------------------------

@dataclass
class SimState:
    predicted: int
    secrets: _RoundSecrets
    _used: bool = False

    def respond(self, ch: int) -> Response | None:
        """The simulated answer, or ``None`` (abort) when ``ch`` was predicted."""
        if self._used:
            raise StateReuseError("simulator state already answered a challenge")
        self._used = True
        if ch == self.predicted:
            return None
        return self.secrets.response(ch)


def sim_commit(st: Statement, rng: RandomSource | None = None,
               predicted: int | None = None) -> tuple[RoundCommitment, SimState]:
    """Commitment of the witness-less simulator, betting ``Ch != predicted``."""
    rng = default_source(rng)
    if predicted is None:
        predicted = Expander(rng.bytes(SEED_BYTES), TAG_CHALLENGE).below(3) + 1
    if predicted == 1:
        w_prime = st.particular_solution
    else:
        w_prime = st.profile.sample_member(rng)
    secrets = _RoundSecrets.sample(st, w_prime, rng)
    if predicted == 3:
        cmt = secrets.commitment(c1_value=(st.apply((secrets.w + secrets.r_w) % st.q) - st.v) % st.q)
    else:
        cmt = secrets.commitment()
    return cmt, SimState(predicted, secrets)


def simulate(st: Statement, rng: RandomSource | None = None) -> Transcript | None:
    """One simulated transcript against an honest challenge; ``None`` on abort."""
    rng = default_source(rng)
    cmt, state = sim_commit(st, rng)
    ch = sample_challenges(1, rng)[0]
    rsp = state.respond(ch)
    return None if rsp is None else Transcript(cmt, ch, rsp)


# -- extractor ----------------------------------------------------------------

class ExtractionError(ValueError):
    pass


def extract(st: Statement, cmt: RoundCommitment, rsp1: Response1, rsp2: Response2,
            rsp3: Response3) -> np.ndarray:
    """Witness from valid answers to all three challenges of one commitment."""
    for ch, rsp in zip(CHALLENGES, (rsp1, rsp2, rsp3)):
        if not verify_round(st, cmt, ch, rsp):
            raise ExtractionError(f"response to challenge {ch} does not verify")
    w = st.profile.gamma_inverse(rsp2.phi, np.asarray(rsp1.t_w, dtype=np.int64))
    if not st.is_witness(w):
        # only possible if the commitment binding was broken
        raise ExtractionError("extracted vector is not a witness")
    return w.astype(np.uint8)


# -- transcript serialization -------------------------------------------------

class WireMode(enum.Enum):
    """``plain`` ships every value; ``compact`` ships seeds and packs Z_q vectors."""

    PLAIN = "plain"
    COMPACT = "compact"


def _put_field(out: Writer, st: Statement, x, mode: WireMode) -> None:
    if mode is WireMode.COMPACT:
        out.packed(x, st.com.params.log_q)
    else:
        out.u16s(x)


def _get_field(inp: Reader, st: Statement, mode: WireMode) -> np.ndarray:
    if mode is WireMode.COMPACT:
        x = inp.packed(st.com.params.log_q, st.ell)
    else:
        x = inp.u16s(st.ell)
    if np.any(x >= st.q):
        raise FrameError("field element out of range")
    return x


def _need_seed(seed: bytes | None) -> bytes:
    if seed is None:
        raise FrameError("compact mode needs seeded randomness")
    return seed


def _put_rho(out: Writer, rho: ComRandomness, mode: WireMode) -> None:
    if mode is WireMode.COMPACT:
        out.blob(_need_seed(rho.seed))
    else:
        out.bits(rho.bits)


def _get_rho(inp: Reader, st: Statement, mode: WireMode) -> ComRandomness:
    if mode is WireMode.COMPACT:
        return ComRandomness.from_seed(inp.blob(SEED_BYTES), st.m)
    return ComRandomness(inp.bits(st.m))


def _put_phi(out: Writer, phi: PermElement, mode: WireMode) -> None:
    if mode is WireMode.COMPACT:
        out.blob(_need_seed(phi.seed))
        return
    out.u32(len(phi.perms))
    for p in phi.perms:
        out.u16s(p)


def _get_phi(inp: Reader, st: Statement, mode: WireMode) -> PermElement:
    if mode is WireMode.COMPACT:
        return st.profile.phi_from_seed(inp.blob(SEED_BYTES))
    segments = st.profile.segments
    if inp.u32() != len(segments):
        raise FrameError("permutation element has the wrong number of parts")
    return PermElement(tuple(inp.u16s(s.perm_size) for s in segments))


def write_commitment(out: Writer, cmt: RoundCommitment) -> None:
    for c in (cmt.c1, cmt.c2, cmt.c3):
        out.u16s(c)


def read_commitment(inp: Reader, st: Statement) -> RoundCommitment:
    parts = []
    for _ in range(3):
        c = inp.u16s(st.com.params.n)
        if np.any(c >= st.q):
            raise FrameError("commitment entry out of range")
        parts.append(c)
    return RoundCommitment(*parts)


def write_response(out: Writer, st: Statement, rsp: Response, mode: WireMode) -> None:
    out.u8(rsp.ch)
    if isinstance(rsp, Response1):
        out.bits(rsp.t_w)
        _put_field(out, st, rsp.t_r, mode)
        _put_rho(out, rsp.rho2, mode)
        _put_rho(out, rsp.rho3, mode)
    else:
        vec, ra, rb = ((rsp.w2, rsp.rho1, rsp.rho3) if isinstance(rsp, Response2)
                       else (rsp.w3, rsp.rho1, rsp.rho2))
        _put_phi(out, rsp.phi, mode)
        _put_field(out, st, vec, mode)
        _put_rho(out, ra, mode)
        _put_rho(out, rb, mode)


def read_response(inp: Reader, st: Statement, mode: WireMode) -> Response:
    ch = inp.u8()
    if ch == 1:
        t_w = inp.bits(st.ell)
        t_r = _get_field(inp, st, mode)
        return Response1(t_w, t_r, _get_rho(inp, st, mode), _get_rho(inp, st, mode))
    if ch in (2, 3):
        phi = _get_phi(inp, st, mode)
        vec = _get_field(inp, st, mode)
        ra, rb = _get_rho(inp, st, mode), _get_rho(inp, st, mode)
        return Response2(phi, vec, ra, rb) if ch == 2 else Response3(phi, vec, ra, rb)
    raise FrameError(f"unknown challenge tag {ch}")


def encode_commitments(cmts: list[RoundCommitment]) -> bytes:
    out = Writer().u32(len(cmts))
    for cmt in cmts:
        write_commitment(out, cmt)
    return out.getvalue()


def decode_commitments(data: bytes, st: Statement, kappa: int) -> list[RoundCommitment]:
    inp = Reader(data)
    if inp.u32() != kappa:
        raise FrameError("wrong number of commitments")
    cmts = [read_commitment(inp, st) for _ in range(kappa)]
    inp.finish()
    return cmts


def encode_challenges(chs) -> bytes:
    return Writer().u32(len(chs)).raw(bytes(chs)).getvalue()


def decode_challenges(data: bytes, kappa: int) -> list[int]:
    inp = Reader(data)
    if inp.u32() != kappa:
        raise FrameError("wrong number of challenges")
    chs = list(inp.raw(kappa))
    inp.finish()
    if any(ch not in CHALLENGES for ch in chs):
        raise FrameError("challenge outside {1, 2, 3}")
    return chs


def encode_responses(rsps, st: Statement, mode: WireMode) -> bytes:
    out = Writer().u32(len(rsps))
    for rsp in rsps:
        write_response(out, st, rsp, mode)
    return out.getvalue()


def decode_responses(data: bytes, st: Statement, kappa: int, mode: WireMode) -> list[Response]:
    inp = Reader(data)
    if inp.u32() != kappa:
        raise FrameError("wrong number of responses")
    rsps = [read_response(inp, st, mode) for _ in range(kappa)]
    inp.finish()
    return rsps


def commitment_size(params: Params) -> int:
    return 3 * (4 + 2 * params.n)


def response_size(profile: ValidityProfile, params: Params, ch: int, mode: WireMode) -> int:
    """Serialized bytes of a response to ``ch`` (tag byte included)."""
    ell, m = profile.length, params.m
    if mode is WireMode.COMPACT:
        field_vec = 4 + (ell * params.log_q + 7) // 8
        rho = phi = 4 + SEED_BYTES
    else:
        field_vec = 4 + 2 * ell
        rho = 4 + (m + 7) // 8
        phi = 4 + sum(4 + 2 * s.perm_size for s in profile.segments)
    if ch == 1:
        return 1 + 4 + (ell + 7) // 8 + field_vec + 2 * rho
    return 1 + phi + field_vec + 2 * rho


def round_size(profile: ValidityProfile, params: Params, ch: int, mode: WireMode) -> int:
    """Bytes one round puts on the wire: commitment, challenge byte, response."""
    return commitment_size(params) + 1 + response_size(profile, params, ch, mode)


# -- provers and sessions -----------------------------------------------------

class HonestProver:
    def __init__(self, st: Statement, w, rng: RandomSource | None = None):
        if not st.is_witness(w):
            raise ValueError("w is not a witness for the statement")
        self.st, self.w, self.rng = st, w, default_source(rng)
        self._states: list[ProverState] = []

    def commit_all(self, kappa: int) -> list[RoundCommitment]:
        pairs = [commit(self.st, self.w, self.rng, check=False) for _ in range(kappa)]
        self._states = [s for _, s in pairs]
        return [c for c, _ in pairs]

    def respond_all(self, chs) -> list[Response]:
        if len(chs) != len(self._states):
            raise ProtocolError("challenge count does not match commitments")
        return [s.respond(ch) for s, ch in zip(self._states, chs)]


class PredictingProver:
    """Witness-less cheater: commits like the simulator, betting on one challenge.

    When the bet fails it still sends a well-formed response, which the
    verifier rejects except with negligible probability.
    """

    def __init__(self, st: Statement, rng: RandomSource | None = None):
        self.st, self.rng = st, default_source(rng)
        self._states: list[SimState] = []

    def commit_all(self, kappa: int) -> list[RoundCommitment]:
        pairs = [sim_commit(self.st, self.rng) for _ in range(kappa)]
        self._states = [s for _, s in pairs]
        return [c for c, _ in pairs]

    def respond_all(self, chs) -> list[Response]:
        out = []
        for state, ch in zip(self._states, chs):
            rsp = state.respond(ch)
            if rsp is None:
                rsp = self._fallback(state, ch)
            out.append(rsp)
        return out

    def _fallback(self, state: SimState, ch: int) -> Response:
        secrets = state.secrets
        if ch == 1:
            # the stand-in solves M w' = v but is not binary; show a valid-looking t_w
            t_w = self.st.profile.gamma(secrets.phi, self.st.profile.sample_member(self.rng))
            rsp = secrets.response(1)
            return Response1(t_w, rsp.t_r, rsp.rho2, rsp.rho3)
        return secrets.response(ch)


def sample_challenges(kappa: int, rng: RandomSource) -> list[int]:
    source = Expander(rng.bytes(SEED_BYTES), TAG_CHALLENGE)
    return [source.below(3) + 1 for _ in range(kappa)]


@dataclass
class SessionCost:
    """Payload bytes per message plus the per-round breakdown."""

    commitments: int
    challenges: int
    responses: int
    per_round: list[int]
    frame_overhead: int
    seconds: float = 0.0

    @property
    def total(self) -> int:
        return self.commitments + self.challenges + self.responses + self.frame_overhead


@dataclass
class SessionResult:
    accepted: bool
    cost: SessionCost
    challenges: list[int]


def expect_frame(transport, tag: MessageTag) -> bytes:
    got, payload = transport.recv()
    if got == MessageTag.ERROR:
        raise RemoteError(payload.decode("utf-8", "replace"))
    if got != tag:
        raise ProtocolError(f"out-of-order: expected {tag.name}, got {got.name}")
    return payload


def run_prover(transport, prover, kappa: int, st: Statement,
               mode: WireMode = WireMode.COMPACT) -> bool:
    """Prover side of a ``kappa``-round parallel session; returns the verdict."""
    if kappa < 1:
        raise ValueError("need at least one round")
    transport.send(MessageTag.COMMITMENTS, encode_commitments(prover.commit_all(kappa)))
    chs = decode_challenges(expect_frame(transport, MessageTag.CHALLENGES), kappa)
    transport.send(MessageTag.RESPONSES, encode_responses(prover.respond_all(chs), st, mode))
    result = expect_frame(transport, MessageTag.RESULT)
    return bool(result[:1] == b"\x01")


def run_verifier(transport, st: Statement, kappa: int, rng: RandomSource | None = None,
                 mode: WireMode = WireMode.COMPACT) -> SessionResult:
    """Verifier side: accept iff every round verifies. Sends the RESULT frame."""
    if kappa < 1:
        raise ValueError("need at least one round")
    rng = default_source(rng)
    started = time.perf_counter()
    cmt_payload = expect_frame(transport, MessageTag.COMMITMENTS)
    cmts = decode_commitments(cmt_payload, st, kappa)
    chs = sample_challenges(kappa, rng)
    ch_payload = encode_challenges(chs)
    transport.send(MessageTag.CHALLENGES, ch_payload)
    rsp_payload = expect_frame(transport, MessageTag.RESPONSES)
    try:
        rsps = decode_responses(rsp_payload, st, kappa, mode)
        accepted = all(rsp.ch == ch and verify_round(st, cmt, ch, rsp)
                       for cmt, ch, rsp in zip(cmts, chs, rsps))
    except FrameError as exc:
        log.info("malformed responses: %s", exc)
        accepted = False
    transport.send(MessageTag.RESULT, b"\x01" if accepted else b"\x00")
    cost = SessionCost(
        commitments=len(cmt_payload),
        challenges=len(ch_payload),
        responses=len(rsp_payload),
        per_round=[round_size(st.profile, st.com.params, ch, mode) for ch in chs],
        frame_overhead=4 * HEADER.size + 1,
        seconds=time.perf_counter() - started,
    )
    return SessionResult(accepted, cost, chs)


def run_session(st: Statement, prover, kappa: int, rng: RandomSource | None = None,
                mode: WireMode = WireMode.COMPACT,
                timeout: float | None = DEFAULT_TIMEOUT) -> SessionResult:
    """Run prover and verifier in-process over a loopback channel.

    ``prover`` is any object with ``commit_all`` and ``respond_all`` (an
    :class:`HonestProver` or a :class:`PredictingProver`); ``rng`` drives the
    verifier's challenges.
    """
    prover_end, verifier_end = LoopbackTransport.pair(timeout=timeout)
    failure: list[BaseException] = []

    def prover_side():
        try:
            run_prover(prover_end, prover, kappa, st, mode)
        except BaseException as exc:  # surfaced to the caller below
            failure.append(exc)
            prover_end.close()

    thread = threading.Thread(target=prover_side, daemon=True)
    thread.start()
    try:
        result = run_verifier(verifier_end, st, kappa, rng, mode)
    except BaseException:
        thread.join(timeout)
        if failure:  # the prover's error is the root cause
            raise failure[0] from None
        raise
    thread.join(timeout)
    if failure:
        raise failure[0]
    return result
