import threading

import numpy as np
import pytest

from latticeppc import pwhash, stern, zkppc
from latticeppc.encoding import CLASS_SIZES, CharClass, classify_char, encode_char
from latticeppc.frames import LoopbackTransport
from latticeppc.policy import Policy, PolicyError, parse_policy, sample_password
from latticeppc.stern import PermElement, PredictingProver, WireMode
from latticeppc.zkppc import Delta

from conftest import make_instance, toy_pp
from stats import chi_square, chi_square_gate


# -- Delta --------------------------------------------------------------------------

def test_derive_delta_hand_trace(standard_pp, standard_policy):
    delta = zkppc.derive_delta(standard_pp, "A0!bcdef", np.arange(16), standard_policy)
    assert delta == Delta(D=(2,), S=(3,), L=(4,), U=(1,), all=(5, 6, 7, 8))


def test_derive_delta_follows_pre_salt(standard_pp, standard_policy):
    chi = np.roll(np.arange(16), 3)  # chi(i) = i - 3
    delta = zkppc.derive_delta(standard_pp, "A0!bcdef", chi, standard_policy)
    # source character j sits at 1-based position i + 1 with chi(i) = j
    assert delta.D == (1 + 3 + 1,) and delta.U == (0 + 3 + 1,)


def test_delta_positions_point_at_claimed_classes(standard_pp, standard_policy):
    gen = np.random.default_rng(0)
    for _ in range(1000):
        pw = sample_password(standard_policy, gen)
        chi = gen.permutation(16)
        delta = zkppc.derive_delta(standard_pp, pw, chi, standard_policy)
        delta.validate(standard_policy)
        P = pwhash.pre_hash(standard_pp, pw, chi)
        for cls, pos in delta.slots():
            j = chi[pos - 1]
            assert j < len(pw)
            assert np.array_equal(P[8 * (pos - 1): 8 * pos], encode_char(ord(pw[j])))
            assert cls is CharClass.ALL or classify_char(ord(pw[j])) is cls


def test_derive_delta_rejects_bad_inputs(standard_pp, standard_policy):
    with pytest.raises(PolicyError):
        zkppc.derive_delta(standard_pp, "password", np.arange(16), standard_policy)
    with pytest.raises(PolicyError):
        zkppc.derive_delta(standard_pp, "Passw0rd!", np.arange(16), parse_policy("1,1,1,1,8,12"))


def test_delta_validate_and_bytes(standard_policy):
    delta = Delta(D=(2,), S=(3,), L=(4,), U=(1,), all=(5, 6, 7, 8))
    assert Delta.from_bytes(delta.to_bytes()) == delta
    with pytest.raises(ValueError):
        Delta(D=(2,), S=(2,), L=(4,), U=(1,), all=(5, 6, 7, 8)).validate(standard_policy)
    with pytest.raises(ValueError):
        Delta(D=(2,), S=(3,), L=(4,), U=(1,), all=(5, 6, 7)).validate(standard_policy)
    with pytest.raises(ValueError):
        Delta(D=(17,), S=(3,), L=(4,), U=(1,), all=(5, 6, 7, 8)).validate(standard_policy)


def test_delta_independent_of_character_positions():
    # with a uniform pre-salt, the disclosed digit position is uniform whatever
    # index the digit has inside the password
    pp = toy_pp(n=4, q=17, n_min=1, n_max=3)
    f = parse_policy("1,0,0,0,1,3")
    gen = np.random.default_rng(1)
    for pw in ("7", "ab7", "7ab"):
        counts = np.zeros(3)
        for _ in range(30_000):
            delta = zkppc.derive_delta(pp, pw, pwhash.pre_salt(pp, gen), f)
            counts[delta.D[0] - 1] += 1
        assert chi_square(counts, 10_000) < chi_square_gate(2, 4)


# -- witness and statement ---------------------------------------------------------

def test_witness_length_standard(standard_pp, standard_policy, standard_instance):
    assert zkppc.witness_length(standard_pp, standard_policy) == 14_192
    assert standard_instance.w.size == standard_instance.st.ell == 14_192
    assert standard_instance.st.M.shape == (256, 14_192)


def test_witness_membership_and_digit_slot(standard_instance):
    inst = standard_instance
    assert inst.st.profile.contains(inst.w)
    parts = inst.st.profile.split(inst.w)
    assert parts[0].size == 16 * 4
    digit_part = parts[1]
    assert digit_part.size == 8 * CLASS_SIZES[CharClass.DIGIT]
    first = int("".join(map(str, digit_part[:8])), 2)
    assert chr(first) in "0123456789" and chr(first) in inst.pw


@pytest.mark.parametrize("f", ["0,0,0,0,8,16", "2,2,2,2,16,16", "1,1,1,1,8,16", "0,3,0,1,10,16"])
def test_witness_length_formula(standard_pp, f):
    f = parse_policy(f)
    want = (16 * 4 + 8 * (10 * f.counts[0] + 32 * f.counts[1] + 26 * f.counts[2]
                          + 26 * f.counts[3] + 94 * f.k_all)
            + 2 * (8 * (f.n_max - f.n_min) + 5120))
    assert zkppc.witness_length(standard_pp, f) == want == zkppc.comm_cost(standard_pp, f).ell


def test_statement_plug_back_standard(standard_instance):
    inst = standard_instance
    assert np.array_equal(inst.st.apply(inst.w), inst.h)
    assert inst.st.is_witness(inst.w)


def test_statement_plug_back_toy(small_pp, small_policy):
    gen = np.random.default_rng(2)
    for _ in range(1000):
        pw = sample_password(small_policy, gen)
        inst = make_instance(small_pp, small_policy, pw, gen)
        assert inst.st.is_witness(inst.w)
        # independent product, without the zero-column shortcut
        assert np.array_equal((inst.st.M @ inst.w.astype(np.int64)) % 257, inst.h)


def test_zero_columns_cover_the_padding(standard_instance):
    st, w = standard_instance.st, standard_instance.w
    zero = ~st.M.any(axis=0)
    o = st.profile.offsets
    expected = np.zeros(st.ell, dtype=bool)
    for i in range(1, len(st.profile.segments) - 1):  # class-set extensions
        expected[o[i] + 8: o[i + 1]] = True
    z_start = o[-2]
    expected[z_start + st.profile.segments[-1].half:] = True  # balancing bits
    assert np.array_equal(zero, expected)
    gen = np.random.default_rng(3)
    w2 = w.astype(np.int64)
    w2[zero] = gen.integers(0, st.q, int(zero.sum()))
    assert np.array_equal(st.apply(w2), standard_instance.h)


def test_build_witness_rejects_mismatched_delta(small_pp, small_policy, small_instance):
    inst = small_instance
    swapped = Delta(D=inst.delta.S, S=inst.delta.D)
    with pytest.raises(ValueError):
        zkppc.build_witness(small_pp, inst.pw, inst.chi, inst.r, small_policy, swapped)


def test_policy_must_match_hashing_bounds(small_pp):
    with pytest.raises(PolicyError):
        zkppc.check_compatible(small_pp, Policy(0, 0, 0, 0, 2, 5))
    with pytest.raises(PolicyError):
        zkppc.check_compatible(small_pp, Policy(0, 0, 0, 0, 1, 4))
    zkppc.check_compatible(small_pp, Policy(0, 0, 0, 0, 3, 4))


# -- permutation action on the witness -----------------------------------------------

def test_gamma_apply_on_witness(standard_instance):
    st, w = standard_instance.st, standard_instance.w
    profile = st.profile
    ident = PermElement(tuple(np.arange(s.perm_size) for s in profile.segments))
    assert np.array_equal(zkppc.gamma_apply(profile, ident, w), w)
    gen = np.random.default_rng(4)
    for _ in range(1000):
        phi = profile.sample_phi(gen)
        moved = zkppc.gamma_apply(profile, phi, w)
        assert profile.contains(moved)
        assert np.array_equal(zkppc.gamma_apply(profile, phi.inverse(), moved), w)


# -- extraction back to the password -------------------------------------------------

def test_extract_password_round_trip(small_pp, small_policy):
    gen = np.random.default_rng(5)
    for _ in range(300):
        pw = sample_password(small_policy, gen)
        inst = make_instance(small_pp, small_policy, pw, gen)
        opening = zkppc.extract_opening(inst.w, small_pp, small_policy, inst.delta)
        assert np.array_equal(opening.chi, inst.chi) and np.array_equal(opening.r, inst.r)
        assert zkppc.extract_password(inst.w, small_pp, small_policy, inst.delta) == pw


def test_extract_password_standard(standard_instance):
    inst = standard_instance
    assert zkppc.extract_password(inst.w, inst.pp, inst.f, inst.delta) == "Tr0ub4dor&3x"


def test_extract_rejects_non_member(small_instance):
    inst = small_instance
    w = inst.w.copy()
    w[-1] ^= 1
    with pytest.raises(ValueError):
        zkppc.extract_opening(w, inst.pp, inst.f, inst.delta)


# -- cost model -------------------------------------------------------------------

def test_comm_cost_standard(standard_pp, standard_policy):
    cost = zkppc.comm_cost(standard_pp, standard_policy)
    assert cost.ell == 14_192 and cost.bound_bits == 141_920
    assert cost.bound_bytes == 17_740
    assert cost.total_bits(52) == 52 * 141_920
    assert cost.worst_round(WireMode.COMPACT) == 21_144
    assert cost.round_bytes[WireMode.PLAIN, 3] == 52_978


def test_comm_cost_specializations(standard_pp):
    no_all = zkppc.comm_cost(standard_pp, parse_policy("2,2,2,2,8,16")).ell
    assert no_all == 64 + 8 * (20 + 64 + 52 + 52) + 2 * (64 + 5120)
    small = toy_pp(n=16, q=257, n_min=4, n_max=4)
    fixed = zkppc.comm_cost(small, parse_policy("1,1,1,1,4,4")).ell
    assert fixed == 4 * 2 + 8 * (10 + 32 + 26 + 26) + 2 * small.params.m


# -- sessions ---------------------------------------------------------------------

def run_pair(prove_fn, verify_fn):
    a, b = LoopbackTransport.pair(timeout=30)
    out = {}

    def prover():
        try:
            out["prover"] = prove_fn(a)
        except Exception as exc:  # reported through the verdict
            out["error"] = exc
            a.close()

    t = threading.Thread(target=prover, daemon=True)
    t.start()
    result = verify_fn(b)
    t.join(30)
    return result, out


def test_prove_verify_round_trip(small_instance):
    inst = small_instance
    gen = np.random.default_rng(6)
    result, out = run_pair(
        lambda t: zkppc.prove(inst.pp, inst.f, inst.pw, inst.chi, inst.r, inst.h, inst.delta,
                              20, t, gen),
        lambda t: zkppc.verify(inst.pp, inst.f, inst.delta, inst.h, 20, t,
                               np.random.default_rng(7)))
    assert result.accepted and out["prover"] is True


def test_wrong_hash_rejects(small_instance):
    inst = small_instance
    h_bad = inst.h.copy()
    h_bad[0] = (h_bad[0] + 1) % 257
    result, out = run_pair(
        lambda t: zkppc.prove(inst.pp, inst.f, inst.pw, inst.chi, inst.r, inst.h, inst.delta,
                              20, t, np.random.default_rng(8)),
        lambda t: zkppc.verify(inst.pp, inst.f, inst.delta, h_bad, 20, t,
                               np.random.default_rng(9)))
    assert not result.accepted and out["prover"] is False


def test_bogus_delta_cheater_bounded(tiny_pp, tiny_policy, tiny_instance):
    # the digit slot points at the padding position, so no witness exists
    inst = tiny_instance
    real = inst.delta.D[0]
    bogus = Delta(D=(3 - real,))
    st = zkppc.build_statement(tiny_pp, tiny_policy, bogus, inst.h)
    with pytest.raises(ValueError):
        zkppc.build_witness(tiny_pp, inst.pw, inst.chi, inst.r, tiny_policy, bogus)
    gen = np.random.default_rng(10)
    sessions, accepted = 900, 0
    for _ in range(sessions):
        prover = PredictingProver(st, gen)
        cmts = prover.commit_all(1)
        ch = stern.sample_challenges(1, gen)
        accepted += stern.verify_round(st, cmts[0], ch[0], prover.respond_all(ch)[0])
    assert accepted / sessions <= 2 / 3 + 3 * np.sqrt(2 / 9 / sessions)
    assert not stern.run_session(st, PredictingProver(st, gen), 30, gen, timeout=30).accepted
