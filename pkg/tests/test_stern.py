import itertools

import numpy as np
import pytest

from latticeppc import stern
from latticeppc.encoding import CharClass
from latticeppc.frames import Reader, Writer
from latticeppc.ring import Expander
from latticeppc.stern import (
    Balanced,
    CharClassSet,
    ExtractionError,
    HonestProver,
    PermElement,
    PermutationCode,
    PredictingProver,
    Response1,
    Response2,
    StateReuseError,
    ValidityProfile,
    WireMode,
    commit,
    extract,
    sim_commit,
    verify_round,
)

from stats import chi_square, chi_square_gate


def rewind(st, w, seed):
    """Three runs of the prover on identical randomness, one per challenge."""
    out = []
    for ch in stern.CHALLENGES:
        cmt, state = commit(st, w, Expander(seed, b"rewind"))
        out.append((cmt, state.respond(ch)))
    return out


# -- completeness -----------------------------------------------------------------

@pytest.mark.parametrize("ch", stern.CHALLENGES)
def test_honest_round_verifies_standard(standard_instance, ch):
    st, w = standard_instance.st, standard_instance.w
    cmt, state = commit(st, w, np.random.default_rng(ch))
    assert verify_round(st, cmt, ch, state.respond(ch))


def test_honest_rounds_verify_toy(small_instance):
    st, w = small_instance.st, small_instance.w
    gen = np.random.default_rng(0)
    for i in range(1000):
        ch = i % 3 + 1
        cmt, state = commit(st, w, gen)
        assert verify_round(st, cmt, ch, state.respond(ch))


def test_commit_rejects_non_witness(small_instance):
    w = small_instance.w.copy()
    w[0] ^= 1
    with pytest.raises(ValueError):
        commit(small_instance.st, w)


def test_commitment_reproducible_with_seeded_source(small_instance):
    st, w = small_instance.st, small_instance.w
    a, _ = commit(st, w, np.random.default_rng(5))
    b, _ = commit(st, w, np.random.default_rng(5))
    c, _ = commit(st, w, np.random.default_rng(6))
    assert a == b and a != c


# -- responses --------------------------------------------------------------------

def test_response_forms(small_instance):
    st, w = small_instance.st, small_instance.w
    (_, r1), (_, r2), (cmt, r3) = rewind(st, w, b"\x01" * 32)
    assert isinstance(r1, Response1) and st.profile.contains(r1.t_w)
    assert np.array_equal(r1.t_w, st.profile.gamma(r2.phi, w))
    assert np.array_equal(r1.t_r, st.profile.gamma(r3.phi, r3.w3))
    assert np.array_equal(r2.w2, (w.astype(np.int64) + r3.w3) % st.q)
    assert r2.phi == r3.phi


def test_state_answers_once(small_instance):
    _, state = commit(small_instance.st, small_instance.w, np.random.default_rng(1))
    state.respond(2)
    with pytest.raises(StateReuseError):
        state.respond(3)


def test_respond_rejects_bad_challenge(small_instance):
    _, state = commit(small_instance.st, small_instance.w, np.random.default_rng(1))
    with pytest.raises(ValueError):
        state.respond(4)


def test_flipped_response_bit_rejects(small_instance):
    st, w = small_instance.st, small_instance.w
    gen = np.random.default_rng(2)
    for _ in range(50):
        cmt, state = commit(st, w, gen)
        rsp = state.respond(1)
        t_w = rsp.t_w.copy()
        t_w[gen.integers(t_w.size)] ^= 1
        assert not verify_round(st, cmt, 1, Response1(t_w, rsp.t_r, rsp.rho2, rsp.rho3))


def test_field_mutation_rejects(small_instance):
    st, w = small_instance.st, small_instance.w
    cmt, state = commit(st, w, np.random.default_rng(3))
    rsp = state.respond(2)
    w2 = rsp.w2.copy()
    w2[0] = (w2[0] + 1) % st.q
    assert not verify_round(st, cmt, 2, Response2(rsp.phi, w2, rsp.rho1, rsp.rho3))


def test_malformed_responses_reject_without_raising(small_instance):
    st, w = small_instance.st, small_instance.w
    cmt, state = commit(st, w, np.random.default_rng(4))
    rsp = state.respond(1)
    assert not verify_round(st, cmt, 2, rsp)  # answer to the wrong challenge
    assert not verify_round(st, cmt, 1, Response1(rsp.t_w[:-1], rsp.t_r, rsp.rho2, rsp.rho3))
    assert not verify_round(st, cmt, 1, Response1(rsp.t_w, rsp.t_r + st.q, rsp.rho2, rsp.rho3))
    bad_rho = stern.ComRandomness(rsp.rho2.bits[:-1])
    assert not verify_round(st, cmt, 1, Response1(rsp.t_w, rsp.t_r, bad_rho, rsp.rho3))
    assert not verify_round(st, cmt, 1, None)
    _, state = commit(st, w, np.random.default_rng(4))
    rsp3 = state.respond(3)
    short_phi = PermElement(rsp3.phi.perms[:-1])
    assert not verify_round(st, cmt, 3, stern.Response3(short_phi, rsp3.w3, rsp3.rho1, rsp3.rho2))


# -- simulator --------------------------------------------------------------------

@pytest.mark.parametrize("predicted", stern.CHALLENGES)
def test_simulator_answers_the_other_challenges(small_instance, predicted):
    st = small_instance.st
    gen = np.random.default_rng(predicted)
    for _ in range(30):
        for ch in stern.CHALLENGES:
            cmt, state = sim_commit(st, gen, predicted)
            rsp = state.respond(ch)
            if ch == predicted:
                assert rsp is None
            else:
                assert verify_round(st, cmt, ch, rsp)


def test_particular_solution_plugs_back(small_instance, standard_instance):
    for inst in (small_instance, standard_instance):
        st = inst.st
        w1 = st.particular_solution
        assert np.array_equal(st.apply(w1), st.v)


def test_simulated_transcripts_verify(small_instance):
    st = small_instance.st
    gen = np.random.default_rng(7)
    produced = 0
    for _ in range(300):
        t = stern.simulate(st, gen)
        if t is not None:
            produced += 1
            assert verify_round(st, t.cmt, t.ch, t.rsp)
    assert 150 < produced < 250


def test_predicting_prover_fails_exactly_on_its_bet(small_instance):
    st = small_instance.st
    prover = PredictingProver(st, np.random.default_rng(8))
    cmts = prover.commit_all(60)
    chs = [i % 3 + 1 for i in range(60)]
    rsps = prover.respond_all(chs)
    for cmt, ch, rsp, state in zip(cmts, chs, rsps, prover._states):
        assert rsp is not None
        assert verify_round(st, cmt, ch, rsp) == (ch != state.predicted)


# -- extraction -------------------------------------------------------------------

def test_extraction_recovers_witness(small_instance):
    st, w = small_instance.st, small_instance.w
    for i in range(20):
        (c1, r1), (c2, r2), (c3, r3) = rewind(st, w, bytes([i]) * 32)
        assert c1 == c2 == c3
        assert np.array_equal(extract(st, c1, r1, r2, r3), w)


def test_extraction_rejects_tampered_response(small_instance):
    st, w = small_instance.st, small_instance.w
    (cmt, r1), (_, r2), (_, r3) = rewind(st, w, b"\x21" * 32)
    w2 = r2.w2.copy()
    w2[3] = (w2[3] + 1) % st.q
    with pytest.raises(ExtractionError, match="challenge 2"):
        extract(st, cmt, r1, Response2(r2.phi, w2, r2.rho1, r2.rho3), r3)


# -- permutation action -----------------------------------------------------------

def all_phis(profile):
    sizes = [s.perm_size for s in profile.segments]
    for perms in itertools.product(*(itertools.permutations(range(k)) for k in sizes)):
        yield PermElement(tuple(np.array(p) for p in perms))


def test_gamma_preserves_membership_exhaustive():
    profile = ValidityProfile((PermutationCode(2, 1), Balanced(2)))
    phis = list(all_phis(profile))
    assert len(phis) == 2 * 24
    for raw in itertools.product([0, 1], repeat=profile.length):
        w = np.array(raw, dtype=np.uint8)
        member = profile.contains(w)
        for phi in phis:
            assert profile.contains(profile.gamma(phi, w)) == member


def test_gamma_inverse_and_field_action():
    profile = ValidityProfile((PermutationCode(4, 2), CharClassSet(CharClass.DIGIT), Balanced(5)))
    gen = np.random.default_rng(9)
    for _ in range(200):
        phi = profile.sample_phi(gen)
        x = gen.integers(0, 1021, profile.length)
        assert np.array_equal(profile.gamma_inverse(phi, profile.gamma(phi, x)), x)
        member = profile.sample_member(gen)
        assert profile.contains(member) and profile.contains(profile.gamma(phi, member))
    with pytest.raises(ValueError):
        profile.gamma(PermElement((np.arange(4),)), np.zeros(profile.length))


def test_gamma_orbit_uniform():
    profile = ValidityProfile((PermutationCode(3, 2), Balanced(2)))
    w = profile.sample_member(np.random.default_rng(10))
    source = Expander(b"\x0a" * 32, b"orbit")
    counts = {}
    samples = 100_000
    for _ in range(samples):
        phi = profile.phi_from_seed(source.read(32))
        key = profile.gamma(phi, w).tobytes()
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 36
    assert chi_square(list(counts.values()), samples / 36) < chi_square_gate(35, 4)


# -- serialization ----------------------------------------------------------------

@pytest.mark.parametrize("mode", list(WireMode))
def test_serialized_sizes_match_model(small_instance, standard_instance, mode):
    for inst in (small_instance, standard_instance):
        st, w = inst.st, inst.w
        for ch, (cmt, rsp) in zip(stern.CHALLENGES, rewind(st, w, b"\x30" * 32)):
            out = Writer()
            stern.write_commitment(out, cmt)
            cmt_bytes = len(out.getvalue())
            assert cmt_bytes == stern.commitment_size(st.com.params)
            out = Writer()
            stern.write_response(out, st, rsp, mode)
            raw = out.getvalue()
            assert len(raw) == stern.response_size(st.profile, st.com.params, ch, mode)
            assert cmt_bytes + 1 + len(raw) == stern.round_size(st.profile, st.com.params, ch, mode)
            back = stern.read_response(Reader(raw), st, mode)
            assert verify_round(st, cmt, ch, back)


def test_round_sizes_standard(standard_instance):
    st = standard_instance.st
    sizes = {(mode, ch): stern.round_size(st.profile, st.com.params, ch, mode)
             for mode in WireMode for ch in stern.CHALLENGES}
    assert sizes[WireMode.COMPACT, 1] == 21_144
    assert sizes[WireMode.COMPACT, 2] == sizes[WireMode.COMPACT, 3] == 19_402
    assert sizes[WireMode.PLAIN, 1] == 33_004
    assert sizes[WireMode.PLAIN, 2] == 52_978


def test_message_codecs_round_trip(small_instance):
    st, w = small_instance.st, small_instance.w
    prover = HonestProver(st, w, np.random.default_rng(11))
    cmts = prover.commit_all(5)
    assert stern.decode_commitments(stern.encode_commitments(cmts), st, 5) == cmts
    chs = [1, 2, 3, 3, 1]
    assert stern.decode_challenges(stern.encode_challenges(chs), 5) == chs
    with pytest.raises(stern.FrameError):
        stern.decode_challenges(stern.encode_challenges([1, 4]), 2)
    with pytest.raises(stern.FrameError):
        stern.decode_commitments(stern.encode_commitments(cmts), st, 4)
    rsps = prover.respond_all(chs)
    back = stern.decode_responses(stern.encode_responses(rsps, st, WireMode.COMPACT), st, 5,
                                  WireMode.COMPACT)
    assert all(verify_round(st, c, ch, r) for c, ch, r in zip(cmts, chs, back))


# -- sessions ---------------------------------------------------------------------

@pytest.mark.parametrize("mode", list(WireMode))
def test_honest_session_accepts(small_instance, mode):
    st, w = small_instance.st, small_instance.w
    prover = HonestProver(st, w, np.random.default_rng(12))
    result = stern.run_session(st, prover, 20, np.random.default_rng(13), mode=mode, timeout=30)
    assert result.accepted and len(result.challenges) == 20
    assert result.cost.per_round == [stern.round_size(st.profile, st.com.params, ch, mode)
                                     for ch in result.challenges]
    assert sum(result.cost.per_round) == (result.cost.commitments + result.cost.challenges
                                          + result.cost.responses - 12)


def test_predicting_prover_usually_rejected(small_instance):
    st = small_instance.st
    result = stern.run_session(st, PredictingProver(st, np.random.default_rng(14)), 30,
                               np.random.default_rng(15), timeout=30)
    assert not result.accepted


def test_session_rejects_zero_rounds(small_instance):
    st, w = small_instance.st, small_instance.w
    with pytest.raises(ValueError):
        stern.run_session(st, HonestProver(st, w), 0, timeout=5)
