"""Shared fixtures: a standard-profile instance and small toy instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from latticeppc import pwhash, zkppc
from latticeppc.policy import Policy, parse_policy
from latticeppc.pwhash import PublicParams
from latticeppc.ring import Params
from latticeppc.stern import Statement

SEED = bytes(range(32))


@dataclass
class Instance:
    """An honest (pp, f, pw, chi, r, h, delta, statement, witness) bundle."""

    pp: PublicParams
    f: Policy
    pw: str
    chi: np.ndarray
    r: np.ndarray
    h: np.ndarray
    delta: zkppc.Delta
    st: Statement
    w: np.ndarray


def make_instance(pp: PublicParams, f: Policy, pw: str, rng) -> Instance:
    chi = pwhash.pre_salt(pp, rng)
    r = pwhash.salt(pp, rng)
    h = pwhash.hash(pp, pwhash.pre_hash(pp, pw, chi), chi, r)
    delta = zkppc.derive_delta(pp, pw, chi, f)
    bundle = zkppc.build_witness(pp, pw, chi, r, f, delta)
    st = zkppc.build_statement(pp, f, delta, h)
    return Instance(pp, f, pw, chi, r, h, delta, st, bundle.w)


def toy_pp(n=16, q=257, n_min=2, n_max=4, m=None, seed=SEED) -> PublicParams:
    return pwhash.setup(128, n_min, n_max, seed, Params.make(n, q, m, seed=seed))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def standard_pp() -> PublicParams:
    return pwhash.setup(128, 8, 16, SEED)


@pytest.fixture(scope="session")
def standard_policy() -> Policy:
    return parse_policy("1,1,1,1,8,16")


@pytest.fixture(scope="session")
def standard_instance(standard_pp, standard_policy) -> Instance:
    return make_instance(standard_pp, standard_policy, "Tr0ub4dor&3x", np.random.default_rng(7))


@pytest.fixture(scope="session")
def small_pp() -> PublicParams:
    """n=16, q=257, m=288, passwords of 2..4 characters."""
    return toy_pp()


@pytest.fixture(scope="session")
def small_policy() -> Policy:
    return parse_policy("1,1,0,0,2,4")


@pytest.fixture(scope="session")
def small_instance(small_pp, small_policy) -> Instance:
    return make_instance(small_pp, small_policy, "x7#", np.random.default_rng(11))


@pytest.fixture(scope="session")
def tiny_pp() -> PublicParams:
    """n=4, q=17, m=40, passwords of 1..2 characters: cheap enough for 10^4 sessions."""
    return toy_pp(n=4, q=17, n_min=1, n_max=2)


@pytest.fixture(scope="session")
def tiny_policy() -> Policy:
    return parse_policy("1,0,0,0,1,2")


@pytest.fixture(scope="session")
def tiny_instance(tiny_pp, tiny_policy) -> Instance:
    return make_instance(tiny_pp, tiny_policy, "4", np.random.default_rng(3))
