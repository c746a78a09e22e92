"""Lattice-based zero-knowledge password policy checks.

Modules:

- ``ring``: arithmetic over Z_q, deterministic expansion, permutations
- ``encoding``: character classes and block encodings
- ``ktx``: bit and string commitments ``A.x + B.r mod q``
- ``pwhash``: randomised password hashing
- ``policy``: password policies and plaintext evaluation
- ``stern``: the Stern-type argument for ``M.w = v`` with structured ``w``
- ``zkppc``: the reduction from policy compliance to a Stern statement
- ``wire``: framed transport, client/server drivers, CLI and benchmarks
"""

from .policy import Policy, PolicyError, evaluate, parse_policy
from .pwhash import PublicParams, setup
from .ring import Params
from .stern import WireMode

__version__ = "0.1.0"

__all__ = [
    "Params",
    "Policy",
    "PolicyError",
    "PublicParams",
    "WireMode",
    "evaluate",
    "parse_policy",
    "setup",
]
