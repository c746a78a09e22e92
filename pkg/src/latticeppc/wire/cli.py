"""Command-line entry point: ``keygen``, ``serve``, ``register``, ``bench`` and ``hash``.

Passwords are read from ``$LATTICEPPC_PASSWORD`` or an interactive prompt,
never from the command line.
"""

from __future__ import annotations

import argparse
import getpass
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .. import pwhash
from ..policy import PolicyError, evaluate, parse_policy
from ..pwhash import PublicParams
from ..ring import SEED_BYTES, Params
from ..stern import WireMode
from .bench import bench
from .protocol import PolicyMismatch, register, serve
from .records import RecordStore

PASSWORD_ENV = "LATTICEPPC_PASSWORD"
log = logging.getLogger("latticeppc")


def read_password(prompt: str = "password: ") -> str:
    pw = os.environ.get(PASSWORD_ENV)
    if pw is None:
        pw = getpass.getpass(prompt)
    return pw


def _seed(text: str | None) -> bytes:
    if text is None:
        return os.urandom(SEED_BYTES)
    seed = bytes.fromhex(text)
    if len(seed) != SEED_BYTES:
        raise argparse.ArgumentTypeError(f"seed must be {SEED_BYTES} bytes of hex")
    return seed


def _load_pp(path) -> PublicParams:
    return PublicParams.from_bytes(Path(path).read_bytes())


def _secrets_json(chi, r) -> dict:
    return {"chi": [int(v) for v in chi], "r": np.packbits(r).tobytes().hex(), "r_bits": int(r.size)}


def cmd_keygen(args) -> int:
    seed = _seed(args.seed)
    params = None
    if args.n is not None:
        params = Params.make(args.n, args.q, args.m, seed=seed, security_level=args.security)
    pp = pwhash.setup(args.security, args.nmin, args.nmax, seed, params)
    Path(args.out).write_bytes(pp.to_bytes())
    p = pp.params
    print(f"wrote {args.out}: n={p.n} q={p.q} m={p.m} n_min={pp.n_min} n_max={pp.n_max} "
          f"fingerprint={pp.fingerprint.hex()[:16]}")
    return 0


def cmd_serve(args) -> int:
    pp = _load_pp(args.pp)
    f = parse_policy(args.policy)
    store = RecordStore(args.records) if args.records else None
    sessions = serve(args.listen, pp, f, args.rounds, store, WireMode(args.mode), args.timeout,
                     ready=lambda addr: print(f"listening on {addr[0]}:{addr[1]}", flush=True))
    try:
        for i, rec in enumerate(sessions, 1):
            verdict = "accept" if rec.verdict else "reject"
            detail = f" ({rec.error})" if rec.error else ""
            print(f"session {i}: {verdict}{detail} in {rec.seconds:.2f} s", flush=True)
            if args.max_sessions and i >= args.max_sessions:
                break
    except KeyboardInterrupt:
        pass
    finally:
        sessions.close()
    return 0


def cmd_register(args) -> int:
    f = parse_policy(args.policy)
    pw = read_password()
    if not evaluate(f, pw):
        print("password does not satisfy the policy; nothing was sent", file=sys.stderr)
        return 2
    try:
        reg = register(args.server, pw, f, timeout=args.timeout)
    except PolicyMismatch as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    print("accepted" if reg.accepted else "rejected")
    if reg.accepted and args.secrets:
        Path(args.secrets).write_text(json.dumps(_secrets_json(reg.chi, reg.r)))
    return 0 if reg.accepted else 1


def cmd_bench(args) -> int:
    pp = _load_pp(args.pp)
    f = parse_policy(args.policy)
    modes = tuple(WireMode) if args.mode == "both" else (WireMode(args.mode),)
    print(bench(pp, f, args.rounds, modes=modes, measure=not args.model_only).table())
    return 0


def cmd_hash(args) -> int:
    pp = _load_pp(args.pp)
    pw = read_password()
    chi = pwhash.pre_salt(pp)
    r = pwhash.salt(pp)
    h = pwhash.hash(pp, pwhash.pre_hash(pp, pw, chi), chi, r)
    print(json.dumps({"h": [int(v) for v in h]}))
    if args.secrets:
        Path(args.secrets).write_text(json.dumps(_secrets_json(chi, r)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latticeppc",
                                 description="Zero-knowledge password policy checks over lattices.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate public parameters")
    p.add_argument("--seed", help="32-byte matrix seed as hex (random if omitted)")
    p.add_argument("--nmin", type=int, required=True)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--security", type=int, default=128)
    p.add_argument("--n", type=int, help="override the lattice dimension (testing only)")
    p.add_argument("--q", type=int, default=1021)
    p.add_argument("--m", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("serve", help="accept registrations")
    p.add_argument("--pp", required=True)
    p.add_argument("--policy", required=True, help="kD,kS,kL,kU,nmin,nmax")
    p.add_argument("--rounds", type=int, default=52)
    p.add_argument("--listen", default="127.0.0.1:7420")
    p.add_argument("--records", help="append accepted registrations to this file")
    p.add_argument("--mode", choices=[m.value for m in WireMode], default="compact")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-sessions", type=int, default=0, help="stop after this many sessions")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("register", help=f"register a password (read from ${PASSWORD_ENV})")
    p.add_argument("--server", required=True, help="HOST:PORT")
    p.add_argument("--policy", required=True, help="the policy the server must announce")
    p.add_argument("--secrets", help="write the local salts here on success")
    p.add_argument("--timeout", type=float, default=60.0)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("bench", help="communication cost report")
    p.add_argument("--pp", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--rounds", type=int, default=52)
    p.add_argument("--mode", choices=["both"] + [m.value for m in WireMode], default="both")
    p.add_argument("--model-only", action="store_true", help="skip the measured sessions")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("hash", help="hash a password offline")
    p.add_argument("--pp", required=True)
    p.add_argument("--secrets", help="write the salts here")
    p.set_defaults(func=cmd_hash)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PolicyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
