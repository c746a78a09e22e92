"""Registration sessions: message schema plus server and client drivers.

A session runs::

    server                          client
    HELLO(pp, f, kappa, mode)  -->
                               <--  PARAMS_ACK(fingerprint of pp)
                               <--  REGISTER(h, Delta)
    ... kappa-round proof: COMMITMENTS, CHALLENGES, RESPONSES ...
    RESULT(accept | reject)    -->

Any violation is answered with an ERROR frame and the connection is closed.
The client keeps the pre-hash salt and the hash salt to itself.
"""

from __future__ import annotations

import logging
import queue
import socketserver
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .. import pwhash
from ..frames import FrameError, MessageTag, ProtocolError, Reader, RemoteError, Writer
from ..policy import Policy, PolicyError, evaluate, parse_policy
from ..pwhash import PublicParams
from ..ring import SEED_BYTES, Expander, RandomSource, default_source
from ..stern import WireMode, expect_frame
from ..zkppc import Delta, check_compatible, derive_delta, prove, verify
from .records import RecordStore
from .transport import DEFAULT_TIMEOUT, SocketTransport, TransportTimeout

log = logging.getLogger(__name__)


class PolicyMismatch(PolicyError):
    """The server announced a different policy from the one the client expected."""


# -- message schema -----------------------------------------------------------

@dataclass(frozen=True)
class Hello:
    pp: PublicParams
    policy: Policy
    kappa: int
    mode: WireMode

    def to_bytes(self) -> bytes:
        mode = 1 if self.mode is WireMode.COMPACT else 0
        out = Writer().blob(self.pp.to_bytes()).blob(self.pp.fingerprint)
        return out.blob(str(self.policy).encode()).u32(self.kappa).u8(mode).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Hello":
        inp = Reader(data)
        try:
            pp = PublicParams.from_bytes(inp.blob())
        except ValueError as exc:
            raise FrameError(str(exc)) from None
        if inp.blob() != pp.fingerprint:
            raise FrameError("HELLO fingerprint does not match its parameters")
        policy = parse_policy(inp.blob().decode("ascii"))
        kappa, mode = inp.u32(), inp.u8()
        inp.finish()
        if kappa < 1 or mode not in (0, 1):
            raise FrameError("bad round count or wire mode in HELLO")
        return cls(pp, policy, kappa, WireMode.COMPACT if mode else WireMode.PLAIN)


def encode_register(h, delta: Delta) -> bytes:
    return Writer().u16s(h).blob(delta.to_bytes()).getvalue()


def decode_register(data: bytes, pp: PublicParams, f: Policy) -> tuple[np.ndarray, Delta]:
    inp = Reader(data)
    h = inp.u16s(expect=pp.params.n)
    delta = Delta.from_bytes(inp.blob())
    inp.finish()
    if h.size and h.max() >= pp.params.q:
        raise FrameError("hash value is not reduced mod q")
    try:
        delta.validate(f)
    except ValueError as exc:
        raise FrameError(str(exc)) from None
    return h, delta


# -- server -------------------------------------------------------------------

@dataclass
class SessionRecord:
    policy: Policy
    fingerprint: bytes
    kappa: int
    h: np.ndarray | None = None
    delta: Delta | None = None
    verdict: bool = False
    challenges: list = field(default_factory=list)
    bytes_sent: dict = field(default_factory=dict)
    bytes_received: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str | None = None


def _send_error(transport, message: str) -> None:
    try:
        transport.send(MessageTag.ERROR, message.encode("utf-8"))
    except (OSError, TransportTimeout):
        pass


def handle_session(transport, pp: PublicParams, f: Policy, kappa: int,
                   mode: WireMode = WireMode.COMPACT, rng: RandomSource | None = None,
                   store: RecordStore | None = None) -> SessionRecord:
    """Run the server side of one registration over ``transport``."""
    record = SessionRecord(policy=f, fingerprint=pp.fingerprint, kappa=kappa)
    started = time.perf_counter()
    try:
        transport.send(MessageTag.HELLO, Hello(pp, f, kappa, mode).to_bytes())
        ack = Reader(expect_frame(transport, MessageTag.PARAMS_ACK))
        if ack.blob() != pp.fingerprint:
            raise ProtocolError("client acknowledged different public parameters")
        ack.finish()
        reg = expect_frame(transport, MessageTag.REGISTER)
        record.h, record.delta = decode_register(reg, pp, f)
        result = verify(pp, f, record.delta, record.h, kappa, transport, rng, mode)
        record.verdict, record.challenges = result.accepted, result.challenges
        if result.accepted and store is not None:
            store.append(record.h, record.delta, f, True)
    except (FrameError, ProtocolError, PolicyError, TransportTimeout) as exc:
        record.error = str(exc)
        log.info("session aborted: %s", exc)
        _send_error(transport, str(exc))
    except (RemoteError, ConnectionError) as exc:
        record.error = f"peer: {exc}"
        log.info("session ended by peer: %s", exc)
    record.seconds = time.perf_counter() - started
    record.bytes_sent = dict(transport.sent)
    record.bytes_received = dict(transport.received)
    return record


class RegistrationServer(socketserver.ThreadingTCPServer):
    """Threaded TCP server; each connection is one isolated session."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, pp: PublicParams, f: Policy, kappa: int,
                 store: RecordStore | None = None, mode: WireMode = WireMode.COMPACT,
                 timeout: float = DEFAULT_TIMEOUT, on_record=None):
        check_compatible(pp, f)
        self.pp, self.policy, self.kappa = pp, f, kappa
        self.store, self.mode, self.session_timeout = store, mode, timeout
        self.on_record = on_record
        super().__init__(address, _Handler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address[:2]


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        srv: RegistrationServer = self.server
        transport = SocketTransport(self.request, timeout=srv.session_timeout)
        record = handle_session(transport, srv.pp, srv.policy, srv.kappa, srv.mode,
                                store=srv.store)
        if srv.on_record is not None:
            srv.on_record(record)


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def serve(listen_addr, pp: PublicParams, f: Policy, kappa: int,
          store: RecordStore | None = None, mode: WireMode = WireMode.COMPACT,
          timeout: float = DEFAULT_TIMEOUT, ready=None):
    """Serve registrations and yield one :class:`SessionRecord` per connection.

    ``ready`` is called with the bound address once the socket listens.
    Closing the generator stops the server.
    """
    if isinstance(listen_addr, str):
        listen_addr = parse_address(listen_addr)
    records: queue.Queue = queue.Queue()
    server = RegistrationServer(listen_addr, pp, f, kappa, store, mode, timeout, records.put)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        if ready is not None:
            ready(server.address)
        while True:
            yield records.get()
    finally:
        server.shutdown()
        server.server_close()


# -- client -------------------------------------------------------------------

@dataclass
class Registration:
    accepted: bool
    h: np.ndarray
    delta: Delta
    chi: np.ndarray  # kept by the client, never sent
    r: np.ndarray    # kept by the client, never sent
    hello: Hello


def register_over(transport, pw: str, f_expected: Policy,
                  rng: RandomSource | None = None) -> Registration:
    """Client side of one registration over an already connected transport."""
    if not evaluate(f_expected, pw):
        raise PolicyError("password does not satisfy the expected policy")
    rng = default_source(rng)
    try:
        hello = Hello.from_bytes(expect_frame(transport, MessageTag.HELLO))
    except (FrameError, PolicyError) as exc:
        _send_error(transport, f"bad HELLO: {exc}")
        raise
    if hello.policy != f_expected:
        _send_error(transport, "policy mismatch")
        raise PolicyMismatch(f"server announced policy {hello.policy}, expected {f_expected}")
    pp = hello.pp
    try:
        check_compatible(pp, hello.policy)
    except PolicyError:
        _send_error(transport, "policy incompatible with public parameters")
        raise
    transport.send(MessageTag.PARAMS_ACK, Writer().blob(pp.fingerprint).getvalue())

    chi = pwhash.pre_salt(pp, rng)
    r = pwhash.salt(pp, rng)
    h = pwhash.hash(pp, pwhash.pre_hash(pp, pw, chi), chi, r)
    delta = derive_delta(pp, pw, chi, hello.policy)
    transport.send(MessageTag.REGISTER, encode_register(h, delta))
    accepted = prove(pp, hello.policy, pw, chi, r, h, delta, hello.kappa, transport, rng,
                     hello.mode)
    return Registration(accepted, h, delta, chi, r, hello)


def register(server_addr, pw: str, f_expected: Policy, rng: RandomSource | None = None,
             timeout: float = DEFAULT_TIMEOUT) -> Registration:
    """Register ``pw`` with the server at ``server_addr``.

    The policy is checked locally before any connection is made.
    """
    if not evaluate(f_expected, pw):
        raise PolicyError("password does not satisfy the expected policy")
    if isinstance(server_addr, str):
        server_addr = parse_address(server_addr)
    with SocketTransport.connect(server_addr, timeout=timeout) as transport:
        return register_over(transport, pw, f_expected, rng)


def loopback_registration(pp: PublicParams, f: Policy, pw: str, kappa: int,
                          mode: WireMode = WireMode.COMPACT, rng: RandomSource | None = None,
                          store: RecordStore | None = None, timeout: float = DEFAULT_TIMEOUT,
                          ) -> tuple[Registration, SessionRecord]:
    """One full registration between an in-process server and client."""
    from .transport import LoopbackTransport

    rng = default_source(rng)
    server_rng = Expander(rng.bytes(SEED_BYTES), b"loopback-server")
    server_end, client_end = LoopbackTransport.pair(timeout=timeout)
    box = {}

    def run_server():
        box["record"] = handle_session(server_end, pp, f, kappa, mode, server_rng, store)

    thread = threading.Thread(target=run_server, daemon=True)
    thread.start()
    try:
        registration = register_over(client_end, pw, f, rng)
    except BaseException:
        client_end.close()
        raise
    finally:
        thread.join(timeout)
    return registration, box["record"]
