"""Framed transport, registration sessions, record store, benchmarks and CLI."""

from .protocol import (
    Hello,
    PolicyMismatch,
    Registration,
    RegistrationServer,
    SessionRecord,
    handle_session,
    loopback_registration,
    register,
    register_over,
    serve,
)
from .records import RecordStore
from .transport import LoopbackTransport, SocketTransport

__all__ = [
    "Hello",
    "LoopbackTransport",
    "PolicyMismatch",
    "RecordStore",
    "Registration",
    "RegistrationServer",
    "SessionRecord",
    "SocketTransport",
    "handle_session",
    "loopback_registration",
    "register",
    "register_over",
    "serve",
]
