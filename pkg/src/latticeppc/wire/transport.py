"""Frame transports: TCP sockets and an in-process loopback pair.

Every transport offers ``send(tag, payload)`` and ``recv() -> (tag, payload)``
and counts payload bytes per message tag.
"""

from __future__ import annotations

import socket

from ..frames import (
    DEFAULT_TIMEOUT,
    HEADER,
    MAX_PAYLOAD,
    FrameError,
    LoopbackTransport,
    MessageTag,
    TransportTimeout,
    ByteCounter,
    decode_frame,
    encode_frame,
)

__all__ = ["DEFAULT_TIMEOUT", "LoopbackTransport", "SocketTransport", "TransportTimeout",
           "MessageTag"]


class SocketTransport(ByteCounter):
    """Frames over a connected stream socket."""

    def __init__(self, sock: socket.socket, timeout: float | None = DEFAULT_TIMEOUT,
                 max_payload: int = MAX_PAYLOAD):
        super().__init__()
        self.sock = sock
        self.max_payload = max_payload
        sock.settimeout(timeout)

    @classmethod
    def connect(cls, address: tuple[str, int], timeout: float | None = DEFAULT_TIMEOUT,
                **kwargs) -> "SocketTransport":
        return cls(socket.create_connection(address, timeout=timeout), timeout, **kwargs)

    def send(self, tag, payload: bytes) -> None:
        try:
            self.sock.sendall(encode_frame(tag, payload))
        except socket.timeout:
            raise TransportTimeout("send timed out") from None
        self._count_sent(tag, payload)

    def _read_exact(self, count: int) -> bytes:
        buf = bytearray()
        while len(buf) < count:
            try:
                chunk = self.sock.recv(min(count - len(buf), 1 << 20))
            except socket.timeout:
                raise TransportTimeout("receive timed out") from None
            if not chunk:
                raise ConnectionError("peer closed the connection")
            buf += chunk
        return bytes(buf)

    def recv(self) -> tuple[MessageTag, bytes]:
        header = self._read_exact(HEADER.size)
        _, length = HEADER.unpack(header)
        if length > self.max_payload:
            raise FrameError(f"oversized frame: {length} bytes (limit {self.max_payload})")
        tag, payload = decode_frame(header + self._read_exact(length))
        self._count_received(tag, payload)
        return tag, payload

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
