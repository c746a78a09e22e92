"""Length-prefixed binary framing shared by the proof engine and the wire layer.

A frame is ``tag (1 byte) || payload length (u32 LE) || payload``. The module
also holds the in-process loopback channel used to run both protocol sides
in one process.
"""

from __future__ import annotations

import enum
import queue
import struct
from collections import Counter

import numpy as np

HEADER = struct.Struct("<BI")
MAX_PAYLOAD = 64 << 20
DEFAULT_TIMEOUT = 60.0


class FrameError(ValueError):
    """Malformed frame or payload."""


class ProtocolError(RuntimeError):
    """A peer sent a valid frame at the wrong time."""


class RemoteError(RuntimeError):
    """The peer reported an error frame."""


class MessageTag(enum.IntEnum):
    HELLO = 1
    PARAMS_ACK = 2
    REGISTER = 3
    COMMITMENTS = 4
    CHALLENGES = 5
    RESPONSES = 6
    RESULT = 7
    ERROR = 8


def encode_frame(tag: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise FrameError("payload too large")
    return HEADER.pack(int(MessageTag(tag)), len(payload)) + payload


def decode_frame(data: bytes) -> tuple[MessageTag, bytes]:
    if len(data) < HEADER.size:
        raise FrameError("truncated frame header")
    tag, length = HEADER.unpack_from(data)
    if len(data) != HEADER.size + length:
        raise FrameError("frame length does not match payload")
    try:
        return MessageTag(tag), data[HEADER.size :]
    except ValueError:
        raise FrameError(f"unknown message tag {tag}") from None


class Writer:
    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, data: bytes) -> "Writer":
        self._parts.append(bytes(data))
        return self

    def u8(self, value: int) -> "Writer":
        return self.raw(struct.pack("<B", value))

    def u32(self, value: int) -> "Writer":
        return self.raw(struct.pack("<I", value))

    def blob(self, data: bytes) -> "Writer":
        return self.u32(len(data)).raw(data)

    def bits(self, x) -> "Writer":
        """Bit vector: u32 bit count, then 8 bits per byte, MSB first."""
        x = np.asarray(x, dtype=np.uint8)
        return self.u32(x.size).raw(np.packbits(x).tobytes())

    def u16s(self, x) -> "Writer":
        """Integer vector: u32 count, then 16-bit LE values."""
        x = np.asarray(x, dtype=np.int64)
        if x.size and (x.min() < 0 or x.max() > 0xFFFF):
            raise FrameError("value does not fit in 16 bits")
        return self.u32(x.size).raw(x.astype("<u2").tobytes())

    def packed(self, x, width: int) -> "Writer":
        """Integer vector: u32 count, then ``width`` bits per value, MSB first."""
        x = np.asarray(x, dtype=np.int64)
        shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
        bits = ((x[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)
        return self.u32(x.size).raw(np.packbits(bits).tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes):
        self._data = memoryview(data)
        self._pos = 0

    def raw(self, length: int) -> bytes:
        if length < 0 or self._pos + length > len(self._data):
            raise FrameError("payload truncated")
        out = bytes(self._data[self._pos : self._pos + length])
        self._pos += length
        return out

    def u8(self) -> int:
        return self.raw(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.raw(4))[0]

    def blob(self, expect: int | None = None) -> bytes:
        length = self.u32()
        if expect is not None and length != expect:
            raise FrameError(f"expected {expect} bytes, got {length}")
        return self.raw(length)

    def _count(self, expect: int | None) -> int:
        count = self.u32()
        if expect is not None and count != expect:
            raise FrameError(f"expected {expect} entries, got {count}")
        return count

    def bits(self, expect: int | None = None) -> np.ndarray:
        count = self._count(expect)
        raw = np.frombuffer(self.raw((count + 7) // 8), dtype=np.uint8)
        return np.unpackbits(raw)[:count].copy()

    def u16s(self, expect: int | None = None) -> np.ndarray:
        count = self._count(expect)
        return np.frombuffer(self.raw(2 * count), dtype="<u2").astype(np.int64)

    def packed(self, width: int, expect: int | None = None) -> np.ndarray:
        count = self._count(expect)
        raw = np.frombuffer(self.raw((count * width + 7) // 8), dtype=np.uint8)
        bits = np.unpackbits(raw)[: count * width].astype(np.int64).reshape(count, width)
        return bits @ (1 << np.arange(width - 1, -1, -1, dtype=np.int64))

    def done(self) -> bool:
        return self._pos == len(self._data)

    def finish(self) -> None:
        if not self.done():
            raise FrameError("trailing bytes in payload")


# -- in-process channel ----------------------------------------------------------

class TransportTimeout(TimeoutError):
    pass


class ByteCounter:
    """Payload bytes sent and received, per message tag name."""

    def __init__(self):
        self.sent: Counter = Counter()
        self.received: Counter = Counter()

    def _count_sent(self, tag, payload: bytes) -> None:
        self.sent[MessageTag(tag).name] += len(payload)

    def _count_received(self, tag, payload: bytes) -> None:
        self.received[MessageTag(tag).name] += len(payload)


class LoopbackTransport(ByteCounter):
    """One end of an in-process channel; frames are encoded and decoded in full."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue,
                 timeout: float | None = DEFAULT_TIMEOUT, max_payload: int = MAX_PAYLOAD):
        super().__init__()
        self._inbox, self._outbox = inbox, outbox
        self.timeout = timeout
        self.max_payload = max_payload
        self.frames: list[bytes] = []  # every frame this end sent, in order

    @classmethod
    def pair(cls, **kwargs) -> tuple["LoopbackTransport", "LoopbackTransport"]:
        a, b = queue.Queue(), queue.Queue()
        return cls(a, b, **kwargs), cls(b, a, **kwargs)

    def send(self, tag, payload: bytes) -> None:
        frame = encode_frame(tag, payload)
        self.frames.append(frame)
        self._outbox.put(frame)
        self._count_sent(tag, payload)

    def recv(self) -> tuple[MessageTag, bytes]:
        try:
            frame = self._inbox.get(timeout=self.timeout)
        except queue.Empty:
            raise TransportTimeout("receive timed out") from None
        if frame is None:
            raise ConnectionError("peer closed the connection")
        if len(frame) - HEADER.size > self.max_payload:
            raise FrameError(f"oversized frame: {len(frame) - HEADER.size} bytes")
        tag, payload = decode_frame(frame)
        self._count_received(tag, payload)
        return tag, payload

    def close(self) -> None:
        self._outbox.put(None)
