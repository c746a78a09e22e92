"""Append-only record store for accepted registrations.

Each record is a u32 LE length followed by a UTF-8 JSON object. Only the
public registration data is kept: the hash value, the disclosed positions,
the policy and the verdict.
"""

from __future__ import annotations

import json
import os
import struct
import threading
from pathlib import Path

import numpy as np

from ..policy import Policy, parse_policy
from ..zkppc import SLOT_ORDER, Delta

STORED_FIELDS = ("h", "delta", "policy", "verdict")
_LEN = struct.Struct("<I")


def record_payload(h, delta: Delta, f: Policy, verdict: bool) -> dict:
    return {
        "h": [int(v) for v in np.asarray(h).reshape(-1)],
        "delta": {cls.value: list(pos) for cls, pos in delta.by_class()},
        "policy": str(f),
        "verdict": bool(verdict),
    }


def parse_record(obj: dict) -> tuple[np.ndarray, Delta, Policy, bool]:
    if set(obj) != set(STORED_FIELDS):
        raise ValueError(f"unexpected record fields {sorted(obj)}")
    delta = Delta(*(tuple(obj["delta"].get(cls.value, ())) for cls in SLOT_ORDER))
    return np.array(obj["h"], dtype=np.int64), delta, parse_policy(obj["policy"]), obj["verdict"]


class RecordStore:
    """Single-writer append; a record is visible once its write returns."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, h, delta: Delta, f: Policy, verdict: bool) -> None:
        body = json.dumps(record_payload(h, delta, f, verdict), separators=(",", ":")).encode()
        blob = _LEN.pack(len(body)) + body
        with self._lock:
            with open(self.path, "ab") as fh:
                fh.write(blob)
                fh.flush()
                os.fsync(fh.fileno())

    def __iter__(self):
        """Yield raw record dicts; a torn trailing record is ignored."""
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        pos = 0
        while pos + _LEN.size <= len(data):
            (length,) = _LEN.unpack_from(data, pos)
            end = pos + _LEN.size + length
            if end > len(data):
                break
            yield json.loads(data[pos + _LEN.size : end])
            pos = end

    def records(self) -> list[tuple[np.ndarray, Delta, Policy, bool]]:
        return [parse_record(obj) for obj in self]

    def __len__(self) -> int:
        return sum(1 for _ in self)
