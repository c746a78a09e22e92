"""Password policies ``((k_D, k_S, k_L, k_U), n_min, n_max)``."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

from .encoding import POLICY_CLASSES, CharClass, class_codes, classify_char, is_printable
from .ring import SEED_BYTES, Expander, RandomSource, default_source

log = logging.getLogger(__name__)


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Policy:
    k_D: int
    k_S: int
    k_L: int
    k_U: int
    n_min: int
    n_max: int

    def __post_init__(self):
        if min(self.counts) < 0:
            raise PolicyError("class counts must be non-negative")
        if self.n_min < 1 or self.n_min > self.n_max:
            raise PolicyError(f"need 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if sum(self.counts) > self.n_min:
            raise PolicyError(f"class minima sum to {sum(self.counts)} > n_min={self.n_min}")

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.k_D, self.k_S, self.k_L, self.k_U)

    @property
    def k_all(self) -> int:
        return self.n_min - sum(self.counts)

    def minimum(self, cls: CharClass) -> int:
        if cls is CharClass.ALL:
            return self.k_all
        return dict(zip(POLICY_CLASSES, self.counts))[cls]

    def slots(self) -> list[tuple[CharClass, int]]:
        """``(class, count)`` in proof order D, S, L, U, all; zero counts dropped."""
        order = (*POLICY_CLASSES, CharClass.ALL)
        return [(cls, self.minimum(cls)) for cls in order if self.minimum(cls)]

    def __str__(self) -> str:
        return ",".join(str(v) for v in (*self.counts, self.n_min, self.n_max))


def parse_policy(text: str) -> Policy:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 6 or not all(p.isdigit() for p in parts):
        raise PolicyError(f"expected 'kD,kS,kL,kU,nmin,nmax', got {text!r}")
    return Policy(*(int(p) for p in parts))


def evaluate(f: Policy, pw: str) -> bool:
    codes = [ord(c) for c in pw]
    bad = [i for i, c in enumerate(codes) if not (c < 256 and is_printable(c))]
    if bad:
        log.info("password rejected: non-printable character at index %d", bad[0])
        return False
    if not f.n_min <= len(codes) <= f.n_max:
        return False
    have = Counter(classify_char(c) for c in codes)
    return all(have[cls] >= k for cls, k in zip(POLICY_CLASSES, f.counts))


def sample_password(f: Policy, rng: RandomSource | None = None, length: int | None = None) -> str:
    """A random password of the given length (uniform in the window by default) satisfying ``f``."""
    src = Expander(default_source(rng).bytes(SEED_BYTES), b"sample-password")
    if length is None:
        length = f.n_min + src.below(f.n_max - f.n_min + 1)
    if not f.n_min <= length <= f.n_max:
        raise PolicyError(f"length {length} outside [{f.n_min}, {f.n_max}]")
    codes = []
    for cls, k in zip(POLICY_CLASSES, f.counts):
        alphabet = class_codes(cls)
        codes += [alphabet[src.below(len(alphabet))] for _ in range(k)]
    alphabet = class_codes(CharClass.ALL)
    codes += [alphabet[src.below(len(alphabet))] for _ in range(length - len(codes))]
    order = src.permutation(length)
    return "".join(chr(codes[i]) for i in order)
