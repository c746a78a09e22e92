"""Communication-cost benchmark: the analytic bound next to measured sessions."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field

from ..frames import MessageTag
from ..policy import Policy, sample_password
from ..pwhash import PublicParams
from ..ring import RandomSource, default_source
from ..stern import WireMode
from ..zkppc import comm_cost
from .protocol import loopback_registration

PROOF_MESSAGES = ("COMMITMENTS", "CHALLENGES", "RESPONSES")


@dataclass
class MeasuredRun:
    mode: WireMode
    accepted: bool
    message_bytes: dict  # payload bytes per message tag, both directions
    challenge_counts: dict
    seconds: float

    @property
    def proof_bytes(self) -> int:
        return sum(self.message_bytes.get(name, 0) for name in PROOF_MESSAGES)

    @property
    def total_bytes(self) -> int:
        return sum(self.message_bytes.values())


@dataclass
class BenchReport:
    kappa: int
    ell: int
    log_q: int
    round_bytes: dict  # (mode, challenge) -> serialized bytes of one round
    expected_totals: dict  # mode -> expected proof bytes for kappa rounds
    runs: list[MeasuredRun] = field(default_factory=list)

    @property
    def bound_bits(self) -> int:
        return self.ell * self.log_q

    def table(self) -> str:
        lines = [
            f"rounds (kappa)           {self.kappa}",
            f"witness length (ell)     {self.ell}",
            f"bound per round          {self.bound_bits} bits = {self.bound_bits / 8:,.0f} B",
            f"bound for kappa rounds   {self.kappa * self.bound_bits / 8:,.0f} B",
            "",
            f"{'mode':<8} {'ch=1':>8} {'ch=2':>8} {'ch=3':>8} {'worst/bound':>12} {'expected total':>15}",
        ]
        for mode in WireMode:
            sizes = [self.round_bytes[mode, ch] for ch in (1, 2, 3)]
            lines.append(f"{mode.value:<8} {sizes[0]:>8} {sizes[1]:>8} {sizes[2]:>8} "
                         f"{max(sizes) / (self.bound_bits / 8):>12.3f} "
                         f"{self.expected_totals[mode]:>15,.0f}")
        for run in self.runs:
            lines += ["", f"measured session ({run.mode.value}): "
                          f"{'accepted' if run.accepted else 'REJECTED'} in {run.seconds:.2f} s, "
                          f"challenges {dict(sorted(run.challenge_counts.items()))}"]
            for name, size in run.message_bytes.items():
                lines.append(f"  {name:<12} {size:>12,} B")
            lines.append(f"  {'proof':<12} {run.proof_bytes:>12,} B "
                         f"({run.proof_bytes / 1024:,.1f} KiB)")
            lines.append(f"  {'total':<12} {run.total_bytes:>12,} B")
        return "\n".join(lines)


def bench(pp: PublicParams, f: Policy, kappa: int, rng: RandomSource | None = None,
          modes=tuple(WireMode), measure: bool = True) -> BenchReport:
    cost = comm_cost(pp, f)
    report = BenchReport(
        kappa=kappa, ell=cost.ell, log_q=cost.log_q, round_bytes=dict(cost.round_bytes),
        expected_totals={mode: cost.expected_total_bytes(kappa, mode) for mode in WireMode},
    )
    if not measure:
        return report
    rng = default_source(rng)
    pw = sample_password(f, rng)
    for mode in modes:
        started = time.perf_counter()
        reg, record = loopback_registration(pp, f, pw, kappa, mode, rng)
        elapsed = time.perf_counter() - started
        seen = Counter(record.bytes_sent) + Counter(record.bytes_received)
        seen = {tag.name: seen[tag.name] for tag in MessageTag if tag.name in seen}
        report.runs.append(MeasuredRun(mode, reg.accepted and record.verdict, seen,
                                       dict(Counter(record.challenges)), elapsed))
    return report
