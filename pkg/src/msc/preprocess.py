"""Match quality filter.

A match is kept only when it is long enough and both players were active and
rated: total_frames > 10000, every APM > 10, every MMR > 1000. All three
bounds are strict, so a match sitting exactly on a threshold is rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .trace_model import Player, Trace

MIN_FRAMES = 10000
MIN_APM = 10
MIN_MMR = 1000


@dataclass
class FilterResult:
    passed: bool
    reasons: list[str] = field(default_factory=list)


def filter_header(total_frames: int, players: list[Player]) -> FilterResult:
    """Apply the quality gate, accumulating every failed check."""
    reasons: list[str] = []
    if not total_frames > MIN_FRAMES:
        reasons.append("TooShort")
    for p in sorted(players, key=lambda p: p.player_id):
        if not p.apm > MIN_APM:
            reasons.append(f"LowApm({p.player_id})")
    for p in sorted(players, key=lambda p: p.player_id):
        if not p.mmr > MIN_MMR:
            reasons.append(f"LowMmr({p.player_id})")
    return FilterResult(passed=not reasons, reasons=reasons)


def filter_trace(trace: Trace) -> FilterResult:
    return filter_header(trace.total_frames, trace.players)
