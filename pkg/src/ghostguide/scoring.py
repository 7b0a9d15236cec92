"""Per-note performance scoring.

Performed key events are paired with reference notes by an exact min-cost
partial matching, then each pair is scored on pitch, timing and fingering.
The composite ``S`` is the weighted sum of the three sub-scores and
``E = 1 - S`` is the error that drives ghost opacity.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .melody import FingerLabel, MelodySpec, NoteSpec


class ScoringError(ValueError):
    pass


@dataclass(frozen=True)
class KeyEvent:
    """One press-release cycle. ``onset_ms`` is on the performance clock."""
    pitch: int
    onset_ms: float
    duration_ms: float
    finger: int

    def __post_init__(self):
        if not self.duration_ms > 0:
            raise ScoringError(f"duration_ms must be > 0, got {self.duration_ms!r}")
        if not 1 <= int(self.finger) <= 5:
            raise ScoringError(f"finger must be 1..5, got {self.finger!r}")

    def shifted(self, dt: float) -> "KeyEvent":
        return KeyEvent(self.pitch, self.onset_ms + dt, self.duration_ms, self.finger)


@dataclass(frozen=True)
class ScoreWeights:
    w_p: float = 0.7
    w_t: float = 0.2
    w_f: float = 0.1

    def __post_init__(self):
        for name in ("w_p", "w_t", "w_f"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ScoringError(f"{name} must lie in [0, 1]")
        if abs(self.w_p + self.w_t + self.w_f - 1.0) > 1e-9:
            raise ScoringError("weights must sum to 1")

    @classmethod
    def normalized(cls, w_p: float, w_t: float, w_f: float) -> "ScoreWeights":
        total = w_p + w_t + w_f
        return cls(w_p / total, w_t / total, w_f / total)

    def composite(self, s_p: float, s_t: float, s_f: float) -> float:
        # fsum keeps a perfect note at exactly 1.0 (0.7 + 0.2 + 0.1 != 1.0 in plain float addition)
        return math.fsum((self.w_p * s_p, self.w_t * s_t, self.w_f * s_f))


@dataclass(frozen=True)
class MatchConfig:
    tau_ms: float = 120.0
    match_window_ms: float | None = None  # None -> 2 * tau
    pitch_mismatch_penalty_ms: float | None = None  # None -> tau

    def __post_init__(self):
        if not self.tau_ms > 0:
            raise ScoringError("tau_ms must be > 0")
        if self.match_window_ms is None:
            object.__setattr__(self, "match_window_ms", 2.0 * self.tau_ms)
        if self.pitch_mismatch_penalty_ms is None:
            object.__setattr__(self, "pitch_mismatch_penalty_ms", self.tau_ms)
        if self.match_window_ms < self.tau_ms:
            raise ScoringError("match_window_ms must be >= tau_ms")
        if self.pitch_mismatch_penalty_ms < 0:
            raise ScoringError("pitch_mismatch_penalty_ms must be >= 0")


class OutcomeKind(str, enum.Enum):
    MATCHED = "Matched"
    MISSED = "MissedReference"
    EXTRA = "ExtraEvent"


@dataclass(frozen=True)
class NoteOutcome:
    kind: OutcomeKind
    ref_index: int | None
    event_index: int | None
    delta_t_ms: float | None
    s_p: float
    s_t: float
    s_f: float
    S: float
    E: float


def finger_credit(used: int, intended: int) -> float:
    gap = abs(int(used) - int(intended))
    return 1.0 if gap == 0 else 0.5 if gap == 1 else 0.0


def score_matched(note: NoteSpec, event: KeyEvent, tau_ms: float = 120.0,
                  weights: ScoreWeights = ScoreWeights(), ref_index: int | None = None,
                  event_index: int | None = None) -> NoteOutcome:
    """Score one matched (note, event) pair. Positive ``delta_t_ms`` means late."""
    dt = event.onset_ms - note.onset_ms
    s_p = 1.0 if (event.pitch == note.pitch and abs(dt) <= tau_ms) else 0.0
    s_t = 1.0 - min(abs(dt) / tau_ms, 1.0)
    s_f = finger_credit(event.finger, note.finger)
    S = weights.composite(s_p, s_t, s_f)
    return NoteOutcome(OutcomeKind.MATCHED, ref_index, event_index, dt, s_p, s_t, s_f, S, 1.0 - S)


def missed(ref_index: int) -> NoteOutcome:
    return NoteOutcome(OutcomeKind.MISSED, ref_index, None, None, 0.0, 0.0, 0.0, 0.0, 1.0)


def extra(event_index: int) -> NoteOutcome:
    return NoteOutcome(OutcomeKind.EXTRA, None, event_index, None, 0.0, 0.0, 0.0, 0.0, 1.0)


def pair_cost(note: NoteSpec, event: KeyEvent, cfg: MatchConfig) -> float:
    """Pairing cost, or ``inf`` when the onsets are further apart than the match window."""
    dt = abs(event.onset_ms - note.onset_ms)
    if dt > cfg.match_window_ms:
        return math.inf
    return dt + (cfg.pitch_mismatch_penalty_ms if event.pitch != note.pitch else 0.0)


def assign(notes: Sequence[NoteSpec], events: Sequence[KeyEvent],
           cfg: MatchConfig) -> list[tuple[int, int]]:
    """Optimal one-to-one partial matching as ``(note_index, event_index)`` pairs.

    The objective is lexicographic: the largest number of admissible pairs,
    then the smallest total pair cost. It is solved as a square assignment
    problem where every item may instead take a private "unmatched" slot of
    cost ``U``; ``U`` exceeds any possible total of pair costs, so one more
    pair always wins over any cost saving.
    """
    n, m = len(notes), len(events)
    if n == 0 or m == 0:
        return []
    onsets_n = np.array([x.onset_ms for x in notes], dtype=float)
    onsets_e = np.array([x.onset_ms for x in events], dtype=float)
    pitch_n = np.array([x.pitch for x in notes])
    pitch_e = np.array([x.pitch for x in events])
    dt = np.abs(onsets_n[:, None] - onsets_e[None, :])
    cost = dt + np.where(pitch_n[:, None] != pitch_e[None, :], cfg.pitch_mismatch_penalty_ms, 0.0)
    allowed = dt <= cfg.match_window_ms
    if not allowed.any():
        return []
    U = (min(n, m) + 1) * (cfg.match_window_ms + cfg.pitch_mismatch_penalty_ms) + 1.0
    forbidden = 4.0 * U
    big = np.zeros((n + m, m + n))
    big[:n, :m] = np.where(allowed, cost, forbidden)
    big[:n, m:] = forbidden
    big[n:, :m] = forbidden
    big[np.arange(n), m + np.arange(n)] = U
    big[n + np.arange(m), np.arange(m)] = U
    rows, cols = linear_sum_assignment(big)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if r < n and c < m and allowed[r, c]]


def outcomes_from_pairs(notes: Sequence[NoteSpec], events: Sequence[KeyEvent],
                        pairs: Sequence[tuple[int, int]], tau_ms: float,
                        weights: ScoreWeights) -> list[NoteOutcome]:
    matched_notes = {i for i, _ in pairs}
    matched_events = {j for _, j in pairs}
    rows = []
    for i, j in pairs:
        rows.append((notes[i].onset_ms, 0, events[j].onset_ms,
                     score_matched(notes[i], events[j], tau_ms, weights, i, j)))
    for i, note in enumerate(notes):
        if i not in matched_notes:
            rows.append((note.onset_ms, 1, math.inf, missed(i)))
    for j, ev in enumerate(events):
        if j not in matched_events:
            rows.append((ev.onset_ms, 2, ev.onset_ms, extra(j)))
    rows.sort(key=lambda r: r[:3])
    return [r[3] for r in rows]


def match_events(melody: MelodySpec | Sequence[NoteSpec], events: Sequence[KeyEvent],
                 cfg: MatchConfig = MatchConfig(),
                 weights: ScoreWeights = ScoreWeights()) -> list[NoteOutcome]:
    """Pair events with reference notes and score every note and stray event.

    Outcomes are ordered by reference onset (extra events by their own onset),
    then by event onset.
    """
    notes = melody.notes if isinstance(melody, MelodySpec) else tuple(melody)
    pairs = assign(notes, events, cfg)
    return outcomes_from_pairs(notes, events, pairs, cfg.tau_ms, weights)


def total_cost(notes: Sequence[NoteSpec], events: Sequence[KeyEvent],
               pairs: Sequence[tuple[int, int]], cfg: MatchConfig) -> float:
    return sum(pair_cost(notes[i], events[j], cfg) for i, j in pairs)


@dataclass(frozen=True)
class TrialMetrics:
    pitch_acc: float
    finger_acc: float
    timing_acc: float
    error_rate: float
    n_reference: int
    n_matched: int
    n_extra: int

    @property
    def score(self) -> float:
        """Trial composite, ``1 - error_rate``."""
        return 1.0 - self.error_rate


def trial_summary(outcomes: Sequence[NoteOutcome], weights: ScoreWeights = ScoreWeights()) -> TrialMetrics:
    """Aggregate one trial's outcomes.

    Pitch and finger accuracy average over reference notes (misses count 0).
    Timing accuracy averages over matched notes only and is 0 when nothing
    matched. The error rate weights timing over all reference notes.
    """
    refs = [o for o in outcomes if o.kind is not OutcomeKind.EXTRA]
    if not refs:
        raise ScoringError("empty trial")
    n = len(refs)
    matched = [o for o in refs if o.kind is OutcomeKind.MATCHED]
    pitch_acc = sum(o.s_p for o in refs) / n
    finger_acc = sum(o.s_f for o in refs) / n
    timing_all = sum(o.s_t for o in refs) / n
    timing_acc = sum(o.s_t for o in matched) / len(matched) if matched else 0.0
    error_rate = 1.0 - weights.composite(pitch_acc, timing_all, finger_acc)
    return TrialMetrics(pitch_acc, finger_acc, timing_acc, error_rate, n, len(matched),
                        len(outcomes) - n)


def score_trial(melody: MelodySpec, events: Sequence[KeyEvent], cfg: MatchConfig = MatchConfig(),
                weights: ScoreWeights = ScoreWeights()) -> TrialMetrics:
    return trial_summary(match_events(melody, events, cfg, weights), weights)


__all__ = [
    "FingerLabel", "KeyEvent", "MatchConfig", "NoteOutcome", "OutcomeKind", "ScoreWeights",
    "ScoringError", "TrialMetrics", "assign", "finger_credit", "match_events", "pair_cost",
    "score_matched", "score_trial", "total_cost", "trial_summary",
]
