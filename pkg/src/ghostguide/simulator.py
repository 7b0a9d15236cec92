"""Synthetic learners run through the two-block training / test protocol.

Each participant gets a Latin-square group (condition order x melody
pairing). Per block: three segments x ``loops_per_segment`` guided training
loops, an immediate test and, after a decay step, a retention test, each of
``trials_per_test`` unguided trials with the better one flagged.

Learner model (invented for desk-scale runs):

* per-note skill in [0, 1]; during training the shown opacity adds
  ``guidance_gain * alpha`` to the effective skill;
* after each loop, skill grows by ``learning_rate * (1 - skill) * g`` with
  engagement ``g = 1 - engagement_cost * mean_alpha``;
* reliance accrues as ``reliance_gain * mean_alpha`` per loop and costs
  ``dependence * reliance`` of effective skill whenever guidance is absent.
  Right after training, ``recall_masking`` of that cost is hidden by the
  fresh memory of the ghost; the mask is gone at retention.

Retention trials reuse the random streams of the matching immediate trials
(common random numbers), so the immediate-to-retention change reflects skill
change rather than draw-to-draw noise.

Every random stream derives from ``(seed, participant number, ...)`` via
``numpy.random.SeedSequence``, which keeps corpora identical for any worker
count.
"""
from __future__ import annotations

import hashlib
import heapq
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import handmodel
from .config import AppConfig, config_to_dict
from .controller import FrameTrace, Mode, OpacityController
from .melody import MelodySpec, Segment, builtin_melody, segment_offset, serialize_melody, slice_phrase
from .scoring import (KeyEvent, MatchConfig, ScoreWeights, TrialMetrics, assign, match_events,
                      outcomes_from_pairs, trial_summary)
from .sessionlog import Condition, Phase, SessionLog, write_log

MANIFEST_VERSION = "ghostguide.manifest/1"
WRONG_PITCH_OFFSETS = (-2, -1, 1, 2, -12, 12)


@dataclass(frozen=True)
class Assignment:
    participant_id: str
    number: int
    group: str

    def blocks(self) -> list[tuple[Condition, str]]:
        """[(condition, melody code), ...] in the order the blocks are run."""
        out = []
        for part in self.group.split("/"):
            out.append((Condition.STATIC if part[0] == "S" else Condition.DYNAMIC, part[1]))
        return out


def participant_ids(n: int) -> list[str]:
    width = max(2, len(str(n)))
    return [f"P{k:0{width}d}" for k in range(1, n + 1)]


def assign_groups(n: int, seed: int, rows: Sequence[str] = ("SA/DB", "SB/DA", "DA/SB", "DB/SA")) -> list[Assignment]:
    """Round-robin Latin-square groups over a seeded shuffle of participants."""
    if n < 1:
        raise ValueError("need at least one participant")
    ids = participant_ids(n)
    order = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,))).permutation(n)
    groups = [None] * n
    for slot, k in enumerate(order):
        groups[k] = rows[slot % len(rows)]
    return [Assignment(ids[k], k + 1, groups[k]) for k in range(n)]


def stream_seed(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1, dtype=np.uint64)[0] >> 1)


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    notes, extras, motion = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(notes), np.random.default_rng(extras), np.random.default_rng(motion)


@dataclass
class Learner:
    params: object
    experienced: bool
    skill: dict = field(default_factory=dict)  # melody id -> per-note array
    reliance: float = 0.0

    @classmethod
    def sample(cls, params, melodies: dict[str, MelodySpec], rng: np.random.Generator) -> "Learner":
        experienced = bool(rng.random() < params.experienced_fraction)
        base = params.init_skill_experienced if experienced else params.init_skill_novice
        offset = rng.normal(0.0, params.init_skill_participant_sd)
        skill = {}
        for mid in sorted(melodies):
            n = len(melodies[mid])
            skill[mid] = np.clip(base + offset + rng.normal(0.0, params.init_skill_note_sd, n), 0.0, 1.0)
        return cls(params, experienced, skill)

    def start_block(self) -> None:
        self.reliance = 0.0

    def test_penalty(self, immediate: bool) -> float:
        p = self.params
        return p.dependence * self.reliance * ((1.0 - p.recall_masking) if immediate else 1.0)

    def decay(self, melody_id: str) -> None:
        self.skill[melody_id] = self.skill[melody_id] * self.params.retention_decay

    def learn(self, melody_id: str, first_note: int, mean_alpha: np.ndarray) -> None:
        p = self.params
        sl = slice(first_note, first_note + len(mean_alpha))
        s = self.skill[melody_id][sl]
        g = 1.0 - p.engagement_cost * mean_alpha
        self.skill[melody_id][sl] = np.clip(s + p.learning_rate * (1.0 - s) * g, 0.0, 1.0)
        self.reliance += p.reliance_gain * float(np.mean(mean_alpha))


def emit_note(note, effective: float, params, rng: np.random.Generator) -> KeyEvent | None:
    """One attempt at a reference note. Draws a fixed number of variates whatever happens."""
    u_emit, u_pitch, u_wrong, u_slip, u_dir, u_dur = rng.random(6)
    z = rng.standard_normal()
    if u_emit >= params.emit_floor + (1.0 - params.emit_floor) * effective:
        return None
    pitch = note.pitch
    if u_pitch >= params.pitch_floor + (1.0 - params.pitch_floor) * effective:
        pitch = int(np.clip(pitch + WRONG_PITCH_OFFSETS[int(u_wrong * len(WRONG_PITCH_OFFSETS))], 0, 127))
    sd = params.timing_sd_ms * (1.0 - params.timing_skill_gain * effective)
    onset = max(0.0, note.onset_ms + sd * z)
    finger = int(note.finger)
    if u_slip < params.finger_slip_prob * (1.0 - effective):
        step = -1 if u_dir < 0.5 else 1
        if not 1 <= finger + step <= 5:
            step = -step
        finger += step
    return KeyEvent(pitch, onset, note.duration_ms * (0.8 + 0.3 * u_dur), finger)


def extra_presses(melody: MelodySpec, mean_effective: float, params, rng: np.random.Generator) -> list[KeyEvent]:
    count = rng.poisson(params.extra_press_rate * (1.0 - mean_effective))
    out = []
    for _ in range(count):
        ref = melody.notes[int(rng.integers(len(melody)))]
        onset = float(rng.uniform(0.0, melody.span_ms))
        out.append(KeyEvent(int(np.clip(ref.pitch + rng.choice((-1, 1)), 0, 127)), onset,
                            float(rng.uniform(80.0, 300.0)), int(rng.integers(1, 6))))
    return out


@dataclass
class LoopResult:
    events: list  # melody clock
    frames: list  # FrameTrace, melody clock
    outcomes: list
    metrics: TrialMetrics
    mean_alpha: np.ndarray
    duration_ms: float


def perform_loop(learner: Learner, melody: MelodySpec, first_note: int, melody_id: str,
                 controller: OpacityController, seed: int, match: MatchConfig = MatchConfig(),
                 weights: ScoreWeights = ScoreWeights(), reset: bool = True) -> LoopResult:
    """One guided training loop over a (sliced) melody.

    Runs on the melody clock at the controller's frame rate. A note is
    attempted ``match_window_ms`` before its onset using the opacity shown at
    that moment; its outcome reaches the controller once its window closes.
    Trial metrics use the full offline matching. The learner is not updated
    here; the caller applies ``Learner.learn`` with the returned mean opacity.
    """
    p = learner.params
    notes = melody.notes
    n = len(notes)
    W = match.match_window_ms
    rng_notes, rng_extra, _ = _streams(seed)
    if reset:
        controller.reset()
    skill = learner.skill[melody_id][first_note:first_note + n]

    extras = extra_presses(melody, float(np.clip(np.mean(skill), 0, 1)), p, rng_extra)
    extras.sort(key=lambda e: e.onset_ms)
    gen_events: list[KeyEvent] = []
    end_ms = notes[-1].end_ms + W
    frame_ms = controller.cfg.frame_ms
    n_frames = int(math.floor(end_ms / frame_ms)) + 1

    frames: list[FrameTrace] = []
    next_gen = next_fin = 0
    known: list[KeyEvent] = []  # unconsumed events whose onset has passed
    upcoming = [(e.onset_ms, -1 - k, e) for k, e in enumerate(extras)]  # heap keyed by onset
    heapq.heapify(upcoming)
    for k in range(n_frames):
        t = k * frame_ms
        while next_gen < n and notes[next_gen].onset_ms - W <= t:
            eff = min(1.0, skill[next_gen] + p.guidance_gain * controller.state.alpha_shown)
            ev = emit_note(notes[next_gen], eff, p, rng_notes)
            if ev is not None:
                heapq.heappush(upcoming, (ev.onset_ms, next_gen, ev))
                gen_events.append(ev)
            next_gen += 1
        while upcoming and upcoming[0][0] <= t:
            known.append(heapq.heappop(upcoming)[2])
        if next_fin < n and notes[next_fin].onset_ms + W <= t:
            due = next_fin
            while due < n and notes[due].onset_ms + W <= t:
                due += 1
            live = next_fin
            while live < n and notes[live].onset_ms - W <= t:
                live += 1
            cand = notes[next_fin:live]
            pairs = assign(cand, known, match)
            by_note = {i: j for i, j in pairs}
            used = set()
            for i in range(due - next_fin):
                j = by_note.get(i)
                if j is None:
                    controller.push_score(0.0)
                else:
                    used.add(j)
                    o = outcomes_from_pairs(cand, known, [(i, j)], match.tau_ms, weights)[0]
                    controller.push_score(o.S)
            known = [e for j, e in enumerate(known) if j not in used]
            next_fin = due
        if known and known[0].onset_ms + 2 * W <= t:
            stale = [e for e in known if e.onset_ms + 2 * W <= t]
            for _ in stale:
                controller.push_score(0.0)
            known = [e for e in known if e.onset_ms + 2 * W > t]
        frames.append(controller.tick(t))

    events = sorted(gen_events + extras, key=lambda e: (e.onset_ms, e.pitch))
    outcomes = match_events(melody, events, match, weights)
    metrics = trial_summary(outcomes, weights)
    times = np.array([f.t_ms for f in frames])
    shown = np.array([f.alpha_shown for f in frames])
    mean_alpha = np.empty(n)
    for i, note in enumerate(notes):
        sel = (times >= note.onset_ms) & (times <= note.end_ms)
        mean_alpha[i] = shown[sel].mean() if sel.any() else shown[np.argmin(np.abs(times - note.onset_ms))]
    return LoopResult(events, frames, outcomes, metrics, mean_alpha, end_ms)


@dataclass
class TrialResult:
    events: list
    outcomes: list
    metrics: TrialMetrics
    seed: int


def perform_trial(learner: Learner, melody: MelodySpec, penalty: float, seed: int,
                  match: MatchConfig = MatchConfig(), weights: ScoreWeights = ScoreWeights()) -> TrialResult:
    """One unguided test trial of the full melody."""
    p = learner.params
    rng_notes, rng_extra, _ = _streams(seed)
    eff = np.clip(learner.skill[melody.id] - penalty, 0.0, 1.0)
    events = [ev for note, e in zip(melody.notes, eff) if (ev := emit_note(note, float(e), p, rng_notes))]
    events += extra_presses(melody, float(eff.mean()), p, rng_extra)
    events.sort(key=lambda e: (e.onset_ms, e.pitch))
    outcomes = match_events(melody, events, match, weights)
    return TrialResult(events, outcomes, trial_summary(outcomes, weights), seed)


def perform_test(learner: Learner, melody: MelodySpec, immediate: bool, seeds: Sequence[int],
                 match: MatchConfig = MatchConfig(),
                 weights: ScoreWeights = ScoreWeights()) -> tuple[int, list[TrialResult]]:
    """Run the unguided trials; returns (index of the better trial, all trials).

    Better means the higher composite ``1 - error_rate``; ties go to the earlier trial.
    """
    penalty = learner.test_penalty(immediate)
    trials = [perform_trial(learner, melody, penalty, s, match, weights) for s in seeds]
    best = max(range(len(trials)), key=lambda k: (trials[k].metrics.score, -k))
    return best, trials


def _shift_events(events, dt):
    return [e.shifted(dt) for e in events]


def _shift_frames(frames, dt):
    return [f._replace(t_ms=f.t_ms + dt) for f in frames]


def simulate_participant(a: Assignment, cfg: AppConfig, seed: int,
                         melodies: dict[str, MelodySpec]) -> list[SessionLog]:
    """Every log of one participant, in session-clock order."""
    proto, lp = cfg.protocol, cfg.learner
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(a.number, 0)))
    learner = Learner.sample(lp, melodies, rng)
    clock = 0.0
    logs: list[SessionLog] = []
    frame_hz = cfg.controller.frame_hz
    for b, (condition, code) in enumerate(a.blocks(), start=1):
        melody = melodies[proto.melodies[code]]
        learner.start_block()
        mode = Mode.STATIC if condition is Condition.STATIC else Mode.DYNAMIC
        controller = OpacityController(replace(cfg.controller, mode=mode))
        common = dict(participant_id=a.participant_id, condition=condition, melody_id=melody.id, block=b,
                      group=a.group)
        for s, seg_name in enumerate(proto.segments):
            segment = Segment(seg_name)
            part = slice_phrase(melody, segment)
            first, _ = segment_offset(melody, segment)
            controller.reset()
            for loop in range(1, proto.loops_per_segment + 1):
                sd = stream_seed(seed, a.number, b, 1, s, loop)
                res = perform_loop(learner, part, first, melody.id, controller, sd, cfg.match, cfg.weights,
                                   reset=cfg.controller.reset_each_loop)
                learner.learn(melody.id, first, res.mean_alpha)
                logs.append(SessionLog(
                    **common, phase=Phase.TRAINING, segment=segment, index=loop, rng_seed=sd, t0_ms=clock,
                    events=_shift_events(res.events, clock),
                    frames=_shift_frames(res.frames, clock) if proto.record_frames else [],
                    metrics=res.metrics))
                clock += res.duration_ms + proto.countdown_ms
        for phase in (Phase.IMMEDIATE, Phase.RETENTION):
            immediate = phase is Phase.IMMEDIATE
            if not immediate:
                learner.decay(melody.id)
                clock += proto.retention_gap_ms
            # retention trial k shares its random streams with immediate trial k
            seeds = [stream_seed(seed, a.number, b, 2, k) for k in range(1, proto.trials_per_test + 1)]
            best, trials = perform_test(learner, melody, immediate, seeds, cfg.match, cfg.weights)
            for k, trial in enumerate(trials, start=1):
                span = melody.span_ms + proto.motion_tail_ms
                motion = []
                if proto.record_motion and (proto.motion_trials == "all" or k - 1 == best):
                    _, _, rng_motion = _streams(stream_seed(seed, a.number, b, 3 + (not immediate), k))
                    presses = [(e.pitch, e.onset_ms, e.duration_ms, e.finger) for e in trial.events]
                    noise = lp.motion_noise_m * (1.0 - float(np.mean(learner.skill[melody.id])) * 0.5)
                    motion = handmodel.motion_frames(presses, clock, span, frame_hz, noise, rng_motion)
                logs.append(SessionLog(
                    **common, phase=phase, segment=Segment.FULL, index=k, rng_seed=trial.seed, t0_ms=clock,
                    is_best=(k - 1 == best), events=_shift_events(trial.events, clock), motion=motion,
                    metrics=trial.metrics))
                clock += span + proto.countdown_ms
        clock += proto.block_break_ms
    return logs


def demonstration_log(melody: MelodySpec, frame_hz: float = 30.0, tail_ms: float = 500.0) -> SessionLog:
    """The ghost's reference recording: the melody played as written, noiseless motion."""
    events = [KeyEvent(n.pitch, n.onset_ms, n.duration_ms, int(n.finger)) for n in melody.notes]
    presses = [(e.pitch, e.onset_ms, e.duration_ms, e.finger) for e in events]
    motion = handmodel.motion_frames(presses, 0.0, melody.span_ms + tail_ms, frame_hz)
    return SessionLog(participant_id="ghost", condition=Condition.STATIC, melody_id=melody.id,
                      phase=Phase.DEMONSTRATION, segment=Segment.FULL, index=1, rng_seed=0, events=events,
                      motion=motion)


@dataclass
class Corpus:
    logs: list
    melodies: dict
    references: dict
    assignments: list
    seed: int
    config: AppConfig

    def training(self):
        return [g for g in self.logs if g.phase is Phase.TRAINING]

    def tests(self):
        return [g for g in self.logs if g.phase in (Phase.IMMEDIATE, Phase.RETENTION)]


def _participant_job(args):
    a, cfg, seed, melodies = args
    return simulate_participant(a, cfg, seed, melodies)


def load_protocol_melodies(cfg: AppConfig, extra: dict[str, MelodySpec] | None = None) -> dict[str, MelodySpec]:
    extra = extra or {}
    out = {}
    for mid in cfg.protocol.melodies.values():
        out[mid] = extra[mid] if mid in extra else builtin_melody(mid)
    return out


def run_experiment(cfg: AppConfig = AppConfig(), seed: int = 0, workers: int = 1,
                   melodies: dict[str, MelodySpec] | None = None) -> Corpus:
    """Simulate every participant; output is independent of ``workers``."""
    melodies = load_protocol_melodies(cfg, melodies)
    assignments = assign_groups(cfg.protocol.participants, seed, cfg.protocol.latin_rows)
    jobs = [(a, cfg, seed, melodies) for a in assignments]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per = list(pool.map(_participant_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        per = [_participant_job(j) for j in jobs]
    logs = [g for chunk in per for g in chunk]
    refs = {mid: demonstration_log(m, cfg.controller.frame_hz, cfg.protocol.motion_tail_ms)
            for mid, m in sorted(melodies.items())} if cfg.protocol.record_motion else {}
    return Corpus(logs, melodies, refs, assignments, seed, cfg)


def corpus_documents(corpus: Corpus) -> dict[str, str]:
    """Relative path -> document text for every file a corpus is written as (except the manifest)."""
    docs = {}
    for mid, m in sorted(corpus.melodies.items()):
        docs[f"melodies/{mid}.json"] = serialize_melody(m)
    for mid, ref in sorted(corpus.references.items()):
        docs[f"references/{mid}_demo.log.json"] = write_log(ref)
    for g in corpus.logs:
        docs[f"logs/{g.participant_id}/{g.filename}"] = write_log(g)
    return docs


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def corpus_hash(corpus: Corpus) -> str:
    h = hashlib.sha256()
    for path, text in sorted(corpus_documents(corpus).items()):
        h.update(path.encode())
        h.update(b"\0")
        h.update(sha256(text).encode())
    return h.hexdigest()


def write_corpus(corpus: Corpus, out_dir) -> Path:
    """Write logs, melodies, references and ``manifest.json``; returns the manifest path."""
    out = Path(out_dir)
    docs = corpus_documents(corpus)
    entries = []
    for rel, text in sorted(docs.items()):
        path = out / rel
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
        entries.append({"file": rel, "sha256": sha256(text)})
    by_file = {e["file"]: e for e in entries}
    manifest = {
        "schema_version": MANIFEST_VERSION,
        "seed": corpus.seed,
        "config": config_to_dict(corpus.config),
        "assignments": [{"participant_id": a.participant_id, "group": a.group} for a in corpus.assignments],
        "melodies": {mid: f"melodies/{mid}.json" for mid in sorted(corpus.melodies)},
        "references": {mid: f"references/{mid}_demo.log.json" for mid in sorted(corpus.references)},
        "logs": [by_file[r] for r in sorted(by_file) if r.startswith("logs/")],
        "corpus_sha256": corpus_hash(corpus),
    }
    path = out / "manifest.json"
    try:
        out.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
