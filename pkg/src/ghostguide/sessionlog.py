"""Versioned session logs, motion frames and keyframe curve compression.

The log schema is this project's own; the study's JSON layout was never
published. A document looks like::

    {"schema_version": "ghostguide.sessionlog/1",
     "header": {...}, "events": [...], "frames": [...], "motion": [...],
     "metrics": {...} | null, "curves": [...] | null}

Motion frames store 26 joints as ``[px, py, pz, qw, qx, qy, qz]`` rows
(metres, unit quaternion) in the calibrated piano frame.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .controller import FrameTrace
from .melody import Segment
from .scoring import KeyEvent, TrialMetrics

SCHEMA_VERSION = "ghostguide.sessionlog/1"

N_JOINTS = 26
JOINT_NAMES = (
    "palm", "wrist",
    "thumb_metacarpal", "thumb_proximal", "thumb_distal", "thumb_tip",
    "index_metacarpal", "index_proximal", "index_intermediate", "index_distal", "index_tip",
    "middle_metacarpal", "middle_proximal", "middle_intermediate", "middle_distal", "middle_tip",
    "ring_metacarpal", "ring_proximal", "ring_intermediate", "ring_distal", "ring_tip",
    "little_metacarpal", "little_proximal", "little_intermediate", "little_distal", "little_tip",
)
WRIST = 1
FINGERTIPS = {1: 5, 2: 10, 3: 15, 4: 20, 5: 25}
QUAT_TOL = 1e-6


class LogError(ValueError):
    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class Condition(str, enum.Enum):
    STATIC = "Static"
    DYNAMIC = "Dynamic"


class Phase(str, enum.Enum):
    TRAINING = "Training"
    IMMEDIATE = "ImmediateTest"
    RETENTION = "RetentionTest"
    DEMONSTRATION = "Demonstration"


@dataclass(eq=False)
class MotionFrame:
    t_ms: float
    positions: np.ndarray  # (26, 3)
    rotations: np.ndarray  # (26, 4), w first

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.rotations = np.asarray(self.rotations, dtype=float)
        if self.positions.shape != (N_JOINTS, 3) or self.rotations.shape != (N_JOINTS, 4):
            raise LogError(f"expected {N_JOINTS} joints with 3 position and 4 rotation components")

    def __eq__(self, other):
        return (isinstance(other, MotionFrame) and self.t_ms == other.t_ms
                and np.array_equal(self.positions, other.positions)
                and np.array_equal(self.rotations, other.rotations))


@dataclass(frozen=True)
class KeyframeCurve:
    channel: str
    keys: tuple  # ((t_ms, value), ...); value is a float or a 4-tuple quaternion

    def __post_init__(self):
        times = [k[0] for k in self.keys]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise LogError("keys must be strictly increasing in t_ms", f"curves.{self.channel}")


@dataclass(eq=True)
class SessionLog:
    participant_id: str
    condition: Condition
    melody_id: str
    phase: Phase
    segment: Segment
    index: int
    rng_seed: int
    block: int = 1
    group: str = ""
    t0_ms: float = 0.0
    motion_clock_offset_ms: float = 0.0
    is_best: bool | None = None
    events: list = field(default_factory=list)
    frames: list = field(default_factory=list)
    motion: list = field(default_factory=list)
    metrics: TrialMetrics | None = None
    curves: list | None = None
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        self.condition = Condition(self.condition)
        self.phase = Phase(self.phase)
        self.segment = Segment(self.segment)
        validate_log(self)

    @property
    def filename(self) -> str:
        return (f"{self.participant_id}_{self.condition.value}_{self.melody_id}_{self.phase.value}_"
                f"{self.segment.value}_{self.index:02d}.log.json")


_HEADER = ("participant_id", "condition", "melody_id", "phase", "segment", "index", "rng_seed",
           "block", "group", "t0_ms", "motion_clock_offset_ms", "is_best")
_TOP = ("schema_version", "header", "events", "frames", "motion", "metrics", "curves")
_EVENT = ("pitch", "onset_ms", "duration_ms", "finger")
_FRAME = FrameTrace._fields
_METRICS = tuple(f.name for f in fields(TrialMetrics))


def validate_log(log: SessionLog) -> None:
    if log.schema_version != SCHEMA_VERSION:
        raise LogError(f"unsupported schema version {log.schema_version!r}", "schema_version")
    onsets = [e.onset_ms for e in log.events]
    for i in range(1, len(onsets)):
        if onsets[i] < onsets[i - 1]:
            raise LogError("events not sorted by onset", f"events[{i}].onset_ms")
    if log.frames and log.phase is not Phase.TRAINING:
        raise LogError("frame traces are recorded during training only", "frames")
    for i in range(1, len(log.frames)):
        if log.frames[i].t_ms <= log.frames[i - 1].t_ms:
            raise LogError("frame times must increase", f"frames[{i}].t_ms")
    if log.motion:
        times = np.array([mf.t_ms for mf in log.motion])
        bad = np.flatnonzero(np.diff(times) <= 0)
        if bad.size:
            raise LogError("motion timestamps must increase", f"motion[{bad[0] + 1}].t_ms")
        norms = np.sqrt(np.einsum("fjk,fjk->fj", *(2 * [np.stack([mf.rotations for mf in log.motion])])))
        bad = np.argwhere(np.abs(norms - 1.0) > QUAT_TOL)
        if bad.size:
            raise LogError("rotation is not a unit quaternion", f"motion[{bad[0][0]}].joints[{bad[0][1]}]")


def _event_to_dict(e: KeyEvent) -> dict:
    return {"pitch": e.pitch, "onset_ms": e.onset_ms, "duration_ms": e.duration_ms, "finger": int(e.finger)}


def _motion_to_list(mf: MotionFrame) -> dict:
    rows = np.concatenate([mf.positions, mf.rotations], axis=1)
    return {"t_ms": mf.t_ms, "joints": rows.tolist()}


def _curve_to_dict(c: KeyframeCurve) -> dict:
    return {"channel": c.channel,
            "keys": [[t, list(v) if isinstance(v, (tuple, list)) else v] for t, v in c.keys]}


def log_to_dict(log: SessionLog) -> dict:
    return {
        "schema_version": log.schema_version,
        "header": {
            "participant_id": log.participant_id,
            "condition": log.condition.value,
            "melody_id": log.melody_id,
            "phase": log.phase.value,
            "segment": log.segment.value,
            "index": log.index,
            "rng_seed": log.rng_seed,
            "block": log.block,
            "group": log.group,
            "t0_ms": log.t0_ms,
            "motion_clock_offset_ms": log.motion_clock_offset_ms,
            "is_best": log.is_best,
        },
        "events": [_event_to_dict(e) for e in log.events],
        "frames": [list(f) for f in log.frames],
        "motion": [_motion_to_list(m) for m in log.motion],
        "metrics": None if log.metrics is None else {k: getattr(log.metrics, k) for k in _METRICS},
        "curves": None if log.curves is None else [_curve_to_dict(c) for c in log.curves],
    }


def write_log(log: SessionLog) -> str:
    """Serialize to the canonical (compact, key-ordered) JSON document."""
    validate_log(log)
    return json.dumps(log_to_dict(log), separators=(",", ":"), allow_nan=False)


def _keys_exact(obj, expected: Sequence[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise LogError("expected an object", where)
    unknown = sorted(set(obj) - set(expected))
    if unknown:
        raise LogError("unknown field", f"{where}.{unknown[0]}" if where else unknown[0])
    missing = [k for k in expected if k not in obj]
    if missing:
        raise LogError("missing field", f"{where}.{missing[0]}" if where else missing[0])


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise LogError(f"expected a finite number, got {x!r}", where)
    return x


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise LogError(f"expected an integer, got {x!r}", where)
    return x


def _str(x, where: str) -> str:
    if not isinstance(x, str):
        raise LogError(f"expected a string, got {x!r}", where)
    return x


def log_from_dict(doc) -> SessionLog:
    if isinstance(doc, dict) and "schema_version" in doc and doc["schema_version"] != SCHEMA_VERSION:
        raise LogError(f"unsupported schema version {doc['schema_version']!r}", "schema_version")
    _keys_exact(doc, _TOP, "")
    h = doc["header"]
    _keys_exact(h, _HEADER, "header")
    try:
        condition = Condition(h["condition"])
    except ValueError:
        raise LogError(f"unknown condition {h['condition']!r}", "header.condition") from None
    try:
        phase = Phase(h["phase"])
    except ValueError:
        raise LogError(f"unknown phase {h['phase']!r}", "header.phase") from None
    try:
        segment = Segment(h["segment"])
    except ValueError:
        raise LogError(f"unknown segment {h['segment']!r}", "header.segment") from None
    if h["is_best"] is not None and not isinstance(h["is_best"], bool):
        raise LogError("expected a boolean or null", "header.is_best")

    events = []
    if not isinstance(doc["events"], list):
        raise LogError("expected an array", "events")
    for i, e in enumerate(doc["events"]):
        where = f"events[{i}]"
        _keys_exact(e, _EVENT, where)
        try:
            events.append(KeyEvent(_int(e["pitch"], where + ".pitch"), _num(e["onset_ms"], where + ".onset_ms"),
                                   _num(e["duration_ms"], where + ".duration_ms"),
                                   _int(e["finger"], where + ".finger")))
        except ValueError as exc:
            if isinstance(exc, LogError):
                raise
            msg = str(exc)
            bad = next((k for k in _EVENT if msg.startswith(k)), None)
            raise LogError(msg, f"{where}.{bad}" if bad else where) from None

    frames = []
    if not isinstance(doc["frames"], list):
        raise LogError("expected an array", "frames")
    for i, row in enumerate(doc["frames"]):
        if not isinstance(row, list) or len(row) != len(_FRAME):
            raise LogError(f"expected {len(_FRAME)} values {list(_FRAME)}", f"frames[{i}]")
        frames.append(FrameTrace(*(_num(v, f"frames[{i}].{k}") for k, v in zip(_FRAME, row))))

    motion = []
    if not isinstance(doc["motion"], list):
        raise LogError("expected an array", "motion")
    for i, mf in enumerate(doc["motion"]):
        where = f"motion[{i}]"
        _keys_exact(mf, ("t_ms", "joints"), where)
        try:
            rows = np.array(mf["joints"], dtype=float)
        except (TypeError, ValueError):
            raise LogError("joints must be numeric rows", where + ".joints") from None
        if rows.shape != (N_JOINTS, 7):
            raise LogError(f"expected {N_JOINTS} joints x 7 values, got shape {rows.shape}", where + ".joints")
        if not np.all(np.isfinite(rows)):
            raise LogError("non-finite joint value", where + ".joints")
        motion.append(MotionFrame(_num(mf["t_ms"], where + ".t_ms"), rows[:, :3], rows[:, 3:]))

    metrics = None
    if doc["metrics"] is not None:
        _keys_exact(doc["metrics"], _METRICS, "metrics")
        vals = doc["metrics"]
        metrics = TrialMetrics(**{k: (_int(vals[k], f"metrics.{k}") if k.startswith("n_")
                                      else _num(vals[k], f"metrics.{k}")) for k in _METRICS})

    curves = None
    if doc["curves"] is not None:
        curves = []
        for i, c in enumerate(doc["curves"]):
            _keys_exact(c, ("channel", "keys"), f"curves[{i}]")
            keys = tuple((k[0], tuple(k[1]) if isinstance(k[1], list) else k[1]) for k in c["keys"])
            curves.append(KeyframeCurve(_str(c["channel"], f"curves[{i}].channel"), keys))

    return SessionLog(
        participant_id=_str(h["participant_id"], "header.participant_id"), condition=condition,
        melody_id=_str(h["melody_id"], "header.melody_id"), phase=phase, segment=segment,
        index=_int(h["index"], "header.index"), rng_seed=_int(h["rng_seed"], "header.rng_seed"),
        block=_int(h["block"], "header.block"), group=_str(h["group"], "header.group"),
        t0_ms=_num(h["t0_ms"], "header.t0_ms"),
        motion_clock_offset_ms=_num(h["motion_clock_offset_ms"], "header.motion_clock_offset_ms"),
        is_best=h["is_best"], events=events, frames=frames, motion=motion, metrics=metrics, curves=curves,
        schema_version=doc["schema_version"],
    )


def read_log(text: str) -> SessionLog:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LogError(f"malformed document (line {exc.lineno}): {exc.msg}") from None
    return log_from_dict(doc)


def load_log(path) -> SessionLog:
    with open(path, encoding="utf-8") as fh:
        return read_log(fh.read())


def align_streams(events: Sequence[KeyEvent], motion: Sequence[MotionFrame],
                  offset_ms: float = 0.0) -> float:
    """Clock offset that maps motion timestamps onto the event clock.

    Streams recorded on the shared session clock have offset 0; otherwise the
    header's ``motion_clock_offset_ms`` is passed in. Raises when the shifted
    motion span and the event span do not overlap.
    """
    if events and motion:
        ev_lo = events[0].onset_ms
        ev_hi = max(e.onset_ms + e.duration_ms for e in events)
        mo_lo, mo_hi = motion[0].t_ms + offset_ms, motion[-1].t_ms + offset_ms
        if ev_hi < mo_lo or mo_hi < ev_lo:
            raise LogError(f"event span [{ev_lo}, {ev_hi}] and motion span [{mo_lo}, {mo_hi}] are disjoint")
    return offset_ms


def log_alignment(log: SessionLog) -> float:
    return align_streams(log.events, log.motion, log.motion_clock_offset_ms)


# --- keyframe compression -------------------------------------------------

def quat_angle(q1, q2) -> np.ndarray:
    """Shortest-arc angle (radians) between unit quaternions, broadcasting on the last axis."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    q2 = np.where(np.sum(q1 * q2, axis=-1, keepdims=True) < 0.0, -q2, q2)
    # chord form stays accurate near zero, where arccos of the dot product does not
    return 4.0 * np.arctan2(np.linalg.norm(q1 - q2, axis=-1), np.linalg.norm(q1 + q2, axis=-1))


def slerp(q0, q1, u) -> np.ndarray:
    """Shortest-arc spherical interpolation; ``u`` may be an array of fractions."""
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    u = np.asarray(u, dtype=float)[..., None]
    d = float(np.dot(q0, q1))
    if d < 0.0:
        q1, d = -q1, -d
    if d > 0.9995:
        out = q0 + u * (q1 - q0)
        return out / np.linalg.norm(out, axis=-1, keepdims=True)
    theta = math.acos(min(d, 1.0))
    s = math.sin(theta)
    return (np.sin((1.0 - u) * theta) / s) * q0 + (np.sin(u * theta) / s) * q1


def _span_error(t: np.ndarray, v: np.ndarray, a: int, b: int, rotation: bool) -> np.ndarray:
    u = (t[a + 1:b] - t[a]) / (t[b] - t[a])
    if rotation:
        return quat_angle(slerp(v[a], v[b], u), v[a + 1:b])
    return np.abs(v[a] + u * (v[b] - v[a]) - v[a + 1:b])


def compress_curve(samples: Sequence, threshold: float, rotation: bool = False,
                   channel: str = "") -> KeyframeCurve:
    """Keep the fewest-needed samples so linear (or slerp) reconstruction stays under ``threshold``.

    Recursive worst-point subdivision: a span is kept as a straight segment
    when every interior sample deviates by less than ``threshold`` (metres,
    or shortest-arc radians for quaternions); otherwise the worst sample
    becomes a key. A threshold of 0 keeps every sample, and compressing an
    already-compressed curve returns it unchanged.
    """
    if len(samples) < 2:
        raise LogError("at least 2 samples are needed", f"curves.{channel}" if channel else None)
    if threshold < 0:
        raise LogError("threshold must be >= 0")
    t = np.array([s[0] for s in samples], dtype=float)
    if np.any(np.diff(t) <= 0):
        raise LogError("sample times must increase", f"curves.{channel}" if channel else None)
    v = np.array([s[1] for s in samples], dtype=float)
    keep = np.zeros(len(t), dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, len(t) - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        err = _span_error(t, v, a, b, rotation)
        k = int(np.argmax(err))
        if err[k] >= threshold:
            k += a + 1
            keep[k] = True
            stack.append((k, b))
            stack.append((a, k))
    idx = np.flatnonzero(keep)
    keys = tuple((samples[i][0], tuple(samples[i][1]) if rotation else samples[i][1]) for i in idx)
    return KeyframeCurve(channel, keys)


def evaluate_curve(curve: KeyframeCurve, t, rotation: bool = False) -> np.ndarray:
    """Piecewise linear / slerp reconstruction at times ``t`` (clamped at the ends)."""
    kt = np.array([k[0] for k in curve.keys], dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not rotation:
        return np.interp(t, kt, np.array([k[1] for k in curve.keys], dtype=float))
    kv = np.array([k[1] for k in curve.keys], dtype=float)
    out = np.empty((t.size, 4))
    seg = np.clip(np.searchsorted(kt, t, side="right") - 1, 0, len(kt) - 2)
    for s in np.unique(seg):
        sel = seg == s
        u = np.clip((t[sel] - kt[s]) / (kt[s + 1] - kt[s]), 0.0, 1.0)
        out[sel] = slerp(kv[s], kv[s + 1], u)
    return out


def compress_motion(motion: Sequence[MotionFrame], pos_threshold: float,
                    rot_threshold: float) -> list[KeyframeCurve]:
    """One curve per joint position axis and one quaternion curve per joint."""
    t = [m.t_ms for m in motion]
    pos = np.stack([m.positions for m in motion])
    rot = np.stack([m.rotations for m in motion])
    curves = []
    for j in range(N_JOINTS):
        for axis, name in enumerate("xyz"):
            curves.append(compress_curve(list(zip(t, pos[:, j, axis].tolist())), pos_threshold,
                                         channel=f"{JOINT_NAMES[j]}.pos.{name}"))
        curves.append(compress_curve(list(zip(t, rot[:, j].tolist())), rot_threshold, rotation=True,
                                     channel=f"{JOINT_NAMES[j]}.rot"))
    return curves
