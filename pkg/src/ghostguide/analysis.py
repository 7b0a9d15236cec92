"""Objective analyses over a session-log corpus.

Learning curves, retention scores, per-participant learning slopes,
block-switch summaries, paired statistics and the hand-ghost motion
similarity battery (position / velocity cosine, wrist-to-joint direction
error, DTW mean step cost).
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats
from scipy.spatial.distance import cdist

from .config import AnalysisConfig, config_from_dict
from .melody import MelodySpec, load_melody
from .scoring import MatchConfig, OutcomeKind, match_events
from .sessionlog import N_JOINTS, WRIST, MotionFrame, Phase, SessionLog, load_log, read_log
from .simulator import MANIFEST_VERSION, Assignment, Corpus, sha256

METRICS = ("pitch_acc", "finger_acc", "timing_acc", "error_rate")


class AnalysisError(ValueError):
    pass


# --- corpus IO --------------------------------------------------------------

def load_corpus(path, verify: bool = True) -> Corpus:
    """Load a corpus from its directory or manifest file, checking file hashes."""
    path = Path(path)
    manifest_path = path / "manifest.json" if path.is_dir() else path
    root = manifest_path.parent
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise AnalysisError(f"{manifest_path}: cannot read manifest ({exc})") from None
    if manifest.get("schema_version") != MANIFEST_VERSION:
        raise AnalysisError(f"{manifest_path}: unsupported manifest version {manifest.get('schema_version')!r}")
    logs = []
    for entry in manifest["logs"]:
        fp = root / entry["file"]
        text = fp.read_text(encoding="utf-8")
        if verify and sha256(text) != entry["sha256"]:
            raise AnalysisError(f"{fp}: hash mismatch")
        logs.append(read_log(text))
    melodies = {mid: load_melody(root / rel) for mid, rel in manifest["melodies"].items()}
    refs = {mid: load_log(root / rel) for mid, rel in manifest.get("references", {}).items()}
    cfg = config_from_dict(manifest["config"])
    assignments = [Assignment(a["participant_id"], k + 1, a["group"])
                   for k, a in enumerate(manifest.get("assignments", []))]
    return Corpus(logs, melodies, refs, assignments, manifest.get("seed", 0), cfg)


# --- basic statistics -------------------------------------------------------

def mean_sem(values: Sequence[float]) -> tuple[float, float, int]:
    """Mean, standard error (sample sd / sqrt n; 0 for n = 1) and n."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise AnalysisError("no values")
    sem = float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), sem, int(x.size)


def ols_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope on mean-centred x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise AnalysisError("x and y differ in length")
    if x.size < 3:
        raise AnalysisError("slope needs at least 3 points")
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx == 0.0:
        raise AnalysisError("degenerate x variance")
    return float(np.dot(xc, y - y.mean()) / sxx)


@dataclass(frozen=True)
class PairedStats:
    n: int
    mean_diff: float
    sd: float
    se: float
    t: float
    p: float
    dz: float
    ci95: tuple[float, float]


def paired_stats(a: Sequence[float], b: Sequence[float]) -> PairedStats:
    """Paired t statistics on ``a - b`` with Cohen's d_z and a 95% t interval."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise AnalysisError("length mismatch")
    if a.size < 2:
        raise AnalysisError("need at least 2 pairs")
    d = a - b
    n = d.size
    m = float(d.mean())
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise AnalysisError("zero variance in paired differences")
    se = sd / math.sqrt(n)
    t = m / se
    q = float(stats.t.ppf(0.975, n - 1))
    p = float(2.0 * stats.t.sf(abs(t), n - 1))
    return PairedStats(n, m, sd, se, t, p, m / sd, (m - q * se, m + q * se))


def time_fit(user_onsets: Sequence[float], ref_onsets: Sequence[float]) -> tuple[float, float]:
    """(a, b) minimising sum (user - (a * ref + b))^2."""
    u = np.asarray(user_onsets, dtype=float)
    r = np.asarray(ref_onsets, dtype=float)
    if u.shape != r.shape:
        raise AnalysisError("length mismatch")
    if u.size < 2:
        raise AnalysisError("time fit needs at least 2 matched pairs")
    rc = r - r.mean()
    srr = float(np.dot(rc, rc))
    if srr == 0.0:
        raise AnalysisError("zero variance in reference onsets")
    a = float(np.dot(rc, u - u.mean()) / srr)
    return a, float(u.mean() - a * r.mean())


# --- corpus summaries ---------------------------------------------------------

def _metric(log: SessionLog, name: str) -> float:
    if log.metrics is None:
        raise AnalysisError(f"{log.filename}: no metrics")
    return 1.0 - log.metrics.error_rate if name == "score" else getattr(log.metrics, name)


@dataclass(frozen=True)
class CurvePoint:
    condition: str
    segment: str
    loop_index: int
    metric: str
    mean: float
    sem: float
    n: int


def learning_curves(logs: Iterable[SessionLog]) -> list[CurvePoint]:
    """Per (condition, segment, loop) mean and SEM across participants."""
    groups = defaultdict(list)
    for g in logs:
        if g.phase is Phase.TRAINING:
            groups[(g.condition.value, g.segment.value, g.index)].append(g)
    if not groups:
        raise AnalysisError("empty corpus: no training logs")
    seg_order = {"Phrase1": 0, "Phrase2": 1, "Full": 2}
    out = []
    for key in sorted(groups, key=lambda k: (k[0], seg_order[k[1]], k[2])):
        for name in METRICS + ("score",):
            m, sem, n = mean_sem([_metric(g, name) for g in groups[key]])
            out.append(CurvePoint(*key, name, m, sem, n))
    return out


def best_tests(logs: Iterable[SessionLog]) -> dict:
    """(participant, condition, phase) -> retained test log."""
    out = {}
    for g in logs:
        if g.phase in (Phase.IMMEDIATE, Phase.RETENTION) and g.is_best:
            out[(g.participant_id, g.condition.value, g.phase.value)] = g
    return out


@dataclass(frozen=True)
class RetentionScore:
    participant_id: str
    condition: str
    metric: str
    immediate: float
    retention: float
    delta: float


def retention_scores(logs: Iterable[SessionLog]) -> list[RetentionScore]:
    """Retention minus immediate (negative means decline) per participant, condition and metric."""
    best = best_tests(logs)
    keys = sorted({(p, c) for p, c, _ in best})
    out = []
    for p, c in keys:
        imm = best.get((p, c, Phase.IMMEDIATE.value))
        ret = best.get((p, c, Phase.RETENTION.value))
        if imm is None or ret is None:
            raise AnalysisError(f"{p}/{c}: missing immediate or retention test")
        for name in METRICS + ("score",):
            a, b = _metric(imm, name), _metric(ret, name)
            out.append(RetentionScore(p, c, name, a, b, b - a))
    return out


@dataclass(frozen=True)
class SlopeRecord:
    participant_id: str
    condition: str
    segment: str
    slope: float


def learning_slopes(logs: Iterable[SessionLog], metric: str = "error_rate") -> list[SlopeRecord]:
    series = defaultdict(list)
    for g in logs:
        if g.phase is Phase.TRAINING:
            series[(g.participant_id, g.condition.value, g.segment.value)].append((g.index, _metric(g, metric)))
    out = []
    for key in sorted(series):
        pts = sorted(series[key])
        if len(pts) < 3:
            continue
        out.append(SlopeRecord(*key, ols_slope([p[0] for p in pts], [p[1] for p in pts])))
    return out


@dataclass(frozen=True)
class BlockSwitch:
    first_condition: str
    participant_id: str
    melody_id: str
    initial: float
    end: float


def block_switch(logs: Iterable[SessionLog]) -> list[BlockSwitch]:
    """Second-block start (mean of first two loops) and end (mean of last two loops) per participant."""
    first_cond = {}
    second = defaultdict(list)
    for g in logs:
        if g.phase is not Phase.TRAINING:
            continue
        if g.block == 1:
            first_cond[g.participant_id] = g.condition.value
        elif g.block == 2:
            second[g.participant_id].append(g)
    out = []
    for pid in sorted(second):
        seq = sorted(second[pid], key=lambda g: g.t0_ms)
        scores = [_metric(g, "score") for g in seq]
        out.append(BlockSwitch(first_cond.get(pid, "?"), pid, seq[0].melody_id, float(np.mean(scores[:2])),
                               float(np.mean(scores[-2:]))))
    return out


def block_switch_summary(records: Sequence[BlockSwitch], criterion: float = 0.60) -> dict:
    """first-block condition -> {initial, end, frac_above_criterion, n}."""
    groups = defaultdict(list)
    for r in records:
        groups[r.first_condition].append(r)
    out = {}
    for cond in sorted(groups):
        rs = groups[cond]
        out[cond] = {
            "initial": float(np.mean([r.initial for r in rs])),
            "end": float(np.mean([r.end for r in rs])),
            "frac_above_criterion": sum(r.end > criterion for r in rs) / len(rs),
            "n": len(rs),
        }
    return out


def series_switch(scores: Sequence[float], criterion: float = 0.60) -> dict:
    """Block-switch statistics for a single chronological loop-score series."""
    s = list(scores)
    if len(s) < 2:
        raise AnalysisError("need at least 2 loops")
    return {"initial": (s[0] + s[1]) / 2, "end": (s[-2] + s[-1]) / 2,
            "frac_above_criterion": float((s[-2] + s[-1]) / 2 > criterion)}


# --- motion similarity --------------------------------------------------------

@dataclass
class Trajectory:
    t: np.ndarray      # (T,)
    pos: np.ndarray    # (T, J, 3)
    rot: np.ndarray    # (T, J, 4)

    @classmethod
    def from_frames(cls, frames: Sequence[MotionFrame], t_offset: float = 0.0) -> "Trajectory":
        if not frames:
            raise AnalysisError("empty trajectory")
        return cls(np.array([f.t_ms for f in frames]) + t_offset, np.stack([f.positions for f in frames]),
                   np.stack([f.rotations for f in frames]))

    def __len__(self):
        return self.t.size


def resample(traj: Trajectory, times: Sequence[float]) -> Trajectory:
    """Linear position / slerp rotation interpolation at ``times``, clamped to the recorded span."""
    if len(traj) == 0:
        raise AnalysisError("empty trajectory")
    times = np.asarray(times, dtype=float)
    if len(traj) == 1:
        return Trajectory(times, np.repeat(traj.pos, times.size, 0), np.repeat(traj.rot, times.size, 0))
    tc = np.clip(times, traj.t[0], traj.t[-1])
    seg = np.clip(np.searchsorted(traj.t, tc, side="right") - 1, 0, len(traj) - 2)
    u = (tc - traj.t[seg]) / (traj.t[seg + 1] - traj.t[seg])
    pos = traj.pos[seg] + u[:, None, None] * (traj.pos[seg + 1] - traj.pos[seg])
    pos = np.where((u == 1.0)[:, None, None], traj.pos[seg + 1], pos)
    rot = _slerp_rows(traj.rot[seg], traj.rot[seg + 1], u[:, None])
    return Trajectory(times, pos, rot)


def _slerp_rows(q0: np.ndarray, q1: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Elementwise shortest-arc slerp over leading axes; same rule as ``sessionlog.slerp``."""
    d = np.sum(q0 * q1, axis=-1)
    q1_near = np.where((d < 0.0)[..., None], -q1, q1)
    d = np.abs(d)
    theta = np.arccos(np.minimum(d, 1.0))
    s = np.sin(theta)
    near = d > 0.9995
    safe_s = np.where(near, 1.0, s)
    w0 = np.where(near, 1.0 - u, np.sin((1.0 - u) * theta) / safe_s)
    w1 = np.where(near, u, np.sin(u * theta) / safe_s)
    out = w0[..., None] * q0 + w1[..., None] * q1_near
    out = np.where(near[..., None], out / np.linalg.norm(out, axis=-1, keepdims=True), out)
    exact0 = (u == 0.0)[..., None]
    exact1 = (u == 1.0)[..., None]
    return np.where(exact0, q0, np.where(exact1, q1, out))


def _quat_conj(q: np.ndarray) -> np.ndarray:
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def _quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    w, xyz = q[..., :1], q[..., 1:]
    t = 2.0 * np.cross(xyz, v)
    return v + w * t + np.cross(xyz, t)


def wrist_anchor(traj: Trajectory, orientation: bool = False) -> Trajectory:
    """Joint positions relative to the wrist; optionally rotated into the wrist frame."""
    rel = traj.pos - traj.pos[:, WRIST:WRIST + 1, :]
    if orientation:
        inv = _quat_conj(traj.rot[:, WRIST:WRIST + 1, :])
        rel = _quat_rotate(np.broadcast_to(inv, rel.shape[:2] + (4,)), rel)
    return Trajectory(traj.t, rel, traj.rot)


def default_joint_mask() -> tuple[int, ...]:
    return tuple(j for j in range(N_JOINTS) if j != WRIST)


@dataclass(frozen=True)
class SimilarityReport:
    position_cosine: float
    velocity_cosine: float
    direction_median_angle_deg: float
    dtw_mean_step_cost: float
    composite_similarity: float
    skipped_position: int
    skipped_velocity: int


def _pairwise(u: np.ndarray, g: np.ndarray, eps: float = 1e-12):
    """Cosines and angles (degrees) between paired vectors, skipping near-zero ones."""
    nu = np.linalg.norm(u, axis=-1)
    ng = np.linalg.norm(g, axis=-1)
    ok = (nu > eps) & (ng > eps)
    u, g = u[ok], g[ok]
    dot = np.einsum("...k,...k->...", u, g)
    cos = np.clip(dot / (nu[ok] * ng[ok]), -1.0, 1.0)
    # atan2 keeps small angles accurate where arccos(1 - eps) would not
    ang = np.degrees(np.arctan2(np.linalg.norm(np.cross(u, g), axis=-1), dot))
    return cos, ang, int((~ok).sum())


def similarity_battery(user: Trajectory, ghost: Trajectory, joint_mask: Sequence[int] | None = None,
                       with_dtw: bool = True) -> SimilarityReport:
    """Compare two wrist-anchored trajectories on a common timeline."""
    if user.pos.shape != ghost.pos.shape:
        raise AnalysisError("trajectories must share timeline and joints")
    joints = list(joint_mask) if joint_mask is not None else list(default_joint_mask())
    if not joints:
        raise AnalysisError("empty joint overlap")
    u, g = user.pos[:, joints], ghost.pos[:, joints]
    pos_cos, angles, skip_p = _pairwise(u, g)
    if pos_cos.size == 0:
        raise AnalysisError("all position vectors are zero")
    vel_cos, skip_v = np.array([]), 0
    if len(user) > 1:
        vel_cos, _, skip_v = _pairwise(np.diff(u, axis=0), np.diff(g, axis=0))
    velocity = float(vel_cos.mean()) if vel_cos.size else float("nan")
    median_angle = float(np.median(angles))
    position = float(pos_cos.mean())
    parts = [(position + 1.0) / 2.0, 1.0 - median_angle / 180.0]
    if vel_cos.size:
        parts.append((velocity + 1.0) / 2.0)
    composite = float(np.clip(np.mean(parts), 0.0, 1.0))
    dtw = dtw_mean_step_cost(u, g) if with_dtw else float("nan")
    return SimilarityReport(position, velocity, median_angle, dtw, composite, skip_p, skip_v)


def _as_series(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise AnalysisError("empty input")
    return x.reshape(x.shape[0], -1)


def dtw_mean_step_cost(a, b) -> float:
    """Total cost of the optimal DTW path divided by its length.

    Step cost is the Euclidean distance between stacked frames; steps are
    (1,0), (0,1), (1,1). Among equal-cost paths the shortest is used.
    Computed along anti-diagonals so each sweep is vectorised.
    """
    A, B = _as_series(a), _as_series(b)
    n, m = A.shape[0], B.shape[0]
    if n == 0 or m == 0:
        raise AnalysisError("empty input")
    if A.shape[1] != B.shape[1]:
        raise AnalysisError("series differ in frame width")
    C = cdist(A, B)
    D = np.full((n, m), np.inf)
    L = np.zeros((n, m), dtype=np.int64)
    D[0, 0], L[0, 0] = C[0, 0], 1
    for d in range(1, n + m - 1):
        i = np.arange(max(0, d - m + 1), min(d, n - 1) + 1)
        j = d - i
        best = np.full(i.size, np.inf)
        blen = np.zeros(i.size, dtype=np.int64)
        for di, dj in ((1, 1), (1, 0), (0, 1)):
            pi, pj = i - di, j - dj
            ok = (pi >= 0) & (pj >= 0)
            cand = np.full(i.size, np.inf)
            clen = np.zeros(i.size, dtype=np.int64)
            cand[ok] = D[pi[ok], pj[ok]]
            clen[ok] = L[pi[ok], pj[ok]]
            better = (cand < best) | ((cand == best) & (clen < blen))
            best = np.where(better, cand, best)
            blen = np.where(better, clen, blen)
        D[i, j] = best + C[i, j]
        L[i, j] = blen + 1
    return float(D[-1, -1] / L[-1, -1])


@dataclass(frozen=True)
class SimilarityRecord:
    participant_id: str
    condition: str
    phase: str
    report: SimilarityReport
    time_scale: float
    time_offset_ms: float


def trial_similarity(log: SessionLog, melody: MelodySpec, reference: SessionLog,
                     match: MatchConfig = MatchConfig(), analysis: AnalysisConfig = AnalysisConfig()
                     ) -> SimilarityRecord | None:
    """Align a test trial's hand motion to the ghost recording and score similarity.

    Returns None when the trial has no motion or fewer than two matched notes.
    """
    if not log.motion or not reference.motion:
        return None
    events = [e.shifted(-log.t0_ms) for e in log.events]
    outcomes = match_events(melody, events, match)
    pairs = [(events[o.event_index].onset_ms, melody.notes[o.ref_index].onset_ms)
             for o in outcomes if o.kind is OutcomeKind.MATCHED]
    if len(pairs) < 2:
        return None
    a, b = time_fit([p[0] for p in pairs], [p[1] for p in pairs])
    user = Trajectory.from_frames(log.motion, -log.t0_ms + log.motion_clock_offset_ms)
    ghost = Trajectory.from_frames(reference.motion, reference.motion_clock_offset_ms - reference.t0_ms)
    user_on_ref = resample(user, a * ghost.t + b)
    user_on_ref.t = ghost.t
    report = similarity_battery(wrist_anchor(user_on_ref, analysis.orientation_normalize),
                                wrist_anchor(ghost, analysis.orientation_normalize), analysis.joint_mask)
    return SimilarityRecord(log.participant_id, log.condition.value, log.phase.value, report, a, b)


def similarity_table(corpus: Corpus, analysis: AnalysisConfig | None = None) -> list[SimilarityRecord]:
    analysis = analysis or corpus.config.analysis
    out = []
    for key, g in sorted(best_tests(corpus.logs).items()):
        ref = corpus.references.get(g.melody_id)
        if ref is None:
            continue
        rec = trial_similarity(g, corpus.melodies[g.melody_id], ref, corpus.config.match, analysis)
        if rec is not None:
            out.append(rec)
    return out


# --- report -------------------------------------------------------------------

def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:+.4f}" if math.isfinite(x) else "nan"


def condition_contrast(values: dict, label: str) -> str:
    """Paired Dynamic - Static line for participant-keyed values {(pid, cond): v}."""
    pids = sorted({p for p, c in values if (p, "Static") in values and (p, "Dynamic") in values})
    if len(pids) < 2:
        return f"{label}: not enough paired participants"
    dyn = [values[(p, "Dynamic")] for p in pids]
    sta = [values[(p, "Static")] for p in pids]
    try:
        ps = paired_stats(dyn, sta)
    except AnalysisError as exc:
        return f"{label}: {exc}"
    return (f"{label}: Dynamic {np.mean(dyn):.4f} vs Static {np.mean(sta):.4f}, diff {_fmt(ps.mean_diff)} "
            f"95% CI [{_fmt(ps.ci95[0])}, {_fmt(ps.ci95[1])}], t({ps.n - 1}) = {ps.t:.3f}, p = {ps.p:.4g}, "
            f"dz = {ps.dz:.3f}")


def analyze(corpus: Corpus, with_similarity: bool = True) -> dict[str, str]:
    """All tables and the text summary as file name -> content."""
    cfg = corpus.config
    curves = learning_curves(corpus.logs)
    retention = retention_scores(corpus.logs)
    slopes = learning_slopes(corpus.logs)
    switch = block_switch(corpus.logs)
    switch_summary = block_switch_summary(switch, cfg.analysis.criterion)
    sims = similarity_table(corpus, cfg.analysis) if with_similarity else []

    files = {
        "learning_curves.csv": _csv([vars(c) for c in curves]),
        "retention.csv": _csv([vars(r) for r in retention]),
        "slopes.csv": _csv([vars(s) for s in slopes]),
        "block_switch.csv": _csv([vars(r) for r in switch]),
        "similarity.csv": _csv([{"participant_id": s.participant_id, "condition": s.condition,
                                 "phase": s.phase, **vars(s.report), "time_scale": s.time_scale,
                                 "time_offset_ms": s.time_offset_ms} for s in sims]),
    }

    lines = [f"participants: {len({g.participant_id for g in corpus.logs})}", f"logs: {len(corpus.logs)}",
             f"seed: {corpus.seed}", ""]
    best = best_tests(corpus.logs)
    lines.append("test performance (retained trial means)")
    for phase in (Phase.IMMEDIATE.value, Phase.RETENTION.value):
        for cond in ("Static", "Dynamic"):
            rows = [g for (p, c, ph), g in best.items() if c == cond and ph == phase]
            if rows:
                vals = "  ".join(f"{m}={np.mean([getattr(g.metrics, m) for g in rows]):.4f}" for m in METRICS)
                lines.append(f"  {phase:<14} {cond:<8} {vals}")
    lines.append("")
    lines.append("retention change (retention - immediate; negative = decline)")
    by_metric = defaultdict(dict)
    for r in retention:
        by_metric[r.metric][(r.participant_id, r.condition)] = r.delta
    for name in METRICS:
        for cond in ("Static", "Dynamic"):
            vals = [v for (p, c), v in by_metric[name].items() if c == cond]
            if vals:
                lines.append(f"  {name:<11} {cond:<8} mean delta {_fmt(float(np.mean(vals)))}")
        lines.append("  " + condition_contrast(by_metric[name], f"{name} delta contrast"))
    lines.append("")
    lines.append(f"error-rate learning slopes ({cfg.analysis.slope_segment})")
    slope_vals = {(s.participant_id, s.condition): s.slope for s in slopes if s.segment == cfg.analysis.slope_segment}
    for cond in ("Static", "Dynamic"):
        vals = [v for (p, c), v in slope_vals.items() if c == cond]
        if vals:
            m, sem, n = mean_sem(vals)
            lines.append(f"  {cond:<8} mean {_fmt(m)} SEM {sem:.4f} n={n}")
    lines.append("  " + condition_contrast(slope_vals, "slope contrast"))
    lines.append("")
    lines.append(f"block switch (second block, criterion {cfg.analysis.criterion:.2f})")
    for cond, s in switch_summary.items():
        lines.append(f"  {cond}-first: initial {s['initial']:.4f} end {s['end']:.4f} "
                     f"above criterion {s['frac_above_criterion']:.3f} (n={s['n']})")
    if sims:
        lines.append("")
        lines.append("hand-ghost similarity (composite, 0-1; not comparable to any published table)")
        for phase in (Phase.IMMEDIATE.value, Phase.RETENTION.value):
            vals = {(s.participant_id, s.condition): s.report.composite_similarity for s in sims
                    if s.phase == phase}
            lines.append("  " + condition_contrast(vals, phase))
    files["summary.txt"] = "\n".join(lines) + "\n"
    return files


def gnuplot_files(corpus: Corpus) -> dict[str, str]:
    """Whitespace-separated learning-curve columns, one file per condition and metric."""
    out = {}
    for cp in learning_curves(corpus.logs):
        if cp.metric not in METRICS:
            continue
        name = f"curve_{cp.condition}_{cp.metric}.dat"
        if name not in out:
            out[name] = "# segment loop mean sem n\n"
        out[name] += f"{cp.segment} {cp.loop_index} {cp.mean!r} {cp.sem!r} {cp.n}\n"
    return out


def write_report(files: dict[str, str], out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
