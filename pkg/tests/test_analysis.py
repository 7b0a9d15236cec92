import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

import oracles
from ghostguide import analysis as an
from ghostguide.scoring import TrialMetrics
from ghostguide.sessionlog import N_JOINTS, WRIST, SessionLog


def metrics(score, pitch=None):
    err = 1 - score
    return TrialMetrics(pitch if pitch is not None else score, score, score, err, 10, 10, 0)


def log(pid, cond, phase="Training", index=1, score=0.5, block=1, t0=0.0, segment="Full", best=None, pitch=None):
    return SessionLog(pid, cond, "melody_a", phase, segment, index, 0, block=block, t0_ms=t0,
                      is_best=best, metrics=metrics(score, pitch))


# --- statistics ---------------------------------------------------------------

def test_mean_sem_two_values():
    m, sem, n = an.mean_sem([0.3, 0.7])
    assert m == pytest.approx(0.5) and sem == pytest.approx(0.2) and n == 2
    assert an.mean_sem([0.4])[1] == 0.0


def test_ols_exact_linear():
    loops = np.arange(1, 11)
    assert an.ols_slope(loops, 0.5 - 0.01 * loops) == pytest.approx(-0.01, abs=1e-15)
    assert an.ols_slope(loops, np.full(10, 0.3)) == 0.0


def test_ols_errors():
    with pytest.raises(an.AnalysisError, match="at least 3"):
        an.ols_slope([1, 2], [1, 2])
    with pytest.raises(an.AnalysisError, match="degenerate"):
        an.ols_slope([2, 2, 2], [1, 2, 3])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=30), st.integers(0, 10**6))
def test_ols_matches_normal_equations(y, seed):
    x = np.random.default_rng(seed).permutation(len(y)).astype(float)
    assert an.ols_slope(x, y) == pytest.approx(oracles.slope_normal_equations(x, y), abs=1e-10)


def test_paired_identical_and_degenerate():
    a = [0.1, 0.5, 0.3]
    with pytest.raises(an.AnalysisError, match="zero variance"):
        an.paired_stats(a, a)
    with pytest.raises(an.AnalysisError, match="zero variance"):
        an.paired_stats([2, 2, 2, 2], [1, 1, 1, 1])
    with pytest.raises(an.AnalysisError, match="length mismatch"):
        an.paired_stats([1, 2], [1, 2, 3])


def test_paired_zero_mean_difference():
    r = an.paired_stats([1.0, 2.0, 3.0, 4.0], [1.5, 1.5, 3.5, 3.5])
    assert r.t == 0.0 and r.dz == 0.0 and r.p == pytest.approx(1.0)


def test_paired_matches_textbook_and_scipy():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=12), rng.normal(size=12)
    r = an.paired_stats(a, b)
    ref = oracles.paired_textbook(a, b)
    for key in ("mean_diff", "sd", "se", "t", "dz"):
        assert getattr(r, key) == pytest.approx(ref[key], abs=1e-12)
    tt = stats.ttest_rel(a, b)
    assert r.p == pytest.approx(tt.pvalue, abs=1e-12)
    ci = tt.confidence_interval(0.95)
    assert r.ci95 == pytest.approx((ci.low, ci.high), abs=1e-12)


def test_time_fit():
    ref = np.array([0.0, 500, 1000, 1700])
    assert an.time_fit(ref, ref) == pytest.approx((1.0, 0.0))
    a, b = an.time_fit(1.02 * ref + 35, ref)
    assert abs(a - 1.02) < 1e-9 and abs(b - 35) < 1e-9
    with pytest.raises(an.AnalysisError):
        an.time_fit([1.0], [2.0])
    with pytest.raises(an.AnalysisError, match="zero variance"):
        an.time_fit([1.0, 2.0], [5.0, 5.0])


# --- corpus summaries ---------------------------------------------------------

def test_learning_curve_flat_and_pair():
    logs = [log("P01", "Static", index=k, score=0.6) for k in (1, 2, 3)]
    pts = [p for p in an.learning_curves(logs) if p.metric == "error_rate"]
    assert [(p.loop_index, p.mean, p.sem) for p in pts] == [(1, pytest.approx(0.4), 0.0)] * 0 + [
        (k, pytest.approx(0.4), 0.0) for k in (1, 2, 3)]
    logs = [log("P01", "Static", score=0.2), log("P02", "Static", score=0.6)]
    pt = next(p for p in an.learning_curves(logs) if p.metric == "pitch_acc")
    assert pt.mean == pytest.approx(0.4) and pt.sem == pytest.approx(0.2) and pt.n == 2


def test_learning_curves_empty():
    with pytest.raises(an.AnalysisError, match="empty"):
        an.learning_curves([])


def test_retention_sign_convention():
    logs = [log("P01", "Static", "ImmediateTest", score=0.9, best=True),
            log("P01", "Static", "RetentionTest", score=0.8, best=True),
            log("P01", "Static", "RetentionTest", index=2, score=0.99, best=False)]
    rows = {r.metric: r for r in an.retention_scores(logs)}
    assert rows["pitch_acc"].delta == pytest.approx(-0.1)
    assert rows["error_rate"].delta == pytest.approx(0.1)


def test_retention_equal_tests():
    logs = [log("P01", "Dynamic", ph, score=0.7, best=True) for ph in ("ImmediateTest", "RetentionTest")]
    assert all(r.delta == 0.0 for r in an.retention_scores(logs))


def test_retention_missing_pair():
    with pytest.raises(an.AnalysisError, match="missing"):
        an.retention_scores([log("P01", "Static", "ImmediateTest", best=True)])


def test_block_switch_examples():
    assert an.series_switch([0.7] * 10) == {"initial": 0.7, "end": 0.7, "frac_above_criterion": 1.0}
    s = an.series_switch([0.2 + 0.1 * k for k in range(10)])
    assert s["initial"] == pytest.approx(0.25) and s["end"] == pytest.approx(1.05)


def test_block_switch_groups_by_first_condition():
    logs = []
    for pid, first, scores in (("P01", "Static", [0.5, 0.7, 0.8, 0.9]), ("P02", "Dynamic", [0.3, 0.3, 0.5, 0.5])):
        second = "Dynamic" if first == "Static" else "Static"
        logs.append(log(pid, first, index=1, block=1))
        logs += [log(pid, second, index=k + 1, score=s, block=2, t0=100.0 * k) for k, s in enumerate(scores)]
    summary = an.block_switch_summary(an.block_switch(logs))
    assert summary["Static"]["initial"] == pytest.approx(0.6) and summary["Static"]["end"] == pytest.approx(0.85)
    assert summary["Static"]["frac_above_criterion"] == 1.0
    assert summary["Dynamic"]["frac_above_criterion"] == 0.0


def test_slopes_per_participant():
    logs = [log("P01", "Static", index=k, score=0.5 + 0.02 * k) for k in range(1, 11)]
    (rec,) = an.learning_slopes(logs)
    assert rec.slope == pytest.approx(-0.02)


# --- motion -------------------------------------------------------------------

def random_traj(rng, frames=12):
    t = np.cumsum(rng.uniform(20, 40, frames))
    q = rng.normal(size=(frames, N_JOINTS, 4))
    q /= np.linalg.norm(q, axis=-1, keepdims=True)
    return an.Trajectory(t, rng.normal(size=(frames, N_JOINTS, 3)), q)


def test_resample_identity_and_midpoint():
    rng = np.random.default_rng(1)
    tr = random_traj(rng)
    same = an.resample(tr, tr.t)
    assert np.array_equal(same.pos, tr.pos) and np.array_equal(same.rot, tr.rot)
    mid = an.resample(tr, [(tr.t[3] + tr.t[4]) / 2])
    assert np.allclose(mid.pos[0], (tr.pos[3] + tr.pos[4]) / 2)
    clamped = an.resample(tr, [tr.t[0] - 100, tr.t[-1] + 100])
    assert np.array_equal(clamped.pos[0], tr.pos[0]) and np.array_equal(clamped.pos[1], tr.pos[-1])


def test_resample_dense_round_trip():
    t = np.linspace(0, 1000, 41)
    pos = np.sin(t / 150.0)[:, None, None] * np.ones((1, N_JOINTS, 3))
    rot = np.tile([1.0, 0, 0, 0], (41, N_JOINTS, 1))
    tr = an.Trajectory(t, pos, rot)
    dense = an.resample(tr, np.linspace(0, 1000, 401))
    back = an.resample(dense, t)
    assert np.max(np.abs(back.pos - pos)) < 1e-12


def test_resample_empty():
    with pytest.raises(an.AnalysisError):
        an.Trajectory.from_frames([])


def test_wrist_anchor():
    rng = np.random.default_rng(2)
    tr = random_traj(rng)
    anchored = an.wrist_anchor(tr)
    assert np.all(anchored.pos[:, WRIST] == 0.0)
    moved = an.Trajectory(tr.t, tr.pos + rng.normal(size=3), tr.rot)
    assert np.allclose(an.wrist_anchor(moved).pos, anchored.pos, atol=1e-12)


def test_similarity_identity_and_antipodal():
    rng = np.random.default_rng(3)
    g = an.wrist_anchor(random_traj(rng))
    r = an.similarity_battery(g, g)
    assert r.position_cosine == pytest.approx(1.0) and r.velocity_cosine == pytest.approx(1.0)
    assert r.direction_median_angle_deg == 0.0 and r.dtw_mean_step_cost == 0.0
    assert r.composite_similarity == pytest.approx(1.0, abs=1e-12)
    flipped = an.Trajectory(g.t, -g.pos, g.rot)
    r = an.similarity_battery(flipped, g)
    assert r.position_cosine == pytest.approx(-1.0)
    assert r.direction_median_angle_deg == pytest.approx(180.0)
    assert r.skipped_position == 0


def test_similarity_naive_double_loop():
    rng = np.random.default_rng(4)
    u, g = an.wrist_anchor(random_traj(rng, 6)), an.wrist_anchor(random_traj(rng, 6))
    joints = an.default_joint_mask()
    cos, vel, ang = [], [], []
    for f in range(6):
        for j in joints:
            a, b = u.pos[f, j], g.pos[f, j]
            c = sum(x * y for x, y in zip(a, b)) / (math.hypot(*a) * math.hypot(*b))
            cos.append(c)
            ang.append(math.degrees(math.acos(max(-1.0, min(1.0, c)))))
            if f:
                da, db = u.pos[f, j] - u.pos[f - 1, j], g.pos[f, j] - g.pos[f - 1, j]
                vel.append(sum(x * y for x, y in zip(da, db)) / (math.hypot(*da) * math.hypot(*db)))
    r = an.similarity_battery(u, g)
    assert r.position_cosine == pytest.approx(sum(cos) / len(cos), abs=1e-12)
    assert r.velocity_cosine == pytest.approx(sum(vel) / len(vel), abs=1e-12)
    assert r.direction_median_angle_deg == pytest.approx(float(np.median(ang)), abs=1e-6)
    pos, vc = sum(cos) / len(cos), sum(vel) / len(vel)
    expect = ((pos + 1) / 2 + (vc + 1) / 2 + 1 - np.median(ang) / 180) / 3
    assert r.composite_similarity == pytest.approx(expect, abs=1e-8)


def test_similarity_skips_zero_vectors():
    rng = np.random.default_rng(5)
    g = an.wrist_anchor(random_traj(rng))
    r = an.similarity_battery(g, g, joint_mask=[WRIST, 5])
    assert r.skipped_position == len(g)
    with pytest.raises(an.AnalysisError, match="all position vectors are zero"):
        an.similarity_battery(g, g, joint_mask=[WRIST])


def test_dtw_trivial_cases():
    a = np.random.default_rng(6).normal(size=(7, 3))
    assert an.dtw_mean_step_cost(a, a) == 0.0
    p, q = np.array([1.0, 2.0, 2.0]), np.array([4.0, 6.0, 2.0])
    assert an.dtw_mean_step_cost(np.tile(p, (4, 1)), np.tile(q, (6, 1))) == pytest.approx(5.0)
    with pytest.raises(an.AnalysisError):
        an.dtw_mean_step_cost(np.zeros((0, 3)), a)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 10**6))
def test_dtw_matches_brute_force_and_is_symmetric(n, m, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(n, 2)), rng.normal(size=(m, 2))
    got = an.dtw_mean_step_cost(a, b)
    assert got == pytest.approx(oracles.dtw_brute(a, b), abs=1e-9)
    assert got == pytest.approx(an.dtw_mean_step_cost(b, a), abs=1e-12)
    assert got >= 0.0
