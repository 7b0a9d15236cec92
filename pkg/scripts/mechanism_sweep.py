"""Sweep the reliance strength and report the Static minus Dynamic retention gap.

With reliance switched off the two conditions should retain equally; the gap
in pitch-accuracy decline should grow with ``dependence``.
"""
import argparse
from collections import defaultdict

import numpy as np

from ghostguide.analysis import paired_stats, retention_scores
from ghostguide.config import AppConfig
from ghostguide.simulator import default_workers, run_experiment


def decline_gap(cfg, seed, workers):
    corpus = run_experiment(cfg, seed=seed, workers=workers)
    rows = defaultdict(dict)
    for r in retention_scores(corpus.logs):
        if r.metric == "pitch_acc":
            rows[r.participant_id][r.condition] = -r.delta
    pids = sorted(rows)
    return paired_stats([rows[p]["Static"] for p in pids], [rows[p]["Dynamic"] for p in pids])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--participants", type=int, default=60)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--levels", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0],
                    help="multiples of the default dependence and reliance_gain")
    args = ap.parse_args()

    base = AppConfig().learner
    print("scale,dependence,reliance_gain,gap_mean,ci_low,ci_high,dz")
    for scale in args.levels:
        learner = {"dependence": base.dependence * scale, "reliance_gain": base.reliance_gain * scale}
        cfg = AppConfig().with_overrides(learner=learner, protocol={
            "participants": args.participants, "record_motion": False, "record_frames": False})
        ps = decline_gap(cfg, args.seed, default_workers())
        print(f"{scale:g},{learner['dependence']:.4f},{learner['reliance_gain']:.4f},{ps.mean_diff:.4f},"
              f"{ps.ci95[0]:.4f},{ps.ci95[1]:.4f},{np.round(ps.dz, 3)}")


if __name__ == "__main__":
    main()
