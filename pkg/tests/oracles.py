"""Independent reference computations used by the unit and acceptance tests.

Nothing here calls into the package's algorithms: matchings and DTW paths
are enumerated exhaustively, formulas are written out longhand.
"""
from __future__ import annotations

import math
import statistics

import numpy as np


def admissible(note, event, window_ms):
    return abs(event.onset_ms - note.onset_ms) <= window_ms


def pair_cost(note, event, penalty_ms):
    return abs(event.onset_ms - note.onset_ms) + (penalty_ms if event.pitch != note.pitch else 0.0)


def best_matching(notes, events, window_ms, penalty_ms):
    """(cardinality, cost) of the best partial one-to-one matching, by exhaustive search.

    Best means most pairs, then least total cost.
    """
    best = (0, 0.0)

    def walk(i, used, size, cost):
        nonlocal best
        if i == len(notes):
            if size > best[0] or (size == best[0] and cost < best[1]):
                best = (size, cost)
            return
        walk(i + 1, used, size, cost)  # note i left unmatched
        for j, ev in enumerate(events):
            if not used >> j & 1 and admissible(notes[i], ev, window_ms):
                walk(i + 1, used | 1 << j, size + 1, cost + pair_cost(notes[i], ev, penalty_ms))

    walk(0, 0, 0, 0.0)
    return best


def dtw_paths(n, m):
    """Every monotone path from (0, 0) to (n-1, m-1) with steps (1,0), (0,1), (1,1)."""
    def walk(i, j, path):
        if (i, j) == (n - 1, m - 1):
            yield path
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            a, b = i + di, j + dj
            if a < n and b < m:
                yield from walk(a, b, path + [(a, b)])

    yield from walk(0, 0, [(0, 0)])


def dtw_brute(a, b):
    """Mean step cost of the cheapest alignment path (shortest among equal-cost paths)."""
    a = np.asarray(a, dtype=float).reshape(len(a), -1).tolist()
    b = np.asarray(b, dtype=float).reshape(len(b), -1).tolist()
    dist = [[math.dist(x, y) for y in b] for x in a]
    best = None
    for path in dtw_paths(len(a), len(b)):
        key = (sum(dist[i][j] for i, j in path), len(path))
        if best is None or key < best:
            best = key
    return best[0] / best[1]


def composite(s_p, s_t, s_f):
    return 0.7 * s_p + 0.2 * s_t + 0.1 * s_f


def note_score(dt, pitch_ok, finger_gap, tau=120.0):
    s_t = 1 - min(abs(dt) / tau, 1)
    s_p = 1.0 if pitch_ok and abs(dt) <= tau else 0.0
    s_f = {0: 1.0, 1: 0.5}.get(finger_gap, 0.0)
    S = composite(s_p, s_t, s_f)
    return s_p, s_t, s_f, S, 1 - S


def slope_normal_equations(x, y):
    X = np.column_stack([np.ones(len(x)), np.asarray(x, dtype=float)])
    coef = np.linalg.solve(X.T @ X, X.T @ np.asarray(y, dtype=float))
    return float(coef[1])


def paired_textbook(a, b):
    d = [x - y for x, y in zip(a, b)]
    n = len(d)
    mean = statistics.fmean(d)
    sd = statistics.stdev(d)
    se = sd / math.sqrt(n)
    return {"mean_diff": mean, "sd": sd, "se": se, "t": mean / se, "dz": mean / sd}
