"""Kinematic stand-in for tracked right-hand motion.

Produces 26-joint frames from a list of key presses: the hand slides
laterally so the pressing finger sits over its key, and the pressing
finger's chain dips toward the key bed around each press. Only the palm and
wrist rotate (a small yaw that follows lateral position). Good enough to
exercise recording, compression and similarity code paths; not a model of
real hand kinematics.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .sessionlog import N_JOINTS, MotionFrame

OCTAVE_WIDTH_M = 0.165
FINGER_SPACING_M = 0.022
PRESS_DEPTH_M = 0.01
RAMP_MS = 60.0
POSITION_DECIMALS = 4

# finger -> joint indices from metacarpal to tip, and dip share per joint
_CHAINS = {1: (2, 3, 4, 5), 2: (6, 7, 8, 9, 10), 3: (11, 12, 13, 14, 15),
           4: (16, 17, 18, 19, 20), 5: (21, 22, 23, 24, 25)}
_DIP_SHARE = {4: (0.1, 0.4, 0.8, 1.0), 5: (0.0, 0.2, 0.5, 0.8, 1.0)}


def _template() -> np.ndarray:
    """Rest pose relative to the wrist, metres (x right, y forward, z up)."""
    pose = np.zeros((N_JOINTS, 3))
    pose[0] = (0.0, 0.045, -0.005)  # palm
    for finger, chain in _CHAINS.items():
        x = (finger - 3) * FINGER_SPACING_M
        if finger == 1:
            base, tip = np.array([-0.025, 0.02, -0.01]), np.array([x, 0.075, -0.045])
        else:
            base, tip = np.array([x * 0.6, 0.03, 0.0]), np.array([x, 0.11, -0.05])
        for k, j in enumerate(chain):
            pose[j] = base + (tip - base) * (k / (len(chain) - 1))
    return pose


TEMPLATE = _template()


def key_x(pitch: float) -> float:
    return (pitch - 60.0) * OCTAVE_WIDTH_M / 12.0


def press_profile(t: np.ndarray, onset: float, duration: float) -> np.ndarray:
    """0..1 dip envelope: ramp down before onset, hold, ramp up after release."""
    down = np.clip((t - (onset - RAMP_MS)) / RAMP_MS, 0.0, 1.0)
    up = np.clip(((onset + duration + RAMP_MS) - t) / RAMP_MS, 0.0, 1.0)
    return np.minimum(down, up)


def synthesize(presses: Sequence[tuple[int, float, float, int]], times: np.ndarray,
               noise_m: float = 0.0, rng: np.random.Generator | None = None) -> np.ndarray:
    """Joint positions (T, 26, 3) for presses ``(pitch, onset_ms, duration_ms, finger)``.

    ``times`` are on the same clock as the press onsets.
    """
    times = np.asarray(times, dtype=float)
    pos = np.broadcast_to(TEMPLATE, (times.size, N_JOINTS, 3)).copy()
    if presses:
        onsets = np.array([p[1] for p in presses], dtype=float)
        centres = np.array([key_x(p[0]) - (p[3] - 3) * FINGER_SPACING_M for p in presses])
        cx = np.interp(times, onsets, centres)
    else:
        cx = np.zeros(times.size)
    pos[:, :, 0] += cx[:, None]
    pos[:, :, 1] += -0.12
    pos[:, :, 2] += 0.065
    for pitch, onset, duration, finger in presses:
        env = press_profile(times, onset, duration)
        if not env.any():
            continue
        chain = _CHAINS[int(finger)]
        for j, share in zip(chain, _DIP_SHARE[len(chain)]):
            pos[:, j, 2] -= PRESS_DEPTH_M * share * env
    if noise_m > 0:
        rng = rng if rng is not None else np.random.default_rng()
        pos += rng.normal(0.0, noise_m, size=pos.shape)
    return np.round(pos, POSITION_DECIMALS)


def rotations_for(positions: np.ndarray) -> np.ndarray:
    """Identity joints except palm and wrist, which yaw with lateral hand position."""
    T = positions.shape[0]
    rot = np.zeros((T, N_JOINTS, 4))
    rot[:, :, 0] = 1.0
    yaw = 0.5 * positions[:, 1, 0]
    half = yaw / 2.0
    for j in (0, 1):
        rot[:, j, 0] = np.cos(half)
        rot[:, j, 3] = np.sin(half)
    return rot


def frame_times(t0_ms: float, span_ms: float, frame_hz: float = 30.0) -> np.ndarray:
    n = int(math.floor(span_ms * frame_hz / 1000.0)) + 1
    return t0_ms + np.arange(n) * (1000.0 / frame_hz)


def motion_frames(presses, t0_ms: float, span_ms: float, frame_hz: float = 30.0,
                  noise_m: float = 0.0, rng: np.random.Generator | None = None) -> list[MotionFrame]:
    """Frames on the session clock; press onsets are relative to ``t0_ms``."""
    local = frame_times(0.0, span_ms, frame_hz)
    pos = synthesize(presses, local, noise_m, rng)
    rot = rotations_for(pos)
    return [MotionFrame(float(t0_ms + t), pos[k], rot[k]) for k, t in enumerate(local)]
