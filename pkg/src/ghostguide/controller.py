"""Error-to-opacity controller for the ghost hand.

Per frame: the instantaneous error is one minus the mean composite of the
last ``window_notes`` scored notes; an asymmetric EMA smooths it (slow rise,
fast decay); the smoothed error maps linearly onto ``[alpha_min, alpha_max]``
and is clamped. Static mode holds opacity at ``static_alpha`` but keeps
tracking the smoothed error so both conditions log the same quantities.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple


class Mode(str, enum.Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class ControllerConfig:
    mode: Mode = Mode.DYNAMIC
    alpha_min: float = 0.08
    alpha_max: float = 0.8
    static_alpha: float = 0.5
    lambda_up: float = 0.033
    lambda_down: float = 0.065
    frame_hz: float = 30.0
    window_notes: int = 4
    easing_max_step: float = 0.05
    e_initial: float = 1.0
    reset_each_loop: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(str(self.mode).lower() if not isinstance(self.mode, Mode)
                                              else self.mode))
        for name in ("alpha_min", "alpha_max", "static_alpha", "easing_max_step", "e_initial"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not self.alpha_min < self.alpha_max:
            raise ValueError("alpha_min must be < alpha_max")
        for name in ("lambda_up", "lambda_down"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.lambda_up > self.lambda_down:
            raise ValueError("lambda_up must not exceed lambda_down")
        if not self.frame_hz > 0:
            raise ValueError("frame_hz must be > 0")
        if int(self.window_notes) != self.window_notes or self.window_notes < 1:
            raise ValueError("window_notes must be an integer >= 1")

    @property
    def frame_ms(self) -> float:
        return 1000.0 / self.frame_hz


def opacity(e_hat: float, cfg: ControllerConfig) -> tuple[float, float]:
    """(unclamped, clamped) opacity for a smoothed error."""
    raw = cfg.alpha_min + (cfg.alpha_max - cfg.alpha_min) * e_hat
    return raw, min(max(raw, cfg.alpha_min), cfg.alpha_max)


def ema_step(e_hat_prev: float, e_t: float, lambda_up: float, lambda_down: float) -> float:
    lam = lambda_up if e_t > e_hat_prev else lambda_down
    return lam * e_t + (1.0 - lam) * e_hat_prev


def time_constant_s(lam: float, frame_hz: float) -> float:
    """Seconds for a unit step to cover 1 - 1/e of its way."""
    return -1.0 / (frame_hz * math.log(1.0 - lam))


class FrameTrace(NamedTuple):
    t_ms: float
    E_t: float
    e_hat: float
    alpha_raw: float
    alpha: float
    alpha_shown: float


@dataclass
class ControllerState:
    e_hat: float
    alpha: float
    alpha_shown: float
    recent_S: deque = field(default_factory=deque)
    frame_index: int = 0


class OpacityController:
    """Stateful wrapper around the update rules; one instance per stream."""

    def __init__(self, cfg: ControllerConfig = ControllerConfig()):
        self.cfg = cfg
        self.state = self.reset()

    def reset(self) -> ControllerState:
        cfg = self.cfg
        if cfg.mode is Mode.STATIC:
            alpha = cfg.static_alpha
        else:
            alpha = opacity(cfg.e_initial, cfg)[1]
        self.state = ControllerState(cfg.e_initial, alpha, alpha, deque(maxlen=int(cfg.window_notes)))
        return self.state

    def push_score(self, S: float) -> None:
        self.state.recent_S.append(float(S))

    def on_note_outcome(self, outcome) -> None:
        self.push_score(outcome.S)

    def instantaneous_error(self) -> float:
        buf = self.state.recent_S
        if not buf:
            return self.cfg.e_initial
        return 1.0 - sum(buf) / len(buf)

    def tick(self, t_ms: float, e_t: float | None = None) -> FrameTrace:
        """Advance one frame. ``e_t`` overrides the note-window error when given."""
        cfg, st = self.cfg, self.state
        if e_t is None:
            e_t = self.instantaneous_error()
        st.e_hat = ema_step(st.e_hat, e_t, cfg.lambda_up, cfg.lambda_down)
        if cfg.mode is Mode.STATIC:
            raw = alpha = cfg.static_alpha
        else:
            raw, alpha = opacity(st.e_hat, cfg)
        st.alpha = alpha
        step = cfg.easing_max_step
        if step > 0:
            st.alpha_shown += min(max(alpha - st.alpha_shown, -step), step)
        else:
            st.alpha_shown = alpha
        st.frame_index += 1
        return FrameTrace(t_ms, e_t, st.e_hat, raw, alpha, st.alpha_shown)

    def run(self, times, errors) -> list[FrameTrace]:
        """Drive the controller with an explicit error series from a fresh state."""
        self.reset()
        return [self.tick(t, e) for t, e in zip(times, errors)]
