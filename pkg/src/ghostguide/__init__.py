"""Adaptive-opacity ghost-hand piano tutoring: scoring, control, simulation and analysis."""
from .controller import ControllerConfig, Mode, OpacityController
from .melody import FingerLabel, MelodySpec, NoteSpec, Segment, builtin_melody, load_melody
from .scoring import KeyEvent, MatchConfig, ScoreWeights, match_events, score_trial

__version__ = "0.1.0"

__all__ = ["ControllerConfig", "FingerLabel", "KeyEvent", "MatchConfig", "MelodySpec", "Mode", "NoteSpec",
           "OpacityController", "ScoreWeights", "Segment", "builtin_melody", "load_melody", "match_events",
           "score_trial"]
