"""Reference-score data model and the melody file format.

A melody file is a UTF-8 JSON object::

    {
      "id": "melody_a",
      "bpm": 120,
      "phrase_boundary_index": 12,
      "notes": [{"pitch": 60, "onset_ms": 0, "duration_ms": 450, "finger": 1}, ...]
    }

Unknown fields are rejected. Notes are single (monophonic) with strictly
increasing onsets.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, replace
from importlib import resources


class MelodyError(ValueError):
    """Malformed or invalid melody document.

    ``field`` names the offending location (e.g. ``notes[3].onset_ms``) and
    ``line`` is set for syntax errors.
    """

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


class FingerLabel(enum.IntEnum):
    THUMB = 1
    INDEX = 2
    MIDDLE = 3
    RING = 4
    PINKY = 5


class Segment(str, enum.Enum):
    PHRASE1 = "Phrase1"
    PHRASE2 = "Phrase2"
    FULL = "Full"


@dataclass(frozen=True)
class NoteSpec:
    pitch: int
    onset_ms: float
    duration_ms: float
    finger: FingerLabel

    def __post_init__(self):
        _check_note(self, "note")

    @property
    def end_ms(self) -> float:
        return self.onset_ms + self.duration_ms


def _check_note(note: NoteSpec, where: str) -> None:
    if isinstance(note.pitch, bool) or not isinstance(note.pitch, int) or not 0 <= note.pitch <= 127:
        raise MelodyError(f"pitch must be an integer in [0, 127], got {note.pitch!r}", f"{where}.pitch")
    if not _is_finite_number(note.onset_ms) or note.onset_ms < 0:
        raise MelodyError(f"onset_ms must be a finite number >= 0, got {note.onset_ms!r}", f"{where}.onset_ms")
    if not _is_finite_number(note.duration_ms) or note.duration_ms <= 0:
        raise MelodyError(f"duration_ms must be a finite number > 0, got {note.duration_ms!r}",
                          f"{where}.duration_ms")
    if not isinstance(note.finger, FingerLabel):
        try:
            object.__setattr__(note, "finger", FingerLabel(note.finger))
        except ValueError:
            raise MelodyError(f"finger must be 1..5, got {note.finger!r}", f"{where}.finger") from None


def _is_finite_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and x == x and abs(x) != float("inf")


@dataclass(frozen=True)
class MelodySpec:
    id: str
    bpm: float
    notes: tuple[NoteSpec, ...]
    phrase_boundary_index: int

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(self.notes))
        if not isinstance(self.id, str) or not self.id:
            raise MelodyError("id must be a non-empty string", "id")
        if not _is_finite_number(self.bpm) or self.bpm <= 0:
            raise MelodyError(f"bpm must be > 0, got {self.bpm!r}", "bpm")
        if not self.notes:
            raise MelodyError("melody has no notes", "notes")
        for i, note in enumerate(self.notes):
            if not isinstance(note, NoteSpec):
                raise MelodyError("expected a NoteSpec", f"notes[{i}]")
            if i and note.onset_ms <= self.notes[i - 1].onset_ms:
                raise MelodyError(
                    f"non-increasing onset ({note.onset_ms} after {self.notes[i - 1].onset_ms})",
                    f"notes[{i}].onset_ms")
        b = self.phrase_boundary_index
        if isinstance(b, bool) or not isinstance(b, int) or not 0 < b < len(self.notes):
            raise MelodyError(f"phrase_boundary_index must satisfy 0 < b < {len(self.notes)}, got {b!r}",
                              "phrase_boundary_index")

    @property
    def span_ms(self) -> float:
        return max(n.end_ms for n in self.notes)

    def __len__(self) -> int:
        return len(self.notes)


_NOTE_KEYS = ("duration_ms", "finger", "onset_ms", "pitch")
_TOP_KEYS = ("bpm", "id", "notes", "phrase_boundary_index")


def melody_from_dict(doc) -> MelodySpec:
    if not isinstance(doc, dict):
        raise MelodyError("top level must be an object")
    _check_keys(doc, _TOP_KEYS, "")
    if not isinstance(doc["notes"], list):
        raise MelodyError("notes must be an array", "notes")
    notes = []
    for i, item in enumerate(doc["notes"]):
        where = f"notes[{i}]"
        if not isinstance(item, dict):
            raise MelodyError("note must be an object", where)
        _check_keys(item, _NOTE_KEYS, where + ".")
        if isinstance(item["finger"], bool) or not isinstance(item["finger"], int):
            raise MelodyError(f"finger must be an integer 1..5, got {item['finger']!r}", where + ".finger")
        note = object.__new__(NoteSpec)
        for key in _NOTE_KEYS:
            object.__setattr__(note, key, item[key])
        _check_note(note, where)
        notes.append(note)
    return MelodySpec(id=doc["id"], bpm=doc["bpm"], notes=tuple(notes),
                      phrase_boundary_index=doc["phrase_boundary_index"])


def _check_keys(obj: dict, expected: tuple[str, ...], prefix: str) -> None:
    unknown = sorted(set(obj) - set(expected))
    if unknown:
        raise MelodyError("unknown field", prefix + unknown[0])
    missing = [k for k in expected if k not in obj]
    if missing:
        raise MelodyError("missing field", prefix + missing[0])


def melody_to_dict(m: MelodySpec) -> dict:
    return {
        "bpm": m.bpm,
        "id": m.id,
        "notes": [{"duration_ms": n.duration_ms, "finger": int(n.finger), "onset_ms": n.onset_ms,
                   "pitch": n.pitch} for n in m.notes],
        "phrase_boundary_index": m.phrase_boundary_index,
    }


def parse_melody(text: str) -> MelodySpec:
    """Parse and validate a melody document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MelodyError(exc.msg, line=exc.lineno) from None
    return melody_from_dict(doc)


def serialize_melody(m: MelodySpec) -> str:
    """Canonical document: sorted keys, two-space indent, trailing newline."""
    return json.dumps(melody_to_dict(m), sort_keys=True, indent=2) + "\n"


def load_melody(path) -> MelodySpec:
    with open(path, encoding="utf-8") as fh:
        return parse_melody(fh.read())


def builtin_melody(name: str) -> MelodySpec:
    """Bundled fixture melodies: ``melody_a`` and ``melody_b``."""
    text = resources.files("ghostguide").joinpath(f"data/{name}.json").read_text(encoding="utf-8")
    return parse_melody(text)


def slice_phrase(m: MelodySpec, segment: Segment | str) -> MelodySpec:
    """Return the notes of one practice segment, re-zeroed to its first onset.

    Phrase melodies keep the parent id; their phrase boundary is placed at the
    middle note so the result is itself a valid ``MelodySpec``. A phrase must
    therefore hold at least two notes.
    """
    segment = Segment(segment)
    if segment is Segment.FULL:
        return m
    b = m.phrase_boundary_index
    notes = m.notes[:b] if segment is Segment.PHRASE1 else m.notes[b:]
    if len(notes) < 2:
        raise MelodyError(f"{segment.value} has {len(notes)} note(s); at least 2 are needed",
                          "phrase_boundary_index")
    shift = notes[0].onset_ms
    shifted = tuple(replace(n, onset_ms=n.onset_ms - shift) for n in notes)
    return MelodySpec(id=m.id, bpm=m.bpm, notes=shifted, phrase_boundary_index=(len(notes) + 1) // 2)


def segment_offset(m: MelodySpec, segment: Segment | str) -> tuple[int, float]:
    """(first note index, onset shift) that maps a sliced segment back into ``m``."""
    segment = Segment(segment)
    if segment is Segment.PHRASE2:
        b = m.phrase_boundary_index
        return b, m.notes[b].onset_ms
    return 0, m.notes[0].onset_ms if segment is Segment.PHRASE1 else 0.0
