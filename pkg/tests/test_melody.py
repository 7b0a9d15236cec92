import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostguide.melody import (FingerLabel, MelodyError, MelodySpec, NoteSpec, Segment, builtin_melody,
                               melody_to_dict, parse_melody, segment_offset, serialize_melody, slice_phrase)


def doc(**over):
    d = {"id": "m", "bpm": 120, "phrase_boundary_index": 1,
         "notes": [{"pitch": 60, "onset_ms": 0, "duration_ms": 400, "finger": 1},
                   {"pitch": 62, "onset_ms": 500, "duration_ms": 400, "finger": 2}]}
    d.update(over)
    return d


def test_parse_minimal():
    m = parse_melody(json.dumps(doc()))
    assert len(m) == 2
    assert m.notes[1].finger is FingerLabel.INDEX
    assert m.span_ms == 900


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["notes"][1].update(onset_ms=0), "notes[1].onset_ms"),
    (lambda d: d["notes"][0].update(pitch=128), "notes[0].pitch"),
    (lambda d: d["notes"][0].update(finger=6), "notes[0].finger"),
    (lambda d: d["notes"][0].update(duration_ms=0), "notes[0].duration_ms"),
    (lambda d: d["notes"][0].update(velocity=3), "notes[0].velocity"),
    (lambda d: d.update(phrase_boundary_index=2), "phrase_boundary_index"),
    (lambda d: d.update(tempo=1), "tempo"),
    (lambda d: d.pop("bpm"), "bpm"),
])
def test_invalid_documents_name_the_field(mutate, field):
    d = doc()
    mutate(d)
    with pytest.raises(MelodyError) as err:
        parse_melody(json.dumps(d))
    assert err.value.field == field
    assert field in str(err.value)


def test_syntax_error_reports_line():
    with pytest.raises(MelodyError) as err:
        parse_melody('{\n "id": "m",\n oops\n}')
    assert err.value.line == 3


def test_duplicate_onset_rejected():
    d = doc()
    d["notes"][1]["onset_ms"] = 0
    with pytest.raises(MelodyError, match="non-increasing onset"):
        parse_melody(json.dumps(d))


def test_bool_is_not_a_pitch():
    d = doc()
    d["notes"][0]["pitch"] = True
    with pytest.raises(MelodyError):
        parse_melody(json.dumps(d))


notes_strategy = st.lists(
    st.tuples(st.integers(0, 127), st.integers(1, 2000), st.integers(1, 3000), st.integers(1, 5)),
    min_size=2, max_size=30)


@st.composite
def melodies(draw):
    raw = draw(notes_strategy)
    t = 0
    notes = []
    for pitch, gap, dur, finger in raw:
        notes.append(NoteSpec(pitch, t, dur, finger))
        t += gap
    b = draw(st.integers(1, len(notes) - 1))
    return MelodySpec(draw(st.text("abcxyz_", min_size=1, max_size=8)), draw(st.integers(30, 240)),
                      tuple(notes), b)


@settings(max_examples=200, deadline=None)
@given(melodies())
def test_round_trip(m):
    text = serialize_melody(m)
    back = parse_melody(text)
    assert back == m
    assert serialize_melody(back) == text


def test_serialization_is_canonical():
    m = builtin_melody("melody_a")
    text = serialize_melody(m)
    assert text.endswith("}\n")
    assert list(json.loads(text)) == sorted(json.loads(text))
    assert melody_to_dict(m)["notes"][0] == {"duration_ms": m.notes[0].duration_ms, "finger": int(m.notes[0].finger),
                                             "onset_ms": m.notes[0].onset_ms, "pitch": m.notes[0].pitch}


@pytest.mark.parametrize("name, n, boundary", [("melody_a", 21, 10), ("melody_b", 24, 12)])
def test_builtin_fixtures(name, n, boundary):
    m = builtin_melody(name)
    assert m.id == name and len(m) == n and m.phrase_boundary_index == boundary
    assert m.notes[0].onset_ms == 0


def test_slice_phrases_partition_the_melody():
    m = builtin_melody("melody_a")
    p1, p2 = slice_phrase(m, "Phrase1"), slice_phrase(m, Segment.PHRASE2)
    assert len(p1) + len(p2) == len(m)
    assert p1.notes[0].onset_ms == 0 and p2.notes[0].onset_ms == 0
    first, shift = segment_offset(m, "Phrase2")
    assert first == m.phrase_boundary_index
    for k, note in enumerate(p2.notes):
        orig = m.notes[first + k]
        assert note.onset_ms + shift == orig.onset_ms and note.pitch == orig.pitch
    assert slice_phrase(m, "Full") is m


def test_slice_needs_two_notes():
    m = MelodySpec("m", 120, (NoteSpec(60, 0, 100, 1), NoteSpec(62, 200, 100, 2), NoteSpec(64, 400, 100, 3)), 1)
    with pytest.raises(MelodyError, match="Phrase1 has 1 note"):
        slice_phrase(m, "Phrase1")
    assert len(slice_phrase(m, "Phrase2")) == 2
