from __future__ import annotations

import json
import random
import string

import pytest

from showrunner.protocol import (
    Envelope,
    ParseError,
    ProtocolError,
    ProvenanceConflict,
    ValidationFailed,
    decode,
    encode,
    track_provenance,
)

# Golden request/response pair exercising every envelope field the wire
# format defines, including nested task and camera-plan payloads.
GOLDEN_REQUEST = {
    "id": "shot_03_v1",
    "type": "storyboard",
    "task": {
        "prompt": "split the given shot into segments, plan camera angles, "
        "and generate the keyframes.",
        "requirement": "style: should be 3d animation",
    },
    "assets": {"style": ["style_main"], "identity": ["char_ye_front"]},
    "meta": {"version": 1, "producer": "StoryboardAgent"},
}

GOLDEN_RESPONSE = {
    "id": "shot_03_v1",
    "type": "storyboard",
    "status": "success",
    "outputs": {
        "keyframes": ["kf1.png", "kf2.png"],
        "camera_plan": {"angles": [30, 45], "transitions": ["fade", "cut"]},
    },
    "meta": {"version": 1, "producer": "StoryboardAgent"},
}


def test_golden_request_round_trips():
    envelope = decode(json.dumps(GOLDEN_REQUEST))
    assert envelope.is_request
    assert envelope.task["requirement"] == "style: should be 3d animation"
    assert envelope.version == 1 and envelope.producer == "StoryboardAgent"
    assert decode(encode(envelope)) == envelope


def test_golden_response_round_trips():
    envelope = decode(json.dumps(GOLDEN_RESPONSE))
    assert not envelope.is_request
    assert envelope.outputs["camera_plan"]["angles"] == [30, 45]
    assert envelope.outputs["camera_plan"]["transitions"] == ["fade", "cut"]
    assert decode(encode(envelope)) == envelope


def test_encoding_is_byte_stable():
    envelope = decode(json.dumps(GOLDEN_REQUEST))
    assert encode(envelope) == encode(envelope)
    assert "\n" not in encode(envelope)


def test_distinct_envelopes_encode_distinctly():
    a = decode(json.dumps(GOLDEN_REQUEST))
    variations = []
    for mutate in (
        lambda d: {**d, "id": "shot_04_v1"},
        lambda d: {**d, "meta": {"version": 2, "producer": "StoryboardAgent"}},
        lambda d: {**d, "task": {**d["task"], "prompt": "other"}},
    ):
        variations.append(decode(json.dumps(mutate(GOLDEN_REQUEST))))
    encodings = {encode(e) for e in [a, *variations]}
    assert len(encodings) == 4


def test_missing_id_names_the_path():
    bad = {k: v for k, v in GOLDEN_REQUEST.items() if k != "id"}
    with pytest.raises(ValidationFailed) as exc:
        decode(json.dumps(bad))
    assert exc.value.path == "id"


def test_both_task_and_status_rejected():
    bad = dict(GOLDEN_REQUEST)
    bad["status"] = "success"
    with pytest.raises(ValidationFailed):
        decode(json.dumps(bad))


def test_neither_task_nor_status_rejected():
    bad = {k: v for k, v in GOLDEN_REQUEST.items() if k != "task"}
    with pytest.raises(ValidationFailed):
        decode(json.dumps(bad))


def test_version_below_one_rejected():
    bad = dict(GOLDEN_REQUEST)
    bad["meta"] = {"version": 0, "producer": "StoryboardAgent"}
    with pytest.raises(ValidationFailed) as exc:
        decode(json.dumps(bad))
    assert exc.value.path == "meta.version"


def test_malformed_text_raises_parse_error():
    with pytest.raises(ParseError):
        decode("{not json")


def test_unknown_fields_survive_round_trip():
    extended = dict(GOLDEN_REQUEST)
    extended["trace_id"] = "t-123"
    envelope = decode(json.dumps(extended))
    assert envelope.extensions == {"trace_id": "t-123"}
    assert decode(encode(envelope)) == envelope


def mutate_text(rng: random.Random, text: str) -> str:
    kind = rng.randrange(6)
    if kind == 0 and text:
        pos = rng.randrange(len(text))
        return text[:pos] + text[pos + 1 :]
    if kind == 1:
        pos = rng.randrange(len(text) + 1)
        return text[:pos] + rng.choice(string.printable) + text[pos:]
    if kind == 2 and text:
        pos = rng.randrange(len(text))
        return text[:pos] + rng.choice(string.printable) + text[pos + 1 :]
    if kind == 3:
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            return text[::-1]
        if isinstance(data, dict) and data:
            key = rng.choice(sorted(data))
            del data[key]
            return json.dumps(data)
        return text
    if kind == 4:
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            return ""
        if isinstance(data, dict) and data:
            key = rng.choice(sorted(data))
            data[key] = rng.choice([None, 0, -1, [], {}, "x", True])
            return json.dumps(data)
        return text
    return text[: rng.randrange(len(text) + 1)]


def run_decode_fuzz(iterations: int, seed: int = 2024) -> None:
    rng = random.Random(seed)
    base = encode(decode(json.dumps(GOLDEN_REQUEST)))
    alt = encode(decode(json.dumps(GOLDEN_RESPONSE)))
    for i in range(iterations):
        text = base if i % 2 == 0 else alt
        for _ in range(rng.randint(1, 4)):
            text = mutate_text(rng, text)
        try:
            envelope = decode(text)
            assert isinstance(envelope, Envelope)
        except ProtocolError:
            pass  # structured rejection is a valid outcome


def test_decode_fuzz_small():
    run_decode_fuzz(1000)


def envelope_with(version: int, producer: str) -> Envelope:
    return decode(
        json.dumps(
            {
                "id": "shot_03_v1",
                "type": "storyboard",
                "status": "success",
                "meta": {"version": version, "producer": producer},
            }
        )
    )


def test_provenance_fresh_entry_appends():
    chain = track_provenance(envelope_with(1, "StoryboardAgent"), ())
    assert len(chain) == 1
    assert chain[0].timestamp == 0


def test_provenance_two_versions_ordered():
    chain = track_provenance(envelope_with(1, "StoryboardAgent"), ())
    chain = track_provenance(envelope_with(2, "StoryboardAgent"), chain)
    # Oracle: replay the chain and check (version, timestamp) pairs.
    assert [(e.version, e.timestamp) for e in chain] == [(1, 0), (2, 1)]


def test_provenance_conflicting_producer_rejected():
    chain = track_provenance(envelope_with(1, "StoryboardAgent"), ())
    with pytest.raises(ProvenanceConflict):
        track_provenance(envelope_with(1, "Animator"), chain)


def test_provenance_reannounce_is_idempotent():
    chain = track_provenance(envelope_with(1, "StoryboardAgent"), ())
    assert track_provenance(envelope_with(1, "StoryboardAgent"), chain) == chain
