"""JSON-lines score files.

One score per line::

    {"name": str, "bars": [{"ts": [num, den], "notes": [{"pitch": int, "onset": int, "dur": int}]}]}

Onsets and durations are in ticks of 1/12 beat.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from musictrunc.corpus.score import Bar, Note, Score, TimeSignature, ValidationError, split_long_notes


class SchemaError(ValueError):
    """A score record does not follow the JSON-lines schema."""


def score_to_dict(score: Score) -> dict:
    return {
        "name": score.name,
        "bars": [
            {
                "ts": [bar.time_signature.numerator, bar.time_signature.denominator],
                "notes": [{"pitch": n.pitch, "onset": n.onset, "dur": n.duration} for n in bar.notes],
            }
            for bar in score.bars
        ],
    }


def dumps_score(score: Score) -> str:
    return json.dumps(score_to_dict(score), separators=(",", ":"), ensure_ascii=False)


def _require(obj: dict, key: str, kind: type | tuple[type, ...], where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, kind):
        raise SchemaError(f"{where}: field {key!r} has wrong type {type(value).__name__}")
    return value


def score_from_dict(obj: dict, where: str = "record") -> Score:
    """Parse and validate one score record; raises SchemaError or ValidationError."""
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: expected an object")
    name = _require(obj, "name", str, where)
    bars = []
    for b, raw_bar in enumerate(_require(obj, "bars", list, where)):
        bw = f"{where}, bar {b}"
        ts = _require(raw_bar, "ts", list, bw)
        if len(ts) != 2 or not all(isinstance(x, int) and not isinstance(x, bool) for x in ts):
            raise SchemaError(f"{bw}: field 'ts' must be [numerator, denominator]")
        notes = []
        for i, raw_note in enumerate(_require(raw_bar, "notes", list, bw)):
            nw = f"{bw}, note {i}"
            notes.append(
                Note(
                    _require(raw_note, "pitch", int, nw),
                    _require(raw_note, "onset", int, nw),
                    _require(raw_note, "dur", int, nw),
                )
            )
        # stored order is preserved so a misordered bar fails validation
        bars.append(Bar(TimeSignature(ts[0], ts[1]), tuple(notes)))
    score = Score(name, tuple(bars))
    try:
        score.validate()
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None
    return Score(name, tuple(split_long_notes(bar) for bar in score.bars))


def load_scores(path: str | Path) -> list[Score]:
    scores = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            scores.append(score_from_dict(obj, where=f"line {lineno}"))
    return scores


def write_scores(scores: Iterable[Score], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for score in scores:
            fh.write(dumps_score(score))
            fh.write("\n")


def load_token_sequences(path: str | Path) -> list[list[int]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            seq = json.loads(line)
            if not isinstance(seq, list) or not all(isinstance(x, int) for x in seq):
                raise SchemaError(f"line {lineno}: expected an array of integer token ids")
            out.append(seq)
    return out


def write_token_sequences(sequences: Sequence[Sequence[int]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for seq in sequences:
            fh.write(json.dumps([int(x) for x in seq], separators=(",", ":")))
            fh.write("\n")
