"""Parser and renderer for a small, monophonic subset of ABC notation.

Supported: header fields X, T, M, L, K (other single-letter fields are
ignored), note letters with accidentals ``^ _ =``, octave marks ``'`` and
``,``, length multipliers/divisors, rests ``z``/``x`` and bar lines.
Chords, ties, slurs, tuplets, grace notes, decorations, repeats, endings and
inline field changes raise :class:`ABCParseError`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from musictrunc.corpus.score import (
    TICKS_PER_BEAT,
    Bar,
    Note,
    Score,
    TimeSignature,
    ValidationError,
    make_bar,
    quantize_ticks,
    split_long_notes,
)


class ABCParseError(ValueError):
    """The ABC text is malformed or uses an unsupported construct."""


class UnsupportedConstruct(ABCParseError):
    def __init__(self, construct: str, line: int, offset: int):
        super().__init__(f"unsupported construct: {construct} (line {line}, offset {offset})")
        self.construct = construct
        self.line = line
        self.offset = offset


LETTER_SEMITONES = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
LETTER_FIFTHS = {"F": -1, "C": 0, "G": 1, "D": 2, "A": 3, "E": 4, "B": 5}
MODE_FIFTHS = {
    "": 0, "maj": 0, "ion": 0, "mix": -1, "dor": -2, "m": -3, "min": -3,
    "aeo": -3, "phr": -4, "loc": -5, "lyd": 1,
}
SHARP_ORDER = "FCGDAEB"
FIELD_RE = re.compile(r"^([A-Za-z]):(.*)$")
DECORATION_CHARS = set("~.HLMOPSTuv!+")


@dataclass
class TuneBlock:
    lines: list[str]
    first_line: int  # 1-based line number in the source text
    offset: int  # character offset of the first line


def key_accidentals(spec: str) -> dict[str, int]:
    """Map each letter to its semitone alteration under key signature ``spec``."""
    spec = spec.strip().split("%")[0].strip()
    if spec == "" or spec.lower() == "none":
        return {letter: 0 for letter in LETTER_SEMITONES}
    m = re.match(r"^([A-Ga-g])([#b]?)\s*([A-Za-z]*)", spec)
    if not m:
        raise ABCParseError(f"cannot parse key signature {spec!r}")
    letter, acc, mode = m.group(1).upper(), m.group(2), m.group(3).lower()
    mode = mode if mode in ("", "m") else mode[:3]
    if mode not in MODE_FIFTHS:
        raise ABCParseError(f"unknown mode {m.group(3)!r} in key signature {spec!r}")
    fifths = LETTER_FIFTHS[letter] + {"": 0, "#": 7, "b": -7}[acc] + MODE_FIFTHS[mode]
    if not -7 <= fifths <= 7:
        raise ABCParseError(f"key signature {spec!r} needs more than 7 accidentals")
    alter = {letter: 0 for letter in LETTER_SEMITONES}
    if fifths > 0:
        for letter in SHARP_ORDER[:fifths]:
            alter[letter] = 1
    else:
        for letter in SHARP_ORDER[::-1][: -fifths]:
            alter[letter] = -1
    return alter


def parse_meter(value: str) -> TimeSignature:
    value = value.strip()
    if value == "C":
        return TimeSignature(4, 4)
    if value == "C|":
        return TimeSignature(2, 2)
    m = re.match(r"^(\d+)\s*/\s*(\d+)$", value)
    if not m:
        raise ABCParseError(f"unsupported meter {value!r}")
    ts = TimeSignature(int(m.group(1)), int(m.group(2)))
    try:
        ts.validate()
    except ValidationError as exc:
        raise ABCParseError(str(exc)) from None
    return ts


def parse_unit_length(value: str) -> Fraction:
    m = re.match(r"^\s*(\d+)\s*/\s*(\d+)\s*$", value)
    if not m or int(m.group(1)) == 0 or int(m.group(2)) == 0:
        raise ABCParseError(f"unsupported unit note length {value!r}")
    return Fraction(int(m.group(1)), int(m.group(2)))


def iter_tune_blocks(text: str) -> Iterator[TuneBlock]:
    """Split ABC text into tunes: blank-line separated blocks starting with ``X:``."""
    block: list[str] = []
    start = 0
    start_offset = 0
    offset = 0
    for lineno, raw in enumerate(text.splitlines(keepends=True), start=1):
        line = raw.rstrip("\r\n")
        if line.strip() == "":
            if block:
                if block[0].lstrip().startswith("X:"):
                    yield TuneBlock(block, start, start_offset)
                block = []
        else:
            if not block:
                start, start_offset = lineno, offset
            block.append(line)
        offset += len(raw)
    if block and block[0].lstrip().startswith("X:"):
        yield TuneBlock(block, start, start_offset)


def parse_abc(text: str) -> list[Score]:
    """Parse every tune in ``text``; the first bad tune raises."""
    return [parse_tune(block) for block in iter_tune_blocks(text)]


def parse_tune(block: TuneBlock) -> Score:
    headers: dict[str, str] = {}
    body_start = None
    for i, line in enumerate(block.lines):
        stripped = line.strip()
        if stripped.startswith("%"):
            continue
        m = FIELD_RE.match(stripped)
        if not m:
            raise ABCParseError(
                f"malformed header line {block.first_line + i}: {line!r}"
            )
        field, value = m.group(1), m.group(2).strip()
        if field == "T" and "T" in headers:
            continue
        headers[field] = value
        if field == "K":
            body_start = i + 1
            break
    if body_start is None:
        raise ABCParseError(f"tune at line {block.first_line}: missing K: header")
    for required in ("X", "T", "M"):
        if required not in headers:
            raise ABCParseError(f"tune at line {block.first_line}: missing {required}: header")

    def header_error(field: str, exc: Exception) -> ABCParseError:
        lineno = block.first_line + next(
            i for i, l in enumerate(block.lines) if l.strip().startswith(field + ":")
        )
        return ABCParseError(f"malformed header line {lineno}: {exc}")

    try:
        meter = parse_meter(headers["M"])
    except ABCParseError as exc:
        raise header_error("M", exc) from None
    if "L" in headers:
        try:
            unit = parse_unit_length(headers["L"])
        except ABCParseError as exc:
            raise header_error("L", exc) from None
    else:
        unit = Fraction(1, 16) if Fraction(meter.numerator, meter.denominator) < Fraction(3, 4) else Fraction(1, 8)
    try:
        key = key_accidentals(headers["K"])
    except ABCParseError as exc:
        raise header_error("K", exc) from None

    # whole note = 12 * denominator ticks
    ticks_per_unit = unit * TICKS_PER_BEAT * meter.denominator
    line_offsets = []
    acc = block.offset
    for line in block.lines:
        line_offsets.append(acc)
        acc += len(line) + 1
    body = [
        (block.first_line + i, line_offsets[i], block.lines[i])
        for i in range(body_start, len(block.lines))
    ]
    bars = _parse_body(body, meter, key, ticks_per_unit, headers["T"])
    if not bars:
        raise ABCParseError(f"tune {headers['T']!r} (line {block.first_line}) has no bars")
    score = Score(headers["T"], tuple(split_long_notes(bar) for bar in bars))
    return score.validate()


def _parse_body(body, meter: TimeSignature, key: dict[str, int], ticks_per_unit: Fraction, name: str) -> list[Bar]:
    capacity = meter.capacity
    bars: list[Bar] = []
    notes: list[Note] = []
    position = Fraction(0)
    bar_accidentals: dict[tuple[str, int], int] = {}
    has_content = False
    seen_barline = False

    def close_bar():
        nonlocal notes, position, bar_accidentals, has_content
        bars.append(make_bar(meter, notes))
        notes, position, bar_accidentals, has_content = [], Fraction(0), {}, False

    for lineno, line_offset, line in body:
        text = line.split("%", 1)[0]
        if FIELD_RE.match(text.strip()):
            raise UnsupportedConstruct("inline field", lineno, line_offset)
        i, n = 0, len(text)

        def fail(construct: str, at: int):
            raise UnsupportedConstruct(construct, lineno, line_offset + at)

        while i < n:
            c = text[i]
            if c in " \t\\`y":
                i += 1
            elif c == "|":
                i += 1
                if i < n and text[i] in "|]":
                    i += 1
                if i < n and (text[i] == ":" or text[i].isdigit() or text[i] == "["):
                    fail("repeat" if text[i] == ":" else "repeat ending", i)
                if has_content or seen_barline:
                    close_bar()
                seen_barline = True
            elif c == ":":
                fail("repeat", i)
            elif c == "[":
                if i + 1 < n and text[i + 1].isdigit():
                    fail("repeat ending", i)
                if i + 2 < n and text[i + 1].isalpha() and text[i + 2] == ":":
                    fail("inline field", i)
                if i + 1 < n and text[i + 1] == "|":
                    fail("thick bar line", i)
                fail("chord", i)
            elif c == '"':
                fail("chord symbol", i)
            elif c == "-":
                fail("tie", i)
            elif c == "(":
                fail("tuplet" if i + 1 < n and text[i + 1].isdigit() else "slur", i)
            elif c == ")":
                fail("slur", i)
            elif c == "{":
                fail("grace note", i)
            elif c in "<>":
                fail("broken rhythm", i)
            elif c == "&":
                fail("multiple voices", i)
            elif c == "Z":
                fail("multi-measure rest", i)
            elif c in DECORATION_CHARS:
                fail("decoration", i)
            elif c in "^_=" or c.upper() in LETTER_SEMITONES or c in "zx":
                start = i
                alteration = None
                while i < n and text[i] in "^_=":
                    alteration = (alteration or 0) + {"^": 1, "_": -1, "=": 0}[text[i]]
                    if text[i] == "=":
                        alteration = 0
                    i += 1
                if i >= n or not (text[i].upper() in LETTER_SEMITONES or text[i] in "zx"):
                    raise ABCParseError(
                        f"accidental without note at line {lineno}, offset {line_offset + start}"
                    )
                letter = text[i]
                i += 1
                octave = 0
                while i < n and text[i] in "',":
                    octave += 1 if text[i] == "'" else -1
                    i += 1
                m = re.compile(r"(\d*)((?:/\d*)*)").match(text, i)
                i = m.end()
                multiplier = Fraction(int(m.group(1))) if m.group(1) else Fraction(1)
                for part in m.group(2).split("/")[1:]:
                    multiplier /= int(part) if part else 2
                if multiplier == 0:
                    raise ABCParseError(f"zero-length note at line {lineno}, offset {line_offset + start}")
                length = multiplier * ticks_per_unit
                if position + length > capacity:
                    raise ValidationError(
                        f"tune {name!r}: note at line {lineno}, offset {line_offset + start} "
                        f"overflows its {meter} bar"
                    )
                if letter not in "zx":
                    upper = letter.upper()
                    octave += 0 if letter.isupper() else 1
                    if alteration is not None:
                        bar_accidentals[(upper, octave)] = alteration
                    alter = bar_accidentals.get((upper, octave), key[upper])
                    pitch = 60 + 12 * octave + LETTER_SEMITONES[upper] + alter
                    if not 0 <= pitch <= 127:
                        raise ValidationError(f"tune {name!r}: pitch {pitch} out of range at line {lineno}")
                    onset = quantize_ticks(position)
                    if onset >= capacity:
                        raise ValidationError(f"tune {name!r}: note at line {lineno} quantizes past bar end")
                    if notes and notes[-1].onset == onset:
                        raise ValidationError(
                            f"tune {name!r}: two notes share onset {onset} after quantization at line {lineno}"
                        )
                    notes.append(Note(pitch, onset, quantize_ticks(length, minimum=1)))
                position += length
                has_content = True
            else:
                raise ABCParseError(
                    f"unexpected character {c!r} at line {lineno}, offset {line_offset + i}"
                )
    if has_content:
        close_bar()
    return bars


def _pitch_to_abc(pitch: int, state: dict[tuple[str, int], int]) -> str:
    names = ["C", "^C", "D", "^D", "E", "F", "^F", "G", "^G", "A", "^A", "B"]
    name = names[pitch % 12]
    letter = name[-1]
    octave = pitch // 12 - 5
    alteration = 1 if name.startswith("^") else 0
    prefix = ""
    if alteration:
        prefix = "^"
    elif state.get((letter, octave), 0) != 0:
        prefix = "="
    state[(letter, octave)] = alteration
    if octave >= 1:
        return prefix + letter.lower() + "'" * (octave - 1)
    return prefix + letter + "," * (-octave)


def _length_to_abc(ticks: int) -> str:
    mult = Fraction(ticks, TICKS_PER_BEAT)
    if mult == 1:
        return ""
    if mult.denominator == 1:
        return str(mult.numerator)
    num = "" if mult.numerator == 1 else str(mult.numerator)
    return f"{num}/{mult.denominator}"


def render_abc(score: Score, index: int = 1) -> str:
    """Render a score in the supported ABC subset (``K:C``, one beat per unit).

    Requires a single time signature and non-overlapping notes that end
    within their bar; raises ValueError otherwise.
    """
    if not score.bars:
        raise ValueError("cannot render a score without bars")
    ts = score.bars[0].time_signature
    if any(bar.time_signature != ts for bar in score.bars):
        raise ValueError("ABC subset cannot express time-signature changes")
    if "\n" in score.name:
        raise ValueError("score name must be a single line")
    out_bars = []
    for bar in score.bars:
        state: dict[tuple[str, int], int] = {}
        parts = []
        cursor = 0
        for note in bar.notes:
            if note.onset < cursor:
                raise ValueError("overlapping notes cannot be rendered")
            if note.onset > cursor:
                parts.append("z" + _length_to_abc(note.onset - cursor))
            parts.append(_pitch_to_abc(note.pitch, state) + _length_to_abc(note.duration))
            cursor = note.onset + note.duration
        if cursor > ts.capacity:
            raise ValueError("note extends past the end of its bar")
        if not parts:
            parts.append("z" + _length_to_abc(ts.capacity))
        out_bars.append(" ".join(parts))
    header = [f"X:{index}", f"T:{score.name}", f"M:{ts}", f"L:1/{ts.denominator}", "K:C"]
    return "\n".join(header) + "\n" + " | ".join(out_bars) + " |\n"
