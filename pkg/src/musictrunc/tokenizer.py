"""REMI-style tokenization of monophonic scores.

Each bar is serialized as ``BAR TIMESIG`` followed by one
``POSITION PITCH DURATION`` triple per note in onset order; the sequence ends
with a single ``EOS``. Vocabulary ids are assigned in a frozen canonical order:
PAD (id 0), EOS, BAR, then TIMESIG, POSITION, PITCH and DURATION values, each
kind sorted ascending by payload.
"""

from __future__ import annotations

import json
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from musictrunc.corpus.score import (
    MAX_DURATION,
    Bar,
    Note,
    Score,
    TimeSignature,
    ValidationError,
)

PAD, EOS, BAR, TIMESIG, POSITION, PITCH, DURATION = (
    "PAD", "EOS", "BAR", "TIMESIG", "POSITION", "PITCH", "DURATION",
)
KIND_ORDER = (PAD, EOS, BAR, TIMESIG, POSITION, PITCH, DURATION)


class TokenizerError(ValueError):
    pass


class DecodeError(TokenizerError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} at offset {offset}")
        self.offset = offset


class Token(NamedTuple):
    kind: str
    value: object = None  # TIMESIG: (num, den); POSITION/PITCH/DURATION: int

    def describe(self) -> dict:
        value = list(self.value) if isinstance(self.value, tuple) else self.value
        return {"kind": self.kind} if value is None else {"kind": self.kind, "value": value}

    @classmethod
    def from_descriptor(cls, obj: dict) -> "Token":
        kind = obj["kind"]
        if kind not in KIND_ORDER:
            raise TokenizerError(f"unknown token kind {kind!r}")
        value = obj.get("value")
        if kind == TIMESIG:
            value = (int(value[0]), int(value[1]))
        return cls(kind, value)

    def __str__(self) -> str:
        if self.value is None:
            return self.kind
        if self.kind == TIMESIG:
            return f"TIMESIG({self.value[0]}/{self.value[1]})"
        return f"{self.kind}({self.value})"


def _check_payload(token: Token) -> None:
    if token.kind in (PAD, EOS, BAR):
        ok = token.value is None
    elif token.kind == TIMESIG:
        ok = isinstance(token.value, tuple) and len(token.value) == 2
        if ok:
            try:
                TimeSignature(*token.value).validate()
            except ValidationError:
                ok = False
    elif token.kind == POSITION:
        ok = isinstance(token.value, int) and token.value >= 0
    elif token.kind == PITCH:
        ok = isinstance(token.value, int) and 0 <= token.value <= 127
    else:
        ok = isinstance(token.value, int) and 1 <= token.value <= MAX_DURATION
    if not ok:
        raise TokenizerError(f"payload out of range for token {token}")


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[Token, ...]
    index: dict[Token, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise TokenizerError("vocabulary tokens must be distinct")
        if not self.tokens or self.tokens[0] != Token(PAD):
            raise TokenizerError("PAD must have id 0")
        if Token(EOS) not in index:
            raise TokenizerError("vocabulary must contain EOS")
        for tok in self.tokens:
            _check_payload(tok)
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def eos_id(self) -> int:
        return self.index[Token(EOS)]

    @property
    def bar_id(self) -> int:
        return self.index[Token(BAR)]

    def id_of(self, token: Token) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise TokenizerError(f"out-of-vocabulary event {token}") from None

    def to_json(self) -> str:
        return json.dumps([t.describe() for t in self.tokens], separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        return cls(tuple(Token.from_descriptor(d) for d in json.loads(text)))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_vocabulary(scores: Iterable[Score]) -> Vocabulary:
    timesigs, positions, pitches, durations = set(), set(), set(), set()
    for score in scores:
        for bar in score.bars:
            ts = bar.time_signature
            timesigs.add((ts.numerator, ts.denominator))
            for note in bar.notes:
                positions.add(note.onset)
                pitches.add(note.pitch)
                durations.add(note.duration)
    tokens = [Token(PAD), Token(EOS), Token(BAR)]
    tokens += [Token(TIMESIG, v) for v in sorted(timesigs)]
    tokens += [Token(POSITION, v) for v in sorted(positions)]
    tokens += [Token(PITCH, v) for v in sorted(pitches)]
    tokens += [Token(DURATION, v) for v in sorted(durations)]
    return Vocabulary(tuple(tokens))


def sequence_length(score: Score) -> int:
    """Length of ``encode(score)`` without needing a vocabulary."""
    return 1 + sum(2 + 3 * len(bar.notes) for bar in score.bars)


def encode(score: Score, vocab: Vocabulary) -> list[int]:
    ids = []
    for bar in score.bars:
        ts = bar.time_signature
        ids.append(vocab.id_of(Token(BAR)))
        ids.append(vocab.id_of(Token(TIMESIG, (ts.numerator, ts.denominator))))
        for note in sorted(bar.notes, key=lambda n: (n.onset, n.pitch)):
            ids.append(vocab.id_of(Token(POSITION, note.onset)))
            ids.append(vocab.id_of(Token(PITCH, note.pitch)))
            ids.append(vocab.id_of(Token(DURATION, note.duration)))
    ids.append(vocab.eos_id)
    return ids


@dataclass
class WellformednessReport:
    n_tokens: int  # tokens examined, up to and including EOS
    n_consumed: int  # tokens that ended up in valid structure
    skips: list[tuple[int, int, str]] = field(default_factory=list)  # (offset, length, reason)
    eos_terminated: bool = False

    @property
    def rate(self) -> float:
        return self.n_consumed / self.n_tokens if self.n_tokens else 0.0


def decode(
    tokens: Sequence[int],
    vocab: Vocabulary,
    mode: str = "strict",
    name: str = "",
) -> tuple[Score, WellformednessReport]:
    """Rebuild a score from token ids.

    ``strict`` raises :class:`DecodeError` on the first grammar violation.
    ``lenient`` drops the smallest malformed run around each violation (an
    unfinished BAR/TIMESIG pair or note triple, or a lone stray token) and
    keeps going. Both modes raise if no complete bar is recovered.
    """
    bars, report = _decode(tokens, vocab, mode)
    if not bars:
        raise DecodeError("no complete bar in token sequence")
    return Score(name, tuple(bars)), report


def decode_lenient_partial(tokens: Sequence[int], vocab: Vocabulary) -> tuple[list[Bar], WellformednessReport]:
    """Lenient decode that returns an empty bar list instead of raising."""
    return _decode(tokens, vocab, "lenient")


def _decode(tokens: Sequence[int], vocab: Vocabulary, mode: str) -> tuple[list[Bar], WellformednessReport]:
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    strict = mode == "strict"
    n = len(vocab)
    table = vocab.tokens
    bars: list[Bar] = []
    report = WellformednessReport(0, 0)

    ts: TimeSignature | None = None
    notes: list[Note] = []
    last_onset = -1

    def flush():
        if ts is not None:
            bars.append(Bar(ts, tuple(notes)))

    def violation(offset: int, length: int, reason: str):
        if strict:
            raise DecodeError(reason, offset)
        report.skips.append((offset, length, reason))

    i = 0
    total = len(tokens)
    while i < total:
        tid = tokens[i]
        try:
            tid = operator.index(tid)
        except TypeError:
            raise DecodeError(f"token id {tid!r} is not an integer", i) from None
        if not 0 <= tid < n:
            raise DecodeError(f"token id {tid!r} out of vocabulary", i)
        tok = table[tid]
        if tok.kind == EOS:
            report.n_consumed += 1
            report.eos_terminated = True
            i += 1
            break
        if tok.kind == BAR:
            nxt = table[tokens[i + 1]] if i + 1 < total and 0 <= tokens[i + 1] < n else None
            if nxt is None or nxt.kind != TIMESIG:
                violation(i, 1, "BAR not followed by TIMESIG")
                i += 1
                continue
            flush()
            ts = TimeSignature(*nxt.value)
            notes, last_onset = [], -1
            report.n_consumed += 2
            i += 2
            continue
        if tok.kind == POSITION:
            if ts is None:
                violation(i, 1, "POSITION not preceded by a BAR")
                i += 1
                continue
            triple = [table[t] if 0 <= t < n else None for t in tokens[i + 1 : i + 3]]
            kinds = [t.kind if t is not None else None for t in triple]
            if kinds[:1] != [PITCH]:
                violation(i, 1, "POSITION not followed by PITCH")
                i += 1
                continue
            if kinds[1:2] != [DURATION]:
                violation(i, 2, "note triple missing DURATION")
                i += 2
                continue
            onset = tok.value
            if onset >= ts.capacity:
                violation(i, 3, f"onset {onset} >= bar capacity {ts.capacity}")
                i += 3
                continue
            if onset <= last_onset:
                violation(i, 3, f"onset {onset} does not increase within the bar")
                i += 3
                continue
            notes.append(Note(triple[0].value, onset, triple[1].value))
            last_onset = onset
            report.n_consumed += 3
            i += 3
            continue
        violation(i, 1, f"unexpected {tok.kind} token")
        i += 1
    flush()
    report.n_tokens = i
    return bars, report
