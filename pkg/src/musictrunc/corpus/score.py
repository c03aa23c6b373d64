"""Monophonic score data model.

Time is measured in integer ticks; one beat (the time-signature denominator
unit) is 12 ticks, so a bar holds ``numerator * 12`` ticks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

TICKS_PER_BEAT = 12
MAX_DURATION = 4 * 4 * TICKS_PER_BEAT  # four 4/4 bars
VALID_DENOMINATORS = (1, 2, 4, 8, 16)


class ValidationError(ValueError):
    """A score object violates one of its invariants."""


@dataclass(frozen=True, order=True)
class Note:
    pitch: int
    onset: int
    duration: int

    def key(self) -> tuple[int, int, int]:
        """Identity used for bar similarity: (pitch, duration, onset)."""
        return (self.pitch, self.duration, self.onset)


@dataclass(frozen=True)
class TimeSignature:
    numerator: int
    denominator: int

    @property
    def capacity(self) -> int:
        return self.numerator * TICKS_PER_BEAT

    def validate(self) -> None:
        if not isinstance(self.numerator, int) or self.numerator < 1:
            raise ValidationError(f"time signature numerator must be >= 1, got {self.numerator!r}")
        if self.denominator not in VALID_DENOMINATORS:
            raise ValidationError(
                f"time signature denominator must be one of {VALID_DENOMINATORS}, "
                f"got {self.denominator!r}"
            )

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"


@dataclass(frozen=True)
class Bar:
    time_signature: TimeSignature
    notes: tuple[Note, ...] = ()

    def validate(self) -> None:
        self.time_signature.validate()
        capacity = self.time_signature.capacity
        previous = -1
        for note in self.notes:
            for name in ("pitch", "onset", "duration"):
                if not isinstance(getattr(note, name), int):
                    raise ValidationError(f"note {name} must be an integer, got {getattr(note, name)!r}")
            if not 0 <= note.pitch <= 127:
                raise ValidationError(f"pitch out of range 0..127: {note.pitch}")
            if note.duration < 1:
                raise ValidationError(f"duration must be >= 1 tick, got {note.duration}")
            if note.onset < 0 or note.onset >= capacity:
                raise ValidationError(
                    f"onset {note.onset} outside bar capacity {capacity} ({self.time_signature})"
                )
            if note.onset <= previous:
                raise ValidationError(
                    f"onsets must be strictly increasing within a bar (monophony); "
                    f"got {note.onset} after {previous}"
                )
            previous = note.onset


@dataclass(frozen=True)
class Score:
    name: str
    bars: tuple[Bar, ...] = field(default_factory=tuple)

    def validate(self) -> "Score":
        if not self.bars:
            raise ValidationError(f"score {self.name!r} has no bars")
        for index, bar in enumerate(self.bars):
            try:
                bar.validate()
            except ValidationError as exc:
                raise ValidationError(f"score {self.name!r}, bar {index}: {exc}") from None
        return self

    @property
    def notes(self) -> list[Note]:
        return [note for bar in self.bars for note in bar.notes]

    def n_notes(self) -> int:
        return sum(len(bar.notes) for bar in self.bars)


def make_bar(time_signature: TimeSignature | tuple[int, int], notes: Iterable[Note]) -> Bar:
    """Build a bar with notes sorted by (onset, pitch)."""
    if not isinstance(time_signature, TimeSignature):
        time_signature = TimeSignature(*time_signature)
    ordered = sorted(notes, key=lambda n: (n.onset, n.pitch))
    return Bar(time_signature, tuple(ordered))


def quantize_ticks(value: Fraction | float, minimum: int = 0) -> int:
    """Round a tick count half-up onto the integer grid."""
    value = Fraction(value)
    ticks = int((value + Fraction(1, 2)) // 1)
    return max(ticks, minimum)


def split_long_notes(bar: Bar, cap: int = MAX_DURATION) -> Bar:
    """Split notes longer than ``cap`` ticks into consecutive capped notes.

    Pieces that would start beyond the bar, or on an occupied onset, are dropped.
    """
    if all(note.duration <= cap for note in bar.notes):
        return bar
    capacity = bar.time_signature.capacity
    taken = {note.onset for note in bar.notes}
    out = []
    for note in bar.notes:
        if note.duration <= cap:
            out.append(note)
            continue
        remaining, onset = note.duration, note.onset
        while remaining > 0 and onset < capacity:
            if onset != note.onset and onset in taken:
                break
            piece = min(remaining, cap)
            out.append(Note(note.pitch, onset, piece))
            taken.add(onset)
            remaining -= piece
            onset += piece
    return make_bar(bar.time_signature, out)
