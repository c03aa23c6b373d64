"""Synthetic folk-like tunes with strong bar-level repetition.

Each tune draws distinct two-bar motifs in one major key and lays them out
according to a section form such as ``AABB``. Melodies follow a small
"tradition": a Markov chain over scale degrees, shared by the whole corpus
and derived from the seed, in which every degree has one dominant successor.
Bars open on a tonic-chord degree and one rhythm pattern per meter is
preferred, so a short-context model can become confident on most tokens.
Occasional single-note mutations (a small chromatic shift) roughen exact
repeats.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from musictrunc.corpus.score import Bar, Note, Score, TimeSignature, make_bar
from musictrunc.rng import make_rng, stable_hash

MAJOR_STEPS = (0, 2, 4, 5, 7, 9, 11)

# first pattern of each meter is the preferred one
RHYTHMS: dict[tuple[int, int], tuple[tuple[int, ...], ...]] = {
    (4, 4): (
        (12, 12, 12, 12), (24, 12, 12), (12, 12, 24), (6, 6, 12, 12, 12),
        (12, 6, 6, 12, 12), (18, 6, 12, 12), (24, 24), (6, 6, 6, 6, 12, 12),
    ),
    (3, 4): ((12, 12, 12), (24, 12), (6, 6, 12, 12), (12, 6, 6, 12), (18, 6, 12)),
    (6, 8): ((12,) * 6, (24, 12, 24, 12), (36, 36), (12, 12, 12, 36), (24, 12, 12, 12, 12)),
}

MOVE_WEIGHTS = {1: 4, -1: 4, 2: 2, -2: 2, 3: 1, -3: 1, 0: 1}
# bar-opening degrees relative to the tonic: tonic, dominant below, mediant above
BAR_START_OFFSETS = (0, -3, 2)


@dataclass(frozen=True)
class FormSpec:
    form: str = "AABB"
    motifs_per_section: int = 2
    keys: tuple[int, ...] = (0,)  # major-key tonic pitch classes to draw from
    time_signatures: tuple[tuple[int, int], ...] = ((4, 4), (6, 8), (3, 4))
    time_signature_weights: tuple[float, ...] = (0.75, 0.2, 0.05)
    rhythm_weight: float = 0.8  # share of the preferred rhythm pattern
    predictability: float = 0.8  # probability of a degree's dominant successor
    bar_start_weights: tuple[float, float, float] = (0.8, 0.15, 0.05)
    mutation_prob: float = 0.1  # per bar statement
    low: int = 60
    high: int = 84

    def validate(self) -> None:
        if not self.form or not self.form.isalpha():
            raise ValueError(f"form must be a non-empty string of section letters, got {self.form!r}")
        if self.motifs_per_section < 1:
            raise ValueError("motifs_per_section must be >= 1")
        if not self.keys or any(not 0 <= k < 12 for k in self.keys):
            raise ValueError("keys must be pitch classes 0..11")
        unknown = [ts for ts in self.time_signatures if tuple(ts) not in RHYTHMS]
        if not self.time_signatures or unknown:
            raise ValueError(f"unsupported time signatures {unknown}; choose from {sorted(RHYTHMS)}")
        if len(self.time_signature_weights) != len(self.time_signatures):
            raise ValueError("need one weight per time signature")
        for name in ("rhythm_weight", "predictability", "mutation_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if len(self.bar_start_weights) != 3 or min(self.bar_start_weights) < 0:
            raise ValueError("bar_start_weights needs three non-negative weights")
        if self.high - self.low < 12 or self.low < 0 or self.high > 127:
            raise ValueError("pitch range must span at least an octave within 0..127")


def scale_pitches(key: int, low: int, high: int) -> list[int]:
    return [p for p in range(low, high + 1) if (p - key) % 12 in MAJOR_STEPS]


def _normalized(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    return w / w.sum()


@lru_cache(maxsize=64)
def melodic_grammar(seed: int, n_degrees: int, predictability: float) -> tuple[tuple[tuple[int, float], ...], ...]:
    """Successor table: for each degree, ((next_degree, prob), ...) with one dominant entry."""
    rng = make_rng(stable_hash("melodic-grammar", seed, n_degrees))
    table = []
    for d in range(n_degrees):
        moves = [m for m in MOVE_WEIGHTS if 0 <= d + m < n_degrees]
        primary = moves[int(rng.choice(len(moves), p=_normalized([MOVE_WEIGHTS[m] for m in moves])))]
        rest = [m for m in moves if m != primary]
        secondary = [rest[i] for i in rng.choice(len(rest), size=2, replace=False)]
        minor = (1.0 - predictability) / 2
        table.append(((d + primary, predictability), (d + secondary[0], minor), (d + secondary[1], minor)))
    return tuple(table)


def _tonic_degree(pitches: list[int], key: int) -> int:
    centre = (pitches[0] + pitches[-1]) / 2
    lo, hi = -min(BAR_START_OFFSETS), max(BAR_START_OFFSETS)
    candidates = [i for i, p in enumerate(pitches) if (p - key) % 12 == 0 and lo <= i < len(pitches) - hi]
    return min(candidates, key=lambda i: abs(pitches[i] - centre))


def _motif(rng, spec: FormSpec, ts, pitches, grammar, tonic) -> tuple[Bar, Bar]:
    patterns = RHYTHMS[ts]
    rhythm_p = _normalized([spec.rhythm_weight] + [(1 - spec.rhythm_weight) / (len(patterns) - 1)] * (len(patterns) - 1))
    start_p = _normalized(spec.bar_start_weights)
    bars = []
    for _ in range(2):
        degree = tonic + BAR_START_OFFSETS[int(rng.choice(3, p=start_p))]
        rhythm = patterns[int(rng.choice(len(patterns), p=rhythm_p))]
        onset, notes = 0, []
        for dur in rhythm:
            notes.append(Note(pitches[degree], onset, dur))
            onset += dur
            successors = grammar[degree]
            degree = successors[int(rng.choice(len(successors), p=_normalized([s[1] for s in successors])))][0]
        bars.append(make_bar(TimeSignature(*ts), notes))
    return bars[0], bars[1]


def _mutate(rng: np.random.Generator, bar: Bar, low: int, high: int) -> Bar:
    if not bar.notes:
        return bar
    idx = int(rng.integers(len(bar.notes)))
    note = bar.notes[idx]
    shift = int(rng.choice((-2, -1, 1, 2)))
    pitch = min(max(note.pitch + shift, low), high)
    notes = list(bar.notes)
    notes[idx] = Note(pitch, note.onset, note.duration)
    return Bar(bar.time_signature, tuple(notes))


def generate_tune(index: int, seed: int, spec: FormSpec) -> Score:
    rng = make_rng(seed, index)
    key = spec.keys[int(rng.integers(len(spec.keys)))]
    ts = tuple(spec.time_signatures[int(rng.choice(len(spec.time_signatures), p=_normalized(spec.time_signature_weights)))])
    pitches = scale_pitches(key, spec.low, spec.high)
    grammar = melodic_grammar(seed, len(pitches), spec.predictability)
    tonic = _tonic_degree(pitches, key)

    sections: dict[str, list[Bar]] = {}
    seen: set[tuple[Bar, Bar]] = set()
    for letter in dict.fromkeys(spec.form):
        bars: list[Bar] = []
        attempts = 0
        while len(bars) < 2 * spec.motifs_per_section:
            motif = _motif(rng, spec, ts, pitches, grammar, tonic)
            attempts += 1
            if motif in seen and attempts < 1000:
                continue
            seen.add(motif)
            bars.extend(motif)
        sections[letter] = bars

    out = []
    for letter in spec.form:
        for bar in sections[letter]:
            if spec.mutation_prob > 0 and rng.random() < spec.mutation_prob:
                bar = _mutate(rng, bar, spec.low, spec.high)
            out.append(bar)
    return Score(f"toy-{index:05d}", tuple(out)).validate()


def generate_toy_corpus(n_tunes: int, seed: int, form_spec: FormSpec | None = None) -> list[Score]:
    if n_tunes < 1:
        raise ValueError("n_tunes must be >= 1")
    spec = form_spec or FormSpec()
    spec.validate()
    return [generate_tune(i, seed, spec) for i in range(n_tunes)]
