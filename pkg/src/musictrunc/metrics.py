"""Objective evaluation: surprisal, bar-lag self-similarity, scale consistency."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from musictrunc._backend import kernels
from musictrunc.corpus.score import Bar, Score
from musictrunc.lm.base import LanguageModel, sequence_ic

DEFAULT_MAX_LAG = 38
DIATONIC = frozenset((0, 2, 4, 5, 7, 9, 11))


@dataclass
class SurprisalProfile:
    per_token_ic: np.ndarray
    mean_ic: float


def surprisal(oracle: LanguageModel, tokens: Sequence[int]) -> SurprisalProfile:
    ic = sequence_ic(oracle, list(tokens))
    return SurprisalProfile(ic, float(ic.mean()) if ic.size else float("nan"))


def bar_similarity(a: Bar, b: Bar) -> float:
    """Jaccard index of the bars' (pitch, duration, onset) note sets.

    Two empty bars count as identical (1.0).
    """
    na = {n.key() for n in a.notes}
    nb = {n.key() for n in b.notes}
    if not na and not nb:
        return 1.0
    inter = len(na & nb)
    return inter / (len(na) + len(nb) - inter)


def pack_bars(scores: Sequence[Score]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Intern note identities and flatten scores into CSR-style arrays."""
    ids: dict[tuple[int, int, int], int] = {}
    keys: list[int] = []
    bar_ptr = [0]
    tune_ptr = [0]
    for score in scores:
        for bar in score.bars:
            keys.extend(sorted({ids.setdefault(n.key(), len(ids)) for n in bar.notes}))
            bar_ptr.append(len(keys))
        tune_ptr.append(len(bar_ptr) - 1)
    return (
        np.asarray(keys, dtype=np.int64),
        np.asarray(bar_ptr, dtype=np.int64),
        np.asarray(tune_ptr, dtype=np.int64),
    )


def lag_profile(scores: Sequence[Score], max_lag: int = DEFAULT_MAX_LAG) -> np.ndarray:
    """``L_t`` for ``t = 1..max_lag``: per-tune sums of bar-pair similarity at lag t,
    divided by the number of tunes (not by the number of pairs)."""
    if not scores:
        raise ValueError("lag profile needs at least one score")
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    return kernels.lag_profile(*pack_bars(scores), int(max_lag))


def self_similarity(profile: Sequence[float]) -> float:
    profile = np.asarray(profile, dtype=np.float64)
    if profile.size == 0:
        raise ValueError("empty lag profile")
    return float(profile.mean())


def similarity_deviation(reference: Sequence[float], sample: Sequence[float]) -> float:
    reference = np.asarray(reference, dtype=np.float64)
    sample = np.asarray(sample, dtype=np.float64)
    if reference.shape != sample.shape:
        raise ValueError(f"profile lengths differ: {reference.size} vs {sample.size}")
    return float(np.mean(np.abs(reference - sample)))


@dataclass(frozen=True)
class ScaleConsistencyResult:
    value: float
    best_scale: int


def scale_consistency(score: Score) -> ScaleConsistencyResult:
    """Best fraction of notes (with multiplicity) inside one transposed major-scale set."""
    histogram = np.zeros(12, dtype=np.int64)
    for note in score.notes:
        histogram[note.pitch % 12] += 1
    total = int(histogram.sum())
    if total == 0:
        raise ValueError(f"score {score.name!r} has no notes")
    best_root, best = 0, -1
    for root in range(12):
        inside = sum(int(histogram[(root + pc) % 12]) for pc in DIATONIC)
        if inside > best:
            best_root, best = root, inside
    return ScaleConsistencyResult(best / total, best_root)


@dataclass
class MetricsReport:
    n_samples: int
    n_decoded: int
    mean_ic: float
    lag_profile: list[float]
    ss: float
    se: Optional[float]
    scale_consistency_mean: float
    scale_consistency: list[float] = field(default_factory=list)
    wellformed_rate: float = 1.0
    eos_rate: Optional[float] = None
    max_lag: int = DEFAULT_MAX_LAG

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)


def evaluate_sample_set(
    oracle: LanguageModel,
    reference_scores: Sequence[Score],
    samples: Sequence,
    max_lag: int = DEFAULT_MAX_LAG,
    vocab=None,
) -> MetricsReport:
    """Score a sample set against the reference set.

    ``samples`` may be scores (encoded with ``vocab`` for the surprisal) or
    raw token-id sequences (decoded leniently; the well-formedness rate is
    the pooled fraction of tokens that decode into valid structure).
    Sequences from which no bar is recovered still count toward mean IC and
    the well-formedness rate but not toward the score-level metrics.
    """
    from musictrunc.tokenizer import decode_lenient_partial, encode

    if len(samples) == 0:
        raise ValueError("empty sample set")
    vocab = vocab if vocab is not None else getattr(oracle, "vocab", None)
    if vocab is None:
        raise ValueError("a vocabulary is required (pass vocab= or use an oracle that carries one)")

    if isinstance(samples[0], Score):
        scores = list(samples)
        token_seqs = [encode(s, vocab) for s in scores]
        wellformed = 1.0
    else:
        token_seqs = [list(map(int, s)) for s in samples]
        scores, consumed, examined = [], 0, 0
        for i, seq in enumerate(token_seqs):
            bars, report = decode_lenient_partial(seq, vocab)
            examined += report.n_tokens
            if bars:
                consumed += report.n_consumed
                scores.append(Score(f"sample-{i}", tuple(bars)))
        wellformed = consumed / examined if examined else 0.0

    total_ic, n_ic = 0.0, 0
    for seq in token_seqs:
        ic = sequence_ic(oracle, seq)
        total_ic += float(ic.sum())
        n_ic += ic.size
    mean_ic = total_ic / n_ic if n_ic else float("nan")

    if scores:
        profile = lag_profile(scores, max_lag)
        ss = self_similarity(profile)
    else:
        profile = np.zeros(max_lag)
        ss = float("nan")
    se = None
    if reference_scores:
        se = similarity_deviation(lag_profile(reference_scores, max_lag), profile)

    scale = [scale_consistency(s).value for s in scores if s.n_notes() > 0]
    return MetricsReport(
        n_samples=len(token_seqs),
        n_decoded=len(scores),
        mean_ic=mean_ic,
        lag_profile=[float(x) for x in profile],
        ss=ss,
        se=se,
        scale_consistency_mean=float(np.mean(scale)) if scale else float("nan"),
        scale_consistency=scale,
        wellformed_rate=wellformed,
        max_lag=max_lag,
    )


CSV_COLUMNS = (
    "model", "degradation", "strategy", "tau", "seed", "n", "mean_ic", "ss", "se",
    "scale_consistency_mean", "eos_rate", "wellformed_rate",
)


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_rows(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([format_value(row.get(col)) for col in CSV_COLUMNS])
    return buf.getvalue()
