from __future__ import annotations

from typing import Iterable, Optional, Protocol, Sequence, runtime_checkable

import numpy as np


@runtime_checkable
class LanguageModel(Protocol):
    """Anything that maps a token context to next-token log-probabilities.

    ``next_dist`` must be deterministic in its context and return a
    normalized vector of natural-log weights of length ``vocab_size``.
    ``context_window`` is the number of trailing tokens the model looks at,
    or ``None`` if it may use the whole context.
    """

    vocab_size: int
    eos_id: int
    pad_id: Optional[int]
    context_window: Optional[int]

    def next_dist(self, context: Sequence[int]) -> np.ndarray: ...


def trim_context(model: LanguageModel, seq: Sequence[int], t: int) -> Sequence[int]:
    window = getattr(model, "context_window", None)
    if window is None:
        return seq[:t]
    return seq[max(0, t - window) : t]


def sequence_ic(model: LanguageModel, seq: Sequence[int]) -> np.ndarray:
    """Per-position information content of ``seq``; PAD positions are skipped."""
    pad = getattr(model, "pad_id", None)
    n = model.vocab_size
    out = []
    for t, token in enumerate(seq):
        if not isinstance(token, (int, np.integer)) or not 0 <= token < n:
            raise ValueError(f"token id {token!r} at position {t} is outside the vocabulary of size {n}")
        if pad is not None and token == pad:
            continue
        out.append(-float(model.next_dist(trim_context(model, seq, t))[token]))
    return np.asarray(out, dtype=np.float64)


def evaluate_nll(model: LanguageModel, sequences: Iterable[Sequence[int]]) -> float:
    """Mean per-token negative log-likelihood in nats (EOS counted, PAD not)."""
    total, count = 0.0, 0
    for seq in sequences:
        ic = sequence_ic(model, list(seq))
        total += float(ic.sum())
        count += ic.size
    if count == 0:
        raise ValueError("no tokens to evaluate")
    return total / count
