"""Additively smoothed n-gram model with back-off to shorter contexts.

For a context ``c`` seen in training, ``q(w|c) = (n(c,w) + alpha) / (n(c) + alpha*V)``
where ``V`` counts the predictable tokens (PAD is never predicted). Unseen
contexts fall back to the longest seen suffix, down to the smoothed unigram.
Sequences are left-padded with PAD so the first tokens have full-length
contexts.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from musictrunc.lm.dist import log_softmax

Context = tuple[int, ...]


@dataclass
class NGramModel:
    order: int
    alpha: float
    vocab_size: int
    eos_id: int
    pad_id: Optional[int]
    counts: list[dict[Context, dict[int, int]]]  # counts[m-1]: contexts of length m-1
    vocab: object = None
    # per order: context -> row index, and (rows x vocab_size) log-prob table
    _index: list[dict[Context, int]] = field(default_factory=list, repr=False)
    _tables: list[np.ndarray] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self._tables:
            self._index, self._tables = self._build_tables()
        for table in self._tables:
            table.setflags(write=False)

    @property
    def context_window(self) -> int:
        return self.order - 1

    @property
    def predictable(self) -> np.ndarray:
        mask = np.ones(self.vocab_size, dtype=bool)
        if self.pad_id is not None:
            mask[self.pad_id] = False
        return mask

    def _build_tables(self):
        mask = self.predictable
        n_pred = int(mask.sum())
        index, tables = [], []
        for m in range(1, self.order + 1):
            contexts = sorted(self.counts[m - 1])
            if m == 1 and not contexts:
                contexts = [()]
            table = np.full((len(contexts), self.vocab_size), -np.inf)
            for row, ctx in enumerate(contexts):
                dist = self.counts[m - 1].get(ctx, {})
                total = sum(dist.values())
                numer = np.full(self.vocab_size, self.alpha)
                for token, c in dist.items():
                    numer[token] += c
                table[row, mask] = np.log(numer[mask]) - np.log(total + self.alpha * n_pred)
            index.append({ctx: row for row, ctx in enumerate(contexts)})
            tables.append(table)
        return index, tables

    def context_key(self, context: Sequence[int]) -> Context:
        n = self.order - 1
        if n == 0:
            return ()
        ctx = tuple(context[-n:]) if len(context) >= n else tuple(context)
        if len(ctx) < n:
            ctx = (self.pad_id if self.pad_id is not None else -1,) * (n - len(ctx)) + ctx
        return ctx

    def next_dist(self, context: Sequence[int]) -> np.ndarray:
        ctx = self.context_key(context)
        for m in range(self.order, 1, -1):
            row = self._index[m - 1].get(ctx[len(ctx) - (m - 1):])
            if row is not None:
                return self._tables[m - 1][row]
        return self._tables[0][0]

    def parameter_groups(self) -> list[np.ndarray]:
        """Log-probability tables, one matrix per context length."""
        return list(self._tables)

    def with_parameter_groups(self, tables: Sequence[np.ndarray]) -> "NGramModel":
        """Same model with replaced tables; each row is renormalized."""
        mask = self.predictable
        new_tables = []
        for old, new in zip(self._tables, tables, strict=True):
            if new.shape != old.shape:
                raise ValueError(f"table shape {new.shape} does not match {old.shape}")
            fixed = np.full(old.shape, -np.inf)
            for row in range(new.shape[0]):
                fixed[row, mask] = log_softmax(new[row, mask])
            new_tables.append(fixed)
        return NGramModel(
            self.order, self.alpha, self.vocab_size, self.eos_id, self.pad_id,
            self.counts, self.vocab, list(self._index), new_tables,
        )


def train_ngram(
    sequences: Iterable[Sequence[int]],
    order: int = 4,
    alpha: float = 0.01,
    vocab_size: Optional[int] = None,
    eos_id: Optional[int] = None,
    pad_id: Optional[int] = 0,
    vocab=None,
) -> NGramModel:
    """Count n-grams of every length up to ``order``.

    When ``vocab`` (a :class:`~musictrunc.tokenizer.Vocabulary`) is given it
    supplies ``vocab_size``, ``eos_id`` and ``pad_id``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if not alpha > 0:
        raise ValueError("alpha must be > 0")
    if vocab is not None:
        vocab_size, eos_id, pad_id = len(vocab), vocab.eos_id, vocab.pad_id
    if vocab_size is None or eos_id is None:
        raise ValueError("vocab_size and eos_id are required without a vocabulary")
    pad_marker = pad_id if pad_id is not None else -1
    counts: list[defaultdict[Context, Counter]] = [defaultdict(Counter) for _ in range(order)]
    n_seq = 0
    for seq in sequences:
        seq = [int(t) for t in seq]
        n_seq += 1
        for t in seq:
            if not 0 <= t < vocab_size:
                raise ValueError(f"token id {t} outside vocabulary of size {vocab_size}")
            if t == pad_id:
                raise ValueError("training sequences must not contain PAD")
        padded = [pad_marker] * (order - 1) + seq
        for pos, token in enumerate(seq):
            end = pos + order - 1
            for m in range(1, order + 1):
                counts[m - 1][tuple(padded[end - (m - 1) : end])][token] += 1
    if n_seq == 0:
        raise ValueError("no training sequences")
    plain = [{ctx: dict(c) for ctx, c in level.items()} for level in counts]
    return NGramModel(order, float(alpha), vocab_size, eos_id, pad_id, plain, vocab)
