from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from musictrunc.corpus.score import Score

PROPORTIONS = (10 / 12, 1 / 12, 1 / 12)
DISCARD_FRACTION = 0.05


@dataclass(frozen=True)
class CorpusSplit:
    train: tuple[Score, ...]
    validation: tuple[Score, ...]
    test: tuple[Score, ...]
    discarded: tuple[Score, ...] = ()


def drop_longest(scores: Sequence[Score], seed: int, fraction: float = DISCARD_FRACTION) -> tuple[list[Score], list[Score]]:
    """Remove ``floor(fraction * n)`` scores with the most tokens.

    Ties are broken by name, then by a seeded random key. Returns
    (kept, discarded), with kept in input order.
    """
    from musictrunc.tokenizer import sequence_length  # tokenizer imports corpus

    n_drop = int(np.floor(fraction * len(scores) + 1e-9))
    rng = np.random.default_rng(seed)
    tiebreak = rng.permutation(len(scores))
    order = sorted(
        range(len(scores)),
        key=lambda i: (-sequence_length(scores[i]), scores[i].name, int(tiebreak[i])),
    )
    dropped = set(order[:n_drop])
    kept = [s for i, s in enumerate(scores) if i not in dropped]
    discarded = [scores[i] for i in sorted(dropped)]
    return kept, discarded


def split_corpus(scores: Sequence[Score], seed: int) -> CorpusSplit:
    """Length-filter, then split whole name groups 10/12, 1/12, 1/12."""
    if not scores:
        raise ValueError("cannot split an empty corpus")
    kept, discarded = drop_longest(scores, seed)

    groups: dict[str, list[Score]] = defaultdict(list)
    for score in kept:
        groups[score.name].append(score)
    if len(groups) < 12:
        raise ValueError(
            f"need at least 12 distinct tune names to honor 10/12, 1/12, 1/12 proportions; got {len(groups)}"
        )

    names = sorted(groups)
    rng = np.random.default_rng([seed, 1])
    names = [names[i] for i in rng.permutation(len(names))]
    # stable sort keeps the shuffled order among equal sizes
    names.sort(key=lambda name: -len(groups[name]))

    total = len(kept)
    quotas = [p * total for p in PROPORTIONS]
    parts: list[list[Score]] = [[], [], []]
    for name in names:
        deficits = [quotas[k] - len(parts[k]) for k in range(3)]
        target = max(range(3), key=lambda k: deficits[k])
        parts[target].extend(groups[name])
    return CorpusSplit(tuple(parts[0]), tuple(parts[1]), tuple(parts[2]), tuple(discarded))
