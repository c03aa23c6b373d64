"""Distribution truncation and autoregressive generation.

Truncation keeps a set ``V`` of tokens and renormalizes their probabilities:

* nucleus: shortest prefix of the tokens sorted by descending probability
  whose mass reaches ``tau``;
* typical: shortest prefix of the tokens sorted by ascending
  ``|H - IC(token)|`` whose mass reaches ``tau``;
* top-k: the ``k`` most probable tokens.

Ties are broken by ascending token id and the mass test is
``cum >= tau - 1e-12``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from musictrunc._backend import kernels
from musictrunc.lm.base import LanguageModel, trim_context
from musictrunc.lm.dist import CategoricalDistribution, as_probs, validate_probs
from musictrunc.rng import make_rng, stream_rng

CONVENTIONAL, NUCLEUS, TYPICAL, TOP_K = "conventional", "nucleus", "typical", "topk"


def _checked(dist) -> np.ndarray:
    return dist.probs if isinstance(dist, CategoricalDistribution) else validate_probs(dist)


def _wrap(result: np.ndarray, like):
    if isinstance(like, CategoricalDistribution):
        return CategoricalDistribution.from_probs(result)
    return result


def _check_tau(tau: float) -> None:
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")


def truncate_nucleus(dist, tau: float):
    _check_tau(tau)
    return _wrap(kernels.nucleus(_checked(dist), float(tau)), dist)


def truncate_typical(dist, tau: float):
    _check_tau(tau)
    return _wrap(kernels.typical(_checked(dist), float(tau)), dist)


def truncate_top_k(dist, k: int):
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    return _wrap(kernels.top_k(_checked(dist), int(k)), dist)


@dataclass(frozen=True)
class SamplingStrategy:
    kind: str = CONVENTIONAL
    param: Optional[float] = None

    def __post_init__(self):
        if self.kind == CONVENTIONAL:
            if self.param is not None:
                raise ValueError("conventional sampling takes no parameter")
        elif self.kind in (NUCLEUS, TYPICAL):
            if self.param is None:
                raise ValueError(f"{self.kind} sampling needs tau")
            _check_tau(self.param)
        elif self.kind == TOP_K:
            if self.param is None or int(self.param) != self.param or self.param < 1:
                raise ValueError("top-k sampling needs an integer k >= 1")
            object.__setattr__(self, "param", int(self.param))
        else:
            raise ValueError(f"unknown sampling strategy {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "SamplingStrategy":
        """Parse ``conventional``, ``nucleus:0.8``, ``typical:0.8`` or ``topk:32``."""
        kind, _, arg = text.strip().partition(":")
        kind = {"top_k": TOP_K, "top-k": TOP_K, "conv": CONVENTIONAL}.get(kind, kind)
        if kind == CONVENTIONAL:
            if arg:
                raise ValueError(f"conventional sampling takes no parameter: {text!r}")
            return cls()
        if not arg:
            raise ValueError(f"strategy {text!r} needs a parameter")
        return cls(kind, int(arg) if kind == TOP_K else float(arg))

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind}:{self.param:g}"

    @property
    def tau(self) -> Optional[float]:
        return self.param if self.kind in (NUCLEUS, TYPICAL) else None

    def truncate(self, probs: np.ndarray) -> np.ndarray:
        if self.kind == NUCLEUS:
            return kernels.nucleus(probs, self.param)
        if self.kind == TYPICAL:
            return kernels.typical(probs, self.param)
        if self.kind == TOP_K:
            return kernels.top_k(probs, self.param)
        return probs


def sample_token(dist, rng: np.random.Generator) -> tuple[int, np.random.Generator]:
    """Inverse-CDF draw in token-id order from one ``rng.random()`` double.

    Returns the token and the (advanced) generator.
    """
    return int(kernels.sample_index(as_probs(dist), rng.random())), rng


class GenerationOutcome(enum.Enum):
    EOS_TERMINATED = "eos_terminated"
    LENGTH_CAPPED = "length_capped"


@dataclass(frozen=True)
class GenerationConfig:
    max_len: int
    eos_id: int
    seed: int = 0
    strategy: SamplingStrategy = SamplingStrategy()

    def __post_init__(self):
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")


class GenerationError(RuntimeError):
    pass


def generate(
    model: LanguageModel,
    config: GenerationConfig,
    rng: Optional[np.random.Generator] = None,
) -> tuple[list[int], GenerationOutcome]:
    """Sample from the empty context until EOS or ``max_len`` tokens."""
    if rng is None:
        rng = make_rng(config.seed)
    truncate = config.strategy.truncate
    sample = kernels.sample_index
    eos = config.eos_id
    tokens: list[int] = []
    while len(tokens) < config.max_len:
        probs = truncate(np.exp(model.next_dist(trim_context(model, tokens, len(tokens)))))
        token = sample(probs, rng.random())
        if token < 0 or not probs[token] > 0:
            raise GenerationError(f"sampling failed at step {len(tokens)}: degenerate distribution")
        tokens.append(int(token))
        if token == eos:
            return tokens, GenerationOutcome.EOS_TERMINATED
    return tokens, GenerationOutcome.LENGTH_CAPPED


def generate_batch(
    model: LanguageModel,
    strategy: SamplingStrategy,
    n: int,
    max_len: int,
    seed: int,
) -> list[tuple[list[int], GenerationOutcome]]:
    """``n`` independent streams; stream ``i`` draws from ``stream_rng(seed, i)``."""
    config = GenerationConfig(max_len, model.eos_id, seed, strategy)
    return [generate(model, config, stream_rng(seed, i)) for i in range(n)]


def nearest_rank_quantile(values: Iterable[int], q: float) -> int:
    ordered = sorted(values)
    if not ordered:
        raise ValueError("no values")
    rank = max(1, math.ceil(q * len(ordered) - 1e-9))
    return ordered[rank - 1]


def default_max_len(training) -> int:
    """80th percentile (nearest rank) of tokenized training lengths.

    Accepts scores or plain integer lengths.
    """
    from musictrunc.tokenizer import sequence_length

    lengths = [x if isinstance(x, (int, np.integer)) else sequence_length(x) for x in training]
    return int(nearest_rank_quantile(lengths, 0.8))
