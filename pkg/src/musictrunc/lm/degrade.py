"""Deliberately under-calibrated variants of a trained model."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from musictrunc.lm.base import LanguageModel
from musictrunc.lm.dist import log_softmax
from musictrunc.rng import make_rng


class TemperatureModel:
    """``softmax(log q / r)`` on top of a base model.

    The base log-probabilities play the role of logits, so ``r == 1`` is the
    identity and the probability ranking is unchanged for every ``r > 0``.
    """

    def __init__(self, base: LanguageModel, r: float):
        if not r > 0:
            raise ValueError(f"temperature must be > 0, got {r}")
        self.base = base
        self.r = float(r)
        self.vocab_size = base.vocab_size
        self.eos_id = base.eos_id
        self.pad_id = getattr(base, "pad_id", None)
        self.vocab = getattr(base, "vocab", None)
        self.context_window = getattr(base, "context_window", None)
        self._key = getattr(base, "context_key", None)
        self._cache: dict = {}

    def describe(self) -> dict:
        return {"mode": "temperature", "r": self.r}

    def next_dist(self, context: Sequence[int]) -> np.ndarray:
        if self.r == 1.0:
            return self.base.next_dist(context)
        key = self._key(context) if self._key is not None else None
        if key is not None:
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        out = log_softmax(self.base.next_dist(context) / self.r)
        out.setflags(write=False)
        if key is not None:
            self._cache[key] = out
        return out


class NoisyModel:
    """A model whose parameter groups ``W`` were replaced by ``W + k*z``.

    ``z`` is drawn once per group from a zero-mean Gaussian whose standard
    deviation is the sample standard deviation of the group's finite entries.
    """

    def __init__(self, base: LanguageModel, k: float, seed: int):
        if k < 0:
            raise ValueError(f"noise scale k must be >= 0, got {k}")
        if not hasattr(base, "parameter_groups"):
            raise TypeError("noise degradation needs a model exposing parameter_groups()")
        self.base = base
        self.k = float(k)
        self.seed = int(seed)
        self.inner = base if self.k == 0 else _perturb(base, self.k, self.seed)
        self.vocab_size = base.vocab_size
        self.eos_id = base.eos_id
        self.pad_id = getattr(base, "pad_id", None)
        self.vocab = getattr(base, "vocab", None)
        self.context_window = getattr(base, "context_window", None)

    def describe(self) -> dict:
        return {"mode": "noise", "k": self.k, "seed": self.seed}

    def next_dist(self, context: Sequence[int]) -> np.ndarray:
        return self.inner.next_dist(context)

    def parameter_groups(self):
        return self.inner.parameter_groups()


def _perturb(base, k: float, seed: int):
    rng = make_rng(seed)
    groups = []
    for table in base.parameter_groups():
        finite = np.isfinite(table)
        values = table[finite]
        std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        z = rng.normal(0.0, 1.0, size=table.shape) * std
        noisy = np.where(finite, table + k * z, -np.inf)
        groups.append(noisy)
    return base.with_parameter_groups(groups)


def degrade_temperature(model: LanguageModel, r: float) -> TemperatureModel:
    return TemperatureModel(model, r)


def degrade_noise(model: LanguageModel, k: float, seed: int) -> NoisyModel:
    return NoisyModel(model, k, seed)


def describe_degradation(model) -> Optional[dict]:
    describe = getattr(model, "describe", None)
    return describe() if describe is not None else None
