"""Categorical next-token distributions (natural log throughout)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-9


class DistributionError(ValueError):
    pass


def log_softmax(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    finite = np.isfinite(x)
    if not finite.any():
        raise DistributionError("log-weights have no finite entry")
    top = x[finite].max()
    shifted = x - top
    return shifted - np.log(np.sum(np.exp(shifted)))


def softmax(x: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(x))


@dataclass(frozen=True)
class CategoricalDistribution:
    """Log-probabilities over token ids; ``-inf`` marks a zeroed token."""

    log_weights: np.ndarray

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=np.float64)
        lw.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)
        validate_log_weights(lw)

    @classmethod
    def from_probs(cls, probs) -> "CategoricalDistribution":
        with np.errstate(divide="ignore"):
            return cls(np.log(np.asarray(probs, dtype=np.float64)))

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def __len__(self) -> int:
        return len(self.log_weights)


def validate_log_weights(lw: np.ndarray) -> None:
    if lw.ndim != 1 or lw.size == 0:
        raise DistributionError("log-weights must be a non-empty vector")
    if np.isnan(lw).any() or np.isposinf(lw).any():
        raise DistributionError("log-weights contain NaN or +inf")
    if not np.isfinite(lw).any():
        raise DistributionError("distribution has no finite entry")
    total = float(np.sum(np.exp(lw)))
    if abs(total - 1.0) > NORM_TOL:
        raise DistributionError(f"probabilities sum to {total!r}, not 1")


def validate_probs(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise DistributionError("probabilities must be a non-empty vector")
    if not np.isfinite(p).all() or (p < 0).any():
        raise DistributionError("probabilities must be finite and non-negative")
    total = float(p.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise DistributionError(f"probabilities sum to {total!r}, not 1")
    return p


def as_probs(dist) -> np.ndarray:
    """Accept a CategoricalDistribution or a probability vector."""
    if isinstance(dist, CategoricalDistribution):
        return dist.probs
    return np.asarray(dist, dtype=np.float64)


def entropy(dist) -> float:
    """Expected information content, ``-sum p ln p`` over the support."""
    p = as_probs(dist)
    support = p[p > 0]
    return float(-np.sum(support * np.log(support)))


def information_content(dist, token_id: int) -> float:
    """``-ln q(token)``; ``inf`` for a zeroed token."""
    if isinstance(dist, CategoricalDistribution):
        return float(-dist.log_weights[token_id])
    p = float(np.asarray(dist, dtype=np.float64)[token_id])
    return float("inf") if p == 0.0 else -float(np.log(p))
