"""Pure-numpy kernels; the reference the compiled module must match."""

from __future__ import annotations

import numpy as np

TOL = 1e-12


def _keep_prefix(probs: np.ndarray, order: np.ndarray, tau: float) -> np.ndarray:
    ordered = probs[order]
    cum = np.cumsum(ordered)
    cut = int(np.searchsorted(cum >= tau - TOL, True))
    if cut >= len(cum):
        cut = len(cum) - 1
    if cut + 1 >= np.count_nonzero(probs):
        # whole support kept: renormalizing by ~1 would only add rounding noise
        return probs.copy()
    out = np.zeros_like(probs)
    keep = order[: cut + 1]
    out[keep] = probs[keep] / cum[cut]
    return out


def nucleus(probs: np.ndarray, tau: float) -> np.ndarray:
    if tau >= 1.0:
        # only the whole support has mass 1; skip the tolerance test
        return np.array(probs, dtype=np.float64)
    order = np.argsort(-probs, kind="stable")
    return _keep_prefix(probs, order, tau)


def typical(probs: np.ndarray, tau: float) -> np.ndarray:
    if tau >= 1.0:
        return np.array(probs, dtype=np.float64)
    with np.errstate(divide="ignore"):
        ic = -np.log(probs)
    support = probs > 0
    h = 0.0
    for p, i in zip(probs[support], ic[support]):
        h += p * i
    deviation = np.abs(h - ic)
    order = np.argsort(deviation, kind="stable")
    return _keep_prefix(probs, order, tau)


def top_k(probs: np.ndarray, k: int) -> np.ndarray:
    if k >= np.count_nonzero(probs):
        return probs.copy()
    order = np.argsort(-probs, kind="stable")[:k]
    out = np.zeros_like(probs)
    mass = 0.0
    for i in order:
        mass += probs[i]
    out[order] = probs[order] / mass
    return out


def sample_index(probs: np.ndarray, u: float) -> int:
    """Smallest id whose cumulative probability exceeds ``u * total``."""
    cum = np.cumsum(probs)
    target = u * cum[-1]
    idx = int(np.searchsorted(cum, target, side="right"))
    if idx >= len(probs):
        idx = int(np.flatnonzero(probs > 0)[-1])
    return idx


def lag_profile(keys: np.ndarray, bar_ptr: np.ndarray, tune_ptr: np.ndarray, max_lag: int) -> np.ndarray:
    """Per-lag Jaccard sums over bar pairs, averaged over tunes.

    ``keys`` holds interned note ids, sorted within each bar; bar ``b`` spans
    ``keys[bar_ptr[b]:bar_ptr[b+1]]`` and tune ``x`` spans bars
    ``tune_ptr[x]:tune_ptr[x+1]``.
    """
    n_tunes = len(tune_ptr) - 1
    sets = [frozenset(keys[bar_ptr[b] : bar_ptr[b + 1]].tolist()) for b in range(len(bar_ptr) - 1)]
    acc = np.zeros(max_lag, dtype=np.float64)
    for x in range(n_tunes):
        first, last = int(tune_ptr[x]), int(tune_ptr[x + 1])
        nb = last - first
        for t in range(1, min(max_lag, nb - 1) + 1):
            for i in range(first, last - t):
                a, b = sets[i], sets[i + t]
                if not a and not b:
                    sim = 1.0
                else:
                    inter = len(a & b)
                    sim = inter / (len(a) + len(b) - inter)
                acc[t - 1] += sim
    return acc / n_tunes if n_tunes else acc
