"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--vocab 64] [--repeat 5]

Each row reports the best-of-``repeat`` time per call for both backends and
checks that they return the same result on the benchmark inputs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from musictrunc import _kernels_py as py_kernels
from musictrunc.corpus import generate_toy_corpus
from musictrunc.metrics import pack_bars

try:
    from musictrunc import _kernels as c_kernels
except ImportError:  # extension not built
    c_kernels = None


def random_probs(rng: np.random.Generator, n: int, count: int) -> list[np.ndarray]:
    out = []
    for _ in range(count):
        p = rng.dirichlet(np.full(n, 0.3))
        p[rng.random(n) < 0.2] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
        out.append(p / p.sum())
    return out


def cases(vocab: int, seed: int):
    rng = np.random.default_rng(seed)
    dists = random_probs(rng, vocab, 200)
    us = rng.random(len(dists))
    packed = pack_bars(generate_toy_corpus(200, seed))
    return {
        "nucleus(0.8)": (lambda k: [k.nucleus(p, 0.8) for p in dists], len(dists)),
        "typical(0.8)": (lambda k: [k.typical(p, 0.8) for p in dists], len(dists)),
        "top_k(8)": (lambda k: [k.top_k(p, 8) for p in dists], len(dists)),
        "sample_index": (lambda k: [k.sample_index(p, u) for p, u in zip(dists, us)], len(dists)),
        "lag_profile(200 tunes)": (lambda k: [k.lag_profile(*packed, 38)], 1),
    }


def same(a, b) -> bool:
    return all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--vocab", type=int, default=64)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if c_kernels is None:
        print("compiled extension not available; timing the Python backend only")
    print(f"{'kernel':<24}{'python us/call':>16}{'compiled us/call':>18}{'speedup':>10}  match")
    for name, (fn, calls) in cases(args.vocab, args.seed).items():
        t_py = min(timeit.repeat(lambda: fn(py_kernels), number=1, repeat=args.repeat)) / calls * 1e6
        if c_kernels is None:
            print(f"{name:<24}{t_py:>16.2f}")
            continue
        t_c = min(timeit.repeat(lambda: fn(c_kernels), number=1, repeat=args.repeat)) / calls * 1e6
        match = same(fn(py_kernels), fn(c_kernels))
        print(f"{name:<24}{t_py:>16.2f}{t_c:>18.2f}{t_py / t_c:>9.1f}x  {'yes' if match else 'NO'}")


if __name__ == "__main__":
    main()
