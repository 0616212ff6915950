"""Time the compiled and numpy Gibbs kernels on identical inputs.

    python benchmarks/bench_gibbs.py [--tokens 20000] [--sweeps 3] [--topics 3 50 200]

Both backends start from the same assignments and consume the same uniforms,
so the script also checks that their final counts agree exactly.
"""

import argparse
import sys
import time

import numpy as np

from curio._kernels import backends


def make_state(n_tokens, n_docs, V, K, seed):
    rng = np.random.default_rng(seed)
    words = rng.integers(0, V, n_tokens).astype(np.int64)
    docs = np.sort(rng.integers(0, n_docs, n_tokens)).astype(np.int64)
    z = rng.integers(0, K, n_tokens).astype(np.int64)
    nwk = np.zeros((V, K), dtype=np.int64)
    ndk = np.zeros((n_docs, K), dtype=np.int64)
    np.add.at(nwk, (words, z), 1)
    np.add.at(ndk, (docs, z), 1)
    return words, docs, z, nwk, ndk, nwk.sum(axis=0)


def bench(mod, state, sweeps, alpha, beta, seed):
    words, docs, z, nwk, ndk, nk = (a.copy() for a in state)
    rng = np.random.default_rng(seed)
    uniforms = [rng.random(words.shape[0]) for _ in range(sweeps)]
    t0 = time.perf_counter()
    for u in uniforms:
        mod.train_sweep(words, docs, z, nwk, ndk, nk, alpha, beta, u)
    return (time.perf_counter() - t0) / sweeps, nwk


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tokens", type=int, default=20_000)
    ap.add_argument("--docs", type=int, default=2_000)
    ap.add_argument("--vocab", type=int, default=2_000)
    ap.add_argument("--sweeps", type=int, default=3)
    ap.add_argument("--topics", type=int, nargs="+", default=[3, 50, 200])
    args = ap.parse_args(argv)

    found = backends()
    if "cython" not in found:
        print("compiled backend not built; only the numpy fallback is available", file=sys.stderr)
    print(f"{'K':>5} {'backend':>8} {'s/sweep':>10} {'tokens/s':>12} {'speedup':>8}")
    for K in args.topics:
        state = make_state(args.tokens, args.docs, args.vocab, K, seed=K)
        results = {name: bench(mod, state, args.sweeps, 50.0 / K, 0.01, seed=1)
                   for name, mod in found.items()}
        base = results["python"][0]
        for name, (secs, _) in results.items():
            print(f"{K:>5} {name:>8} {secs:>10.4f} {args.tokens / secs:>12.0f} {base / secs:>7.1f}x")
        if "cython" in results and not np.array_equal(results["cython"][1], results["python"][1]):
            print(f"K={K}: backends disagree", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
