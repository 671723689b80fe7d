"""Time the compiled geometry kernels against the pure-Python ones.

    python benchmarks/bench_kernels.py [--size 9] [--repeat 3]
"""

import argparse
import timeit

from gridgather import _purekernels as pure

try:
    from gridgather import _ckernels as compiled
except ImportError:
    compiled = None


def cases(size):
    polys = pure.fixed_polyominoes(size - 1)
    sample = polys[:: max(1, len(polys) // 2000)]
    return {
        "fixed_polyominoes": lambda k: k.fixed_polyominoes(size),
        "lemma_scan": lambda k: k.lemma_scan(size),
        "connected": lambda k: [k.connected(p) for p in sample],
        "hole_free": lambda k: [k.hole_free(p) for p in sample],
        "cut_cells": lambda k: [k.cut_cells(p) for p in sample],
        "has_destructible": lambda k: [k.has_destructible(p) for p in sample],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=9)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled kernels not built; run `pip install -e . --no-build-isolation` first")
        return
    print(f"{'kernel':<18} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for name, fn in cases(args.size).items():
        tp = min(timeit.repeat(lambda: fn(pure), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        print(f"{name:<18} {tp:>10.4f} {tc:>10.4f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
