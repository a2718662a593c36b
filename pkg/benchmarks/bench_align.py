"""Time the compiled alignment kernel against the pure-Python fallback.

Run from the repository root after installing the package:

    python benchmarks/bench_align.py --pairs 2000 --len 20
"""

from __future__ import annotations

import argparse
import random
import statistics
import time

from dualhyp import _align_py

try:
    from dualhyp import _align_ext
except ImportError:
    _align_ext = None


def make_pairs(n: int, length: int, vocab: int, seed: int) -> list[tuple[list[int], list[int]]]:
    rng = random.Random(seed)
    pairs = []
    for _ in range(n):
        ref = [rng.randrange(vocab) for _ in range(rng.randint(1, length))]
        hyp = [t if rng.random() > 0.3 else rng.randrange(vocab) for t in ref]
        if rng.random() < 0.3:
            hyp.insert(rng.randrange(len(hyp) + 1), rng.randrange(vocab))
        if len(hyp) > 1 and rng.random() < 0.3:
            del hyp[rng.randrange(len(hyp))]
        pairs.append((ref, hyp))
    return pairs


def time_kernel(fn, pairs, repeats: int) -> float:
    runs = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for ref, hyp in pairs:
            fn(ref, hyp)
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--len", type=int, default=20, help="maximum reference length in tokens")
    ap.add_argument("--vocab", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    pairs = make_pairs(args.pairs, args.len, args.vocab, args.seed)
    kernels = {"python": _align_py}
    if _align_ext is not None:
        kernels["cython"] = _align_ext
    else:
        print("compiled kernel not built; timing the fallback only")

    print(f"{args.pairs} pairs, ref length <= {args.len}, median of {args.repeats} runs")
    print(f"{'kernel':<8} {'function':<14} {'total ms':>10} {'us/pair':>9} {'speedup':>8}")
    for func in ("edit_distance", "edit_ops"):
        base = None
        for name, mod in kernels.items():
            secs = time_kernel(getattr(mod, func), pairs, args.repeats)
            base = base or secs
            print(f"{name:<8} {func:<14} {secs * 1e3:>10.2f} {secs / args.pairs * 1e6:>9.2f} {base / secs:>7.1f}x")
    if _align_ext is not None:
        same = all(_align_py.edit_ops(r, h) == _align_ext.edit_ops(r, h) for r, h in pairs)
        print(f"kernels agree on all pairs: {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
