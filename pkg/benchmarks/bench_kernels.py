"""Time the compiled blob-field kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Cases use the default ring grid (spacing 0.5 in) with N robots at delta=2,
count normalization, i.e. the inner loop of the Monte Carlo error sampler
and the gradient used by the optimizer.
"""
import argparse
import timeit

import numpy as np

from swarmcov import _kernels_py

try:
    from swarmcov import _kernels as compiled
except ImportError:
    compiled = None


def cases(repeat):
    g = np.random.default_rng(0)
    xs, ys = (np.arange(96) + 0.5) * 0.5, (np.arange(140) + 0.5) * 0.5
    W = g.standard_normal((96, 140))
    for n in (50, 200, 800):
        px, py = g.uniform(0, 48, n), g.uniform(0, 70, n)
        yield f"field N={n}", lambda m, px=px, py=py: m.gaussian_field(px, py, 2.0, xs, ys, 8.0)
        yield f"grad  N={n}", lambda m, px=px, py=py: m.gaussian_grad(px, py, 2.0, xs, ys, W, 8.0, True)
        yield f"disc  N={n}", lambda m, px=px, py=py: m.indicator_field(px, py, 2.0, xs, ys)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("numpy", _kernels_py)] + ([("cython", compiled)] if compiled else [])
    print(f"{'case':<14}" + "".join(f"{name + ' ms':>12}" for name, _ in backends) + ("     speedup" if compiled else ""))
    for label, fn in cases(args.repeat):
        ms = []
        for _, mod in backends:
            fn(mod)  # warm up
            t = min(timeit.repeat(lambda: fn(mod), number=3, repeat=args.repeat)) / 3
            ms.append(1e3 * t)
        row = f"{label:<14}" + "".join(f"{v:12.3f}" for v in ms)
        if compiled:
            row += f"{ms[0] / ms[1]:11.2f}x"
        print(row)
    if compiled is None:
        print("compiled extension not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
