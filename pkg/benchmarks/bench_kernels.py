"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import time

import numpy as np

from rateless import _fallback

try:
    from rateless import _kernels
except ImportError:  # extension not built
    _kernels = None


def _jacobi_case(n):
    r = np.random.default_rng(n)
    a = r.normal(size=(n, n))
    c = (a + a.T) / 2

    def run(mod):
        mod.jacobi_sweeps(c.copy(), np.eye(n), 1e-12, 100)

    return f"jacobi n={n}", run


def _hinge_case(n, dim, classes=10, epochs=5):
    r = np.random.default_rng(0)
    x = r.normal(size=(n, dim))
    y = r.integers(0, classes, n).astype(np.int64)
    orders = np.stack([r.permutation(n) for _ in range(epochs)]).astype(np.int64)

    def run(mod):
        mod.hinge_sgd(x, y, orders, np.zeros((classes, dim)), np.zeros(classes), 0.01, 1e-4)

    return f"hinge_sgd n={n} dim={dim} epochs={epochs}", run


def _adam_case(size, steps=20):
    r = np.random.default_rng(0)
    g = r.normal(size=size)

    def run(mod):
        p, m, v = np.zeros(size), np.zeros(size), np.zeros(size)
        for t in range(1, steps + 1):
            mod.adam_update(p, g, m, v, 1e-3, 0.9, 0.999, 1 - 0.9**t, 1 - 0.999**t, 1e-8)

    return f"adam_update size={size} steps={steps}", run


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        tic = time.perf_counter()
        fn()
        times.append(time.perf_counter() - tic)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    cases = [_jacobi_case(32), _jacobi_case(100), _hinge_case(2000, 32), _adam_case(430_000)]
    print(f"{'case':40s} {'python (s)':>12s} {'compiled (s)':>13s} {'speedup':>8s}")
    for name, run in cases:
        slow = best_time(lambda: run(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:40s} {slow:12.4f} {'n/a':>13s}")
            continue
        fast = best_time(lambda: run(_kernels), args.repeat)
        print(f"{name:40s} {slow:12.4f} {fast:13.4f} {slow / fast:7.1f}x")


if __name__ == "__main__":
    main()
