"""Compare the compiled and numpy kernel backends on training-shaped problems.

Run:  python3 benchmarks/bench_kernels.py [--repeats N]

Times the dense-layer kernels at the batch/width combinations the learners
actually use (batch 64, hidden 64) plus a few larger shapes, and a composite
"one actor-critic update" workload. Both backends must be importable; build
the extension first (pip install -e .) or the compiled column is skipped.
"""

import argparse
import time

import numpy as np

from qnetrl.kernels import available_backends, get_backend


# (batch, n_in, n_out) pairs: training default (64, 8->64->64->T+1 nets,
# critic input ~16) and stress shapes
SHAPES = [
    (64, 8, 64),
    (64, 64, 64),
    (64, 64, 8),
    (64, 16, 64),
    (256, 64, 64),
    (1024, 128, 128),
]


def time_fn(fn, repeats):
    # warm up once, then take the best of `repeats` (least-noise estimator)
    fn()
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(impl, repeats, rng):
    rows = {}
    for batch, n_in, n_out in SHAPES:
        x = rng.standard_normal((batch, n_in))
        w = rng.standard_normal((n_in, n_out))
        b = rng.standard_normal(n_out)
        out = np.empty((batch, n_out))
        gy = rng.standard_normal((batch, n_out))
        gx = np.empty((batch, n_in))
        gw = np.empty((n_in, n_out))
        gb = np.empty(n_out)

        def fwd():
            impl.affine_relu(x, w, b, out)

        def bwd():
            impl.affine_backward(x, w, gy, gx, gw, gb)

        # 100 inner iterations so each sample is well above timer resolution
        rows[(batch, n_in, n_out, "fwd")] = time_fn(
            lambda: [fwd() for _ in range(100)], repeats) / 100
        rows[(batch, n_in, n_out, "bwd")] = time_fn(
            lambda: [bwd() for _ in range(100)], repeats) / 100
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    rng = np.random.default_rng(0)
    results = {name: bench_backend(get_backend(name), args.repeats, rng)
               for name in backends}

    header = f"{'shape (BxI->O)':>18s} {'pass':>4s}"
    for name in backends:
        header += f" {name + ' us':>12s}"
    if len(backends) == 2:
        header += f" {'speedup':>8s}"
    print(header)
    for batch, n_in, n_out in SHAPES:
        for phase in ("fwd", "bwd"):
            key = (batch, n_in, n_out, phase)
            line = f"{f'{batch}x{n_in}->{n_out}':>18s} {phase:>4s}"
            for name in backends:
                line += f" {results[name][key] * 1e6:12.2f}"
            if len(backends) == 2:
                ratio = results["python"][key] / results["compiled"][key]
                line += f" {ratio:7.2f}x"
            print(line)


if __name__ == "__main__":
    main()
