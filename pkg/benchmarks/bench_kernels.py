"""Compare the compiled and pure-Python rollout kernels.

    python3 benchmarks/bench_kernels.py [--horizon 2000] [--runs 50] [--repeat 3]

Both backends run the same rollouts; the script checks that their outputs are
bit-identical before reporting timings.
"""
import argparse
import sys
import time

import numpy as np

from idlimits.kernel import backends, run_rollout
from idlimits.model import PolicySpec, draw_noise_sequence
from idlimits.rng import derive_stream


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=2000)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    policy = PolicySpec("sin_modulated", -1.2)
    noises = [draw_noise_sequence(0.1, args.horizon, derive_stream(7, i))
              for i in range(args.runs)]
    eye = np.eye(2)

    def batch(name):
        return lambda: [run_rollout((0.9, 1.0), policy, w, 0.1, (0.0, 0.0), eye, 1e6, name)
                        for w in noises]

    available = backends()
    results = {}
    steps = args.horizon * args.runs
    for name in sorted(available):
        elapsed, out = _time(batch(name), args.repeat)
        results[name] = (elapsed, out)
        print(f"{name:>7}: {elapsed:8.4f} s  {steps / elapsed / 1e6:8.3f} M steps/s")

    if "cython" not in results:
        print("compiled kernel not built; only the fallback was timed")
        return 0
    py, cy = results["python"], results["cython"]
    identical = all(np.array_equal(a.states, b.states) and np.array_equal(a.utilities, b.utilities)
                    and np.array_equal(a.cov, b.cov) for a, b in zip(py[1], cy[1]))
    print(f"speedup: {py[0] / cy[0]:.1f}x   outputs bit-identical: {identical}")
    return 0 if identical else 1


if __name__ == "__main__":
    sys.exit(main())
