"""Compare the compiled and pure-Python integration kernels.

    python benchmarks/bench_kernels.py [--repeat N] [--t-end T]

Runs the same integrations through every available kernel, checks that the
results agree and reports the best wall time of each.
"""
import argparse
import time

import numpy as np

from fishsim._backend import BACKEND, KERNELS
from fishsim.coefficients import DelaySpec, HistorySpec, Sinusoid
from fishsim.dde_engine import StepControl, integrate
from fishsim.fishery_model import ModelParams

CASES = {
    "constant lag": (ModelParams.constant(2.0, 1.0, 2.0, 1.0, 0.5), StepControl(0.0125)),
    "periodic coefficients": (
        ModelParams(1.5, Sinusoid(2.0, 0.5, 1.0), 1.0, Sinusoid(2.0, 0.3, 0.5),
                    DelaySpec.constant(0.3)),
        StepControl(0.0075),
    ),
    "vanishing lag": (
        ModelParams(1.0, 2.0, 1.0, 1.0, DelaySpec.varying(Sinusoid(0.25, 0.25, 1.0))),
        StepControl(0.01),
    ),
}


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--t-end", type=float, default=100.0)
    args = parser.parse_args(argv)

    history = HistorySpec.constant(0.7)
    print(f"default backend: {BACKEND}; available: {', '.join(sorted(KERNELS))}")
    print(f"{'case':<24}{'steps':>8}" + "".join(f"{k + ' [s]':>14}" for k in sorted(KERNELS))
          + f"{'speedup':>10}{'max |dy|':>12}")
    for name, (params, control) in CASES.items():
        timings, results = {}, {}
        for kname, kernel in sorted(KERNELS.items()):
            timings[kname], results[kname] = best_time(
                lambda: integrate(params, history, args.t_end, control, kernel=kernel),
                args.repeat)
        ref = results["python"]
        diff = max(float(np.max(np.abs(r.y - ref.y))) for r in results.values())
        speedup = timings["python"] / timings["cython"] if "cython" in timings else float("nan")
        print(f"{name:<24}{len(ref):>8}"
              + "".join(f"{timings[k]:>14.4f}" for k in sorted(KERNELS))
              + f"{speedup:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
