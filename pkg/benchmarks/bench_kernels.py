"""Compare the compiled and the numpy kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time of each workload per backend and
the speed-up of the compiled one.
"""

import argparse
import timeit

import numpy as np

from cqedfeedback import FactorKind as K
from cqedfeedback import SpectralFunction, SystemParams
from cqedfeedback._backend import available, get
from cqedfeedback.quadrature import integrate_abs2


def workloads():
    p = SystemParams.optimal(2.5)
    dk = np.linspace(-50.0, 50.0, 200_001)
    f_eval = SpectralFunction.build(p, K.C_R, (K.C_L, 20), K.D_L, K.CAVITY)
    codes, powers, widths, consts = f_eval._encoded

    def evaluation(kern):
        return lambda: kern.eval_product(dk, codes, powers, widths, consts)

    def single(kinds, params, tol):
        f = SpectralFunction.build(params, *kinds)
        return lambda name: (lambda: integrate_abs2(f, tol, backend=name))

    def trace(name):
        def run():
            for n in range(1, 101):
                f = SpectralFunction.build(p, (K.C_L, n - 1), K.D_L, K.CAVITY)
                integrate_abs2(f, 1e-12, backend=name)
        return run

    return [
        ("eval 200k points, C_L^20 product", lambda name: evaluation(get(name))),
        ("p1_R at lambda_L=2.5", single([K.D_R, K.CAVITY], p, 1e-10)),
        ("p1_R at lambda_L=250", single([K.D_R, K.CAVITY], SystemParams.optimal(250.0), 1e-10)),
        ("left norm after 100 rounds", single([(K.C_L, 99), K.D_L, K.CAVITY], p, 1e-12)),
        ("100 cumulative probabilities", trace),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = available()
    print(f"{'workload':34s}" + "".join(f"{n:>12s}" for n in names) + ("   speed-up" if len(names) > 1 else ""))
    for label, make in workloads():
        times = []
        for name in names:
            fn = make(name)
            fn()  # warm up
            times.append(min(timeit.repeat(fn, number=1, repeat=args.repeat)))
        row = f"{label:34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[1] / times[0]:10.1f}x"
        print(row)


if __name__ == "__main__":
    main()
