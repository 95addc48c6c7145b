"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines
alongside pytest's own verdicts.
"""

import itertools
import math
import time

import numpy as np
import pytest

from cqedfeedback import FactorKind, SpectralFunction, SystemParams, transfer_C, transfer_D
from cqedfeedback.cli import SCENARIOS, main
from cqedfeedback.feedback import (
    constant_p_baseline,
    first_round_prob,
    left_prob,
    single_trial_prob,
    success_prob,
)
from cqedfeedback.modes import MirrorCavity, find_quasimode
from cqedfeedback.quadrature import integrate_abs2, integrate_abs2_residues

SEED = 20240611


def report(n, ok, detail):
    print(f"\ncriterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def random_params(rng, count):
    out = []
    for _ in range(count):
        out.append(
            SystemParams(
                kappa=rng.uniform(0.1, 10.0),
                k_c=rng.uniform(-10.0, 10.0),
                delta_e=rng.uniform(-5.0, 5.0),
                lambda_L=rng.uniform(0.05, 20.0),
                lambda_R=rng.uniform(0.05, 20.0),
            )
        )
    return out


def test_c01_unitarity():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    for p in random_params(rng, 1000):
        k = p.k_c + rng.uniform(-50.0, 50.0) * max(p.kappa, p.lambda_L, p.lambda_R)
        cl, cr = transfer_C(k, p)
        worst = max(worst, abs(abs(cl) ** 2 + abs(cr) ** 2 - 1))
    elapsed = time.perf_counter() - t0
    report(1, worst < 1e-12 and elapsed < 1.0, f"max residual {worst:.2e}, {elapsed:.3f} s")


def test_c02_first_round_normalization():
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    for p in random_params(rng, 50):
        left = integrate_abs2(SpectralFunction.build(p, FactorKind.D_L, FactorKind.CAVITY)).value
        right = integrate_abs2(SpectralFunction.build(p, FactorKind.D_R, FactorKind.CAVITY)).value
        worst = max(worst, abs(left + right - 1))
    report(2, worst < 1e-8, f"max |sum - 1| {worst:.2e} over 50 draws")


def test_c03_strong_coupling():
    vals = [first_round_prob(SystemParams.optimal(lam))[0] for lam in (2.5, 25.0, 250.0)]
    gaps = [abs(v - 0.5) for v in vals]
    ok = gaps[0] > gaps[1] > gaps[2] and gaps[1] < 0.01 and gaps[2] < 0.001
    report(3, ok, "p1_R = " + ", ".join(f"{v:.9f}" for v in vals))


def _families():
    # every product shape the protocol builds, up to 12 poles in total
    cav, dl, dr, cl, cr = (FactorKind.CAVITY, FactorKind.D_L, FactorKind.D_R,
                           FactorKind.C_L, FactorKind.C_R)
    yield (dr, cav)
    for m in range(4):
        yield ((cl, m), dl, cav)
    for m in range(3):
        yield (cr, (cl, m), dl, cav)
    from cqedfeedback import Factor

    for w in (1e-3, 0.3, 1.0, 30.0):
        yield (cr, Factor.input(w))
        yield ((cl, 3), Factor.input(w))


def test_c04_oracle_equivalence():
    rng = np.random.default_rng(SEED + 2)
    params = [SystemParams.optimal(lam) for lam in (0.1, 2.5, 25.0, 250.0)]
    params += random_params(rng, 8)
    worst, count = 0.0, 0
    for p, kinds in itertools.product(params, list(_families())):
        f = SpectralFunction.build(p, *kinds)
        assert f.pole_count <= 12
        exact = integrate_abs2_residues(f)
        q = integrate_abs2(f, 1e-13).value
        worst = max(worst, abs(q - exact) / max(1.0, exact))
        count += 1
    report(4, worst < 1e-10, f"max relative gap {worst:.2e} over {count} integrands")


def test_c05_telescoping():
    p = SystemParams.optimal(2.5)
    gaps = {}
    for N in (2, 5, 10, 50, 100):
        summed = math.fsum(success_prob(p, n) for n in range(1, N + 1))
        gaps[N] = abs(summed - (1 - left_prob(p, N)))
    worst = max(gaps.values())
    report(5, worst < 1e-7, "gaps " + ", ".join(f"N={k}: {v:.1e}" for k, v in gaps.items()))


def test_c06_saturation():
    p = SystemParams.optimal(2.5)
    t0 = time.perf_counter()
    P = {N: 1 - left_prob(p, N) for N in range(1, 101)}
    elapsed = time.perf_counter() - t0
    below = all(P[N] < constant_p_baseline(0.5, N) for N in range(2, 101))
    ok = P[100] - P[10] < 0.05 and 1 - P[100] > 0.01 and below and elapsed < 60
    report(
        6, ok,
        f"P_10={P[10]:.6f} P_100={P[100]:.6f} diff={P[100] - P[10]:.6f} "
        f"below baseline={below} ({elapsed:.2f} s)",
    )


def test_c07_narrow_input():
    vals = [single_trial_prob(SystemParams.optimal(lam), 1e-3) for lam in (0.1, 0.5, 2.5)]
    report(7, all(v > 0.99 for v in vals), "P_R_1 = " + ", ".join(f"{v:.5f}" for v in vals))


def test_c08_optimal_pointwise():
    cl, cr = transfer_C(0.0, SystemParams.optimal(2.5))
    dl, dr = transfer_D(0.0, SystemParams.optimal(2.5))
    errs = [abs(cl), abs(cr - 1), abs(dl - 0.5), abs(dr + 0.5)]
    report(8, max(errs) < 1e-14, "deviations " + ", ".join(f"{e:.1e}" for e in errs))


def test_c09_quasimode():
    qm = find_quasimode(MirrorCavity.lossless(0.99), math.pi / 2)
    mismatch = abs(qm.kappa_fit - qm.half_max_width) / qm.half_max_width
    report(
        9, qm.fit_residual < 0.02 and mismatch < 0.05,
        f"residual {qm.fit_residual:.2e}, width mismatch {mismatch:.2e}",
    )


def test_c10_determinism(tmp_path):
    differing = []
    for scenario in SCENARIOS:
        a, b = tmp_path / scenario / "a", tmp_path / scenario / "b"
        assert main([scenario, "--out", str(a)]) == 0
        assert main([scenario, "--out", str(b)]) == 0
        names = sorted(p.name for p in a.iterdir())
        if names != sorted(p.name for p in b.iterdir()):
            differing.append(scenario)
            continue
        differing += [f"{scenario}/{n}" for n in names if (a / n).read_bytes() != (b / n).read_bytes()]
    report(10, not differing, f"default configs of {len(SCENARIOS)} scenarios; differing: {differing or 'none'}")
