"""Pure numpy implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` function for function; :mod:`._backend` picks one
at import time.  Panels are processed breadth-first in vectorized batches,
the compiled kernel goes depth-first, but the accept/split decision for a
panel only depends on that panel, so both produce the same panel set.
"""

import numpy as np

from ._gk import GAUSS, KRONROD, NODES
from .errors import PoleProximityError

NAME = "python"

EPS = np.finfo(float).eps
ROUNDOFF_FACTOR = 50.0

CAVITY, INPUT, D_L, D_R, C_L, C_R = range(6)


def _ipow(z, n):
    """Integer power by repeated squaring (complex ``**`` goes through log/exp)."""
    if n == 1:
        return z
    result = np.ones_like(z)
    base = z
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def eval_product(dk, codes, powers, widths, consts):
    """Product of closed-form factors at real offsets ``dk``."""
    kap, de, lam_l, lam_r, wpr, wpi, wmr, wmi, guard = consts
    g2 = 2 * lam_l * lam_l + lam_r * lam_r
    wp, wm = complex(wpr, wpi), complex(wmr, wmi)
    out = np.ones(dk.shape, dtype=complex)
    rabi = None

    for code, p, w in zip(codes, powers, widths):
        if p == 0:
            continue
        if code == CAVITY:
            base = np.sqrt(kap / (2 * np.pi)) / (dk + 0.5j * kap)
        elif code == INPUT:
            base = np.sqrt(w / (2 * np.pi)) / (dk + 0.5j * w)
        elif g2 == 0.0:
            if code in (D_R, C_R):
                return np.zeros(dk.shape, dtype=complex)
            continue
        else:
            if rabi is None:
                if np.any(np.abs(dk - wp) < guard) or np.any(np.abs(dk - wm) < guard):
                    raise PoleProximityError("evaluation point on a Rabi pole")
                rabi = (dk - wp) * (dk - wm)
            if code == D_L:
                base = ((dk - de) * (dk + 0.5j * kap) - lam_r * lam_r) / rabi
            elif code == D_R:
                base = np.sqrt(2.0) * lam_l * lam_r / rabi
            elif code == C_L:
                num = (
                    (dk - de) * (dk * dk + 0.25 * kap * kap)
                    - dk * (lam_r * lam_r + 2 * lam_l * lam_l)
                    + 0.5j * kap * (lam_r * lam_r - 2 * lam_l * lam_l)
                )
                base = num / ((dk - 0.5j * kap) * rabi)
            elif code == C_R:
                base = np.sqrt(2.0) * 1j * kap * lam_l * lam_r / ((dk - 0.5j * kap) * rabi)
            else:
                raise ValueError(f"unknown factor code {code}")
        out *= _ipow(base, int(p))
    return out


def noise_model(codes, powers, widths, consts):
    """``(poles, nearest)`` for the evaluation-noise estimate.

    A real offset ``dk`` carries an absolute rounding error of order
    ``eps*|dk|``; every factor ``1/(dk - z)`` turns that into a relative
    error ``eps*|dk|/|Im z|``.  ``poles`` counts the factors (with powers)
    and ``nearest`` is the smallest ``|Im z|`` among them.
    """
    kap, _, lam_l, lam_r, _, wpi, _, wmi, _ = consts
    coupled = 2 * lam_l * lam_l + lam_r * lam_r > 0
    poles = 0
    nearest = np.inf
    for code, p, w in zip(codes, powers, widths):
        if p == 0:
            continue
        if code == INPUT:
            poles += int(p)
            nearest = min(nearest, 0.5 * w)
        elif code == CAVITY or coupled:
            poles += int(p) * (1 if code == CAVITY else 2 if code in (D_L, D_R) else 3)
            nearest = min(nearest, 0.5 * kap)
            if code != CAVITY:
                nearest = min(nearest, abs(wpi), abs(wmi))
    return poles, nearest


def _gk_batch(h, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = h(x.ravel()).reshape(x.shape)
    k = half * (fx @ KRONROD)
    g = half * (fx @ GAUSS)
    resabs = np.abs(half) * (np.abs(fx) @ KRONROD)
    return k, np.abs(k - g), resabs


def adaptive_gk(h, seeds, tol, max_panels, ref=0.0, cond=None):
    """Adaptive G7K15 over consecutive ``seeds`` (which include both ends).

    A panel is accepted when its error is below half of ``tol`` shared out
    by width plus half shared out by its share of the integral ``ref``
    (taken from the seed panels when ``ref <= 0``).  Tall narrow peaks
    would otherwise need accuracy near machine precision.

    ``cond(mid)``, if given, scales the roundoff floor of a panel by the
    conditioning of the integrand evaluation there.

    Returns ``(a, b, value, error, nevals, converged)`` with one entry per
    accepted panel, in processing order.
    """
    seeds = np.asarray(seeds, dtype=float)
    total = seeds[-1] - seeds[0]
    a, b = seeds[:-1].copy(), seeds[1:].copy()
    acc = [[], [], [], []]
    processed = 0
    nevals = 0
    converged = True
    first = True
    while a.size:
        k, err, resabs = _gk_batch(h, a, b)
        if first and ref <= 0:
            ref = float(np.sum(resabs))
        first = False
        processed += a.size
        nevals += 15 * a.size
        width = b - a
        mid = 0.5 * (a + b)
        floor = ROUNDOFF_FACTOR * EPS * resabs
        if cond is not None:
            floor = floor * cond(mid)
        ok = (
            (err <= 0.5 * tol * (width / total + (resabs / ref if ref > 0 else 0.0)))
            | (err <= floor)
            | (width <= 64 * EPS * np.maximum(1.0, np.abs(mid)))
        )
        if processed > max_panels:
            ok[:] = True
            converged = False
        for lst, arr in zip(acc, (a, b, k, err)):
            lst.append(arr[ok])
        bad = ~ok
        a0, b0, m0 = a[bad], b[bad], mid[bad]
        a = np.concatenate([a0, m0])
        b = np.concatenate([m0, b0])
    out = [np.concatenate(lst) if lst else np.empty(0) for lst in acc]
    return out[0], out[1], out[2], out[3], nevals, converged


def spectral_panels(codes, powers, widths, consts, coef2, scale, seeds, tol, max_panels, ref=0.0):
    """Panels of ``coef2 * |prod(k)|**2`` over the real line mapped by ``dk = scale*tan(theta)``."""

    def h(theta):
        c = np.cos(theta)
        v = eval_product(scale * np.tan(theta), codes, powers, widths, consts)
        return coef2 * (v.real * v.real + v.imag * v.imag) * scale / (c * c)

    poles, nearest = noise_model(codes, powers, widths, consts)

    def cond(theta):
        return 1.0 + poles * np.abs(scale * np.tan(theta)) / nearest

    return adaptive_gk(h, seeds, tol, max_panels, ref, cond if poles else None)
