"""Normal modes of a one-sided leaky cavity and their quasi-mode (Lorentzian) approximation.

Diagnostic only: the protocol modules take ``k_c`` and ``kappa`` as given
parameters and never call into this module.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DomainError, SearchError

GOOD_CAVITY_T = 0.2


@dataclass(frozen=True)
class MirrorCavity:
    """Perfect mirror at ``x = 0``, partially transparent mirror (``r``, ``t``) at ``x = l``."""

    r: complex
    t: complex
    l: float = 1.0
    good_threshold: float = GOOD_CAVITY_T

    def __post_init__(self):
        object.__setattr__(self, "r", complex(self.r))
        object.__setattr__(self, "t", complex(self.t))
        if abs(self.r) >= 1:
            raise DomainError(f"|r| must be < 1, got {abs(self.r)}")
        if abs(self.t) == 0:
            raise DomainError("t must be non-zero")
        if not self.l > 0:
            raise DomainError(f"cavity length must be positive, got {self.l}")

    @classmethod
    def lossless(cls, r: float, l: float = 1.0) -> "MirrorCavity":
        """Real ``r`` with ``t = i sqrt(1 - r**2)``."""
        return cls(r, 1j * math.sqrt(1.0 - r * r), l)

    @property
    def good_cavity(self) -> bool:
        return abs(self.t) < self.good_threshold

    @property
    def free_spectral_range(self) -> float:
        return math.pi / self.l


@dataclass(frozen=True)
class QuasiMode:
    k_c: float
    kappa_fit: float
    fit_residual: float
    amplitude: float
    half_max_width: float


def mode_amplitudes(k, cavity: MirrorCavity):
    """Interior amplitude ``I(k)`` and reflection amplitude ``R(k)`` of the normal mode at ``k``."""
    k = np.asarray(k, dtype=float)
    r, t, l = cavity.r, cavity.t, cavity.l
    e = np.exp(2j * k * l)
    den = 1 + r * e
    i_amp = -2j * t / den
    r_amp = (-r - t + r / e) / den
    if i_amp.ndim == 0:
        return complex(i_amp), complex(r_amp)
    return i_amp, r_amp


def _abs_I(k, cavity):
    return abs(mode_amplitudes(k, cavity)[0])


def _denominator_slope(k, cavity):
    # d/dk |1 + r e^{2ikl}|^2; zero at every extremum of |I|
    e = cmath.exp(2j * k * cavity.l)
    d = 1 + cavity.r * e
    dd = 2j * cavity.l * cavity.r * e
    return 2 * (d.conjugate() * dd).real


def _peak(cavity: MirrorCavity, k_guess: float) -> float:
    fsr = cavity.free_spectral_range
    lo, hi = k_guess - 0.5 * fsr, k_guess + 0.5 * fsr
    grid = np.linspace(lo, hi, 257)
    vals = np.abs(mode_amplitudes(grid, cavity)[0])
    j = int(np.argmax(vals))
    if j == 0 or j == len(grid) - 1:
        raise SearchError(f"no interior maximum of |I(k)| within half a free spectral range of {k_guess}")
    res = optimize.minimize_scalar(
        lambda k: -_abs_I(k, cavity),
        bracket=(grid[j - 1], grid[j], grid[j + 1]),
        method="golden",
        tol=1e-12,
    )
    k0 = float(res.x)
    # a maximum is flat to first order, so the golden search alone stops at
    # ~sqrt(eps); polish on the (linear) zero of the denominator slope
    step = grid[1] - grid[0]
    a, b = k0 - step, k0 + step
    if _denominator_slope(a, cavity) * _denominator_slope(b, cavity) < 0:
        k0 = optimize.brentq(_denominator_slope, a, b, args=(cavity,), xtol=1e-15, rtol=1e-15)
    return k0


def half_max_width(cavity: MirrorCavity, k_c: float) -> float:
    """Full width at half maximum of ``|I(k)|**2`` around the peak ``k_c``."""
    peak2 = _abs_I(k_c, cavity) ** 2
    fsr = cavity.free_spectral_range

    def g(k):
        return _abs_I(k, cavity) ** 2 - 0.5 * peak2

    edges = []
    for sign in (-1, 1):
        far = k_c + sign * 0.5 * fsr
        if g(far) >= 0:
            raise SearchError("|I|^2 never drops to half maximum within the free spectral range")
        edges.append(optimize.brentq(g, *sorted((k_c, far)), xtol=1e-15))
    return edges[1] - edges[0]


def find_quasimode(cavity: MirrorCavity, k_guess: float, samples: int = 601) -> QuasiMode:
    """Locate the quasi-mode near ``k_guess`` and fit its Lorentzian width.

    ``|I(k)|`` is fitted to ``A / |k - k_c + i kappa/2|`` over
    ``|k - k_c| <= 3 kappa`` (least squares in ``A`` and ``kappa`` with
    ``k_c`` fixed at the located peak).  ``fit_residual`` is the relative
    L2 deviation on that window.
    """
    if not cavity.good_cavity:
        raise DomainError(f"|t| = {abs(cavity.t):.3g} is outside the good-cavity regime")
    k_c = _peak(cavity, k_guess)
    fwhm = half_max_width(cavity, k_c)

    kappa = fwhm
    amp = _abs_I(k_c, cavity) * kappa / 2
    for _ in range(3):
        # the window depends on the fitted width; iterate to self-consistency
        k = np.linspace(k_c - 3 * kappa, k_c + 3 * kappa, samples)
        data = np.abs(mode_amplitudes(k, cavity)[0])

        def resid(x, k=k, data=data):
            return x[0] / np.abs(k - k_c + 0.5j * x[1]) - data

        fit = optimize.least_squares(
            resid, [amp, kappa], bounds=([0, 1e-300], [np.inf, np.inf]), x_scale="jac"
        )
        amp, new_kappa = map(float, fit.x)
        converged = abs(new_kappa - kappa) <= 1e-10 * kappa
        kappa = new_kappa
        if converged:
            break
    k = np.linspace(k_c - 3 * kappa, k_c + 3 * kappa, samples)
    data = np.abs(mode_amplitudes(k, cavity)[0])
    model = amp / np.abs(k - k_c + 0.5j * kappa)
    residual = float(np.linalg.norm(model - data) / np.linalg.norm(data))
    return QuasiMode(k_c=k_c, kappa_fit=kappa, fit_residual=residual, amplitude=amp, half_max_width=fwhm)


def peak_positions(cavity: MirrorCavity, k_start: float, count: int):
    """Successive maxima of ``|I(k)|`` starting near ``k_start``."""
    out = [_peak(cavity, k_start)]
    for _ in range(count - 1):
        out.append(_peak(cavity, out[-1] + cavity.free_spectral_range))
    return np.array(out)
