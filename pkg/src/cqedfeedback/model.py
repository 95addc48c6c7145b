"""Closed-form spectral quantities of two Lambda-atoms in a one-sided leaky cavity.

Every evaluator takes the *absolute* wavenumber ``k`` and subtracts the
quasi-mode frequency ``k_c`` internally.  Units are ``hbar = c = 1``.

Complex amplitudes are plain Python ``complex`` (scalars) or ``complex128``
numpy arrays (array input); no wrapper type is used.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .errors import DomainError, ParameterRangeError, PoleProximityError

SQRT2 = math.sqrt(2.0)

#: Relative distance to a pole below which evaluation is refused.
POLE_GUARD = 1e-14


@dataclass(frozen=True)
class SystemParams:
    """Cavity and atom parameters.

    Parameters
    ----------
    kappa : float
        Cavity leakage rate (full width of the quasi-mode).
    k_c : float
        Quasi-mode frequency.
    delta_e : float
        Detuning ``omega_e - k_c`` of the atomic transition.
    lambda_L, lambda_R : float
        Coupling strengths of the left- and right-polarized transitions.
    """

    kappa: float = 1.0
    k_c: float = 0.0
    delta_e: float = 0.0
    lambda_L: float = 0.0
    lambda_R: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "k_c", "delta_e", "lambda_L", "lambda_R"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ParameterRangeError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ParameterRangeError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.kappa <= 0:
            raise ParameterRangeError(f"kappa must be positive, got {self.kappa}")
        if self.lambda_L < 0 or self.lambda_R < 0:
            raise ParameterRangeError("coupling strengths must be non-negative")

    @classmethod
    def optimal(cls, lambda_L: float, kappa: float = 1.0, k_c: float = 0.0) -> "SystemParams":
        """Resonant parameters satisfying the optimal ratio ``lambda_R = sqrt(2) lambda_L``."""
        return cls(kappa=kappa, k_c=k_c, delta_e=0.0, lambda_L=lambda_L, lambda_R=SQRT2 * lambda_L)

    @property
    def omega_e(self) -> float:
        return self.k_c + self.delta_e

    @property
    def coupling_sq(self) -> float:
        """Collective squared coupling ``2 lambda_L**2 + lambda_R**2``."""
        # products overflow to inf rather than raising like ** does
        return 2.0 * self.lambda_L * self.lambda_L + self.lambda_R * self.lambda_R

    @property
    def pole_guard(self) -> float:
        return POLE_GUARD * max(self.kappa, self.lambda_L, self.lambda_R, 1.0)

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "k_c": self.k_c,
            "delta_e": self.delta_e,
            "lambda_L": self.lambda_L,
            "lambda_R": self.lambda_R,
        }


@dataclass(frozen=True)
class RabiPoles:
    """The complex pole pair shared by all transfer coefficients."""

    omega_plus: complex
    omega_minus: complex

    def __iter__(self):
        return iter((self.omega_plus, self.omega_minus))


def rabi_poles(params: SystemParams) -> RabiPoles:
    """Complex Rabi frequencies.

    ``omega_pm = (delta_e - i kappa/2)/2 +- sqrt(((delta_e + i kappa/2)/2)**2 + 2 lambda_L**2 + lambda_R**2)``

    The principal branch of the square root is used and its ``+`` root is
    labelled ``omega_plus``.  Downstream formulas only depend on the
    unordered pair.
    """
    g2 = params.coupling_sq
    if g2 == 0.0:
        # exact roots; same labelling as the principal branch
        pair = (complex(params.delta_e), complex(0.0, -0.5 * params.kappa))
        return RabiPoles(*(pair if params.delta_e >= 0 else pair[::-1]))
    try:
        center = complex(params.delta_e, -0.5 * params.kappa) / 2
        root = cmath.sqrt((complex(params.delta_e, 0.5 * params.kappa) / 2) ** 2 + g2)
        # the root of smaller modulus suffers cancellation in center +- root;
        # recover it from the product instead (stable quadratic formula)
        product = complex(-g2, -0.5 * params.delta_e * params.kappa)
        if (center.conjugate() * root).real >= 0:
            wp = center + root
            wm = product / wp if wp != 0 else center - root
        else:
            wm = center - root
            wp = product / wm if wm != 0 else center + root
    except OverflowError as exc:
        raise ParameterRangeError("Rabi frequencies overflowed; parameters out of range") from exc
    if not all(math.isfinite(v) for v in (wp.real, wp.imag, wm.real, wm.imag)):
        raise ParameterRangeError("Rabi frequencies overflowed; parameters out of range")
    # Both poles must sit in the closed lower half plane (causal response).
    slack = 1e-12 * max(abs(wp), abs(wm), params.kappa)
    if wp.imag > slack or wm.imag > slack:
        raise ParameterRangeError(f"Rabi pole in the upper half plane: {wp}, {wm}")
    return RabiPoles(wp, wm)


def _offset(k, params: SystemParams):
    scalar = np.ndim(k) == 0
    dk = np.asarray(k, dtype=float) - params.k_c
    return dk, scalar


def _out(z, scalar):
    return complex(z) if scalar else z


def _check_poles(dk, poles: Iterable[complex], guard: float):
    for p in poles:
        if np.any(np.abs(dk - p) < guard):
            raise PoleProximityError(f"evaluation within {guard:g} of pole {p}")


def coupling_g(k, mu: str, params: SystemParams):
    """Frequency-dependent dipole coupling ``sqrt(kappa/2pi) lambda_mu / (k - k_c + i kappa/2)``."""
    if mu not in ("L", "R"):
        raise DomainError(f"polarization must be 'L' or 'R', got {mu!r}")
    lam = params.lambda_L if mu == "L" else params.lambda_R
    dk, scalar = _offset(k, params)
    g = math.sqrt(params.kappa / (2 * math.pi)) * lam / (dk + 0.5j * params.kappa)
    return _out(g, scalar)


def lorentzian(k, width: float, params: SystemParams):
    """Unit-norm complex Lorentzian of full width ``width`` centred on ``k_c``."""
    dk, scalar = _offset(k, params)
    return _out(math.sqrt(width / (2 * math.pi)) / (dk + 0.5j * width), scalar)


def cavity_spectrum(k, params: SystemParams):
    """Spectral function ``f_c`` of a photon prepared in the quasi-mode."""
    return lorentzian(k, params.kappa, params)


def input_spectrum(k, kappa_in: float, params: SystemParams):
    """Lorentzian input photon of arbitrary width ``kappa_in``."""
    if not (kappa_in > 0 and math.isfinite(kappa_in)):
        raise DomainError(f"kappa_in must be positive and finite, got {kappa_in!r}")
    return lorentzian(k, kappa_in, params)


def transfer_D(k, params: SystemParams):
    """Output amplitudes ``(D_L, D_R)`` for a cavity photon in the first round."""
    dk, scalar = _offset(k, params)
    if params.coupling_sq == 0.0:
        ones = np.ones_like(dk, dtype=complex)
        return _out(ones, scalar), _out(0 * ones, scalar)
    wp, wm = rabi_poles(params)
    _check_poles(dk, (wp, wm), params.pole_guard)
    den = (dk - wp) * (dk - wm)
    d_l = ((dk - params.delta_e) * (dk + 0.5j * params.kappa) - params.lambda_R**2) / den
    d_r = SQRT2 * params.lambda_L * params.lambda_R / den
    return _out(d_l, scalar), _out(d_r, scalar)


def transfer_C(k, params: SystemParams):
    """Scattering amplitudes ``(C_L, C_R)`` for a photon injected from outside.

    They obey ``|C_L|**2 + |C_R|**2 == 1`` pointwise.
    """
    dk, scalar = _offset(k, params)
    if params.coupling_sq == 0.0:
        ones = np.ones_like(dk, dtype=complex)
        return _out(ones, scalar), _out(0 * ones, scalar)
    wp, wm = rabi_poles(params)
    _check_poles(dk, (wp, wm, 0.5j * params.kappa), params.pole_guard)
    kap, lL2, lR2 = params.kappa, params.lambda_L**2, params.lambda_R**2
    den = (dk - 0.5j * kap) * (dk - wp) * (dk - wm)
    num_l = (
        (dk - params.delta_e) * (dk * dk + 0.25 * kap * kap)
        - dk * (lR2 + 2 * lL2)
        + 0.5j * kap * (lR2 - 2 * lL2)
    )
    c_l = num_l / den
    c_r = SQRT2 * 1j * kap * params.lambda_L * params.lambda_R / den
    return _out(c_l, scalar), _out(c_r, scalar)


# --------------------------------------------------------------------------
# Lazy products of closed-form factors
# --------------------------------------------------------------------------


class FactorKind(enum.IntEnum):
    """Closed-form building blocks of a spectral function.

    The integer values are the codes understood by the compiled kernels.
    """

    CAVITY = 0
    INPUT = 1
    D_L = 2
    D_R = 3
    C_L = 4
    C_R = 5


_POLES_PER_FACTOR = {
    FactorKind.CAVITY: 1,
    FactorKind.INPUT: 1,
    FactorKind.D_L: 2,
    FactorKind.D_R: 2,
    FactorKind.C_L: 3,
    FactorKind.C_R: 3,
}


@dataclass(frozen=True)
class Factor:
    kind: FactorKind
    power: int = 1
    width: float = 0.0  # INPUT only

    def __post_init__(self):
        object.__setattr__(self, "kind", FactorKind(self.kind))
        if int(self.power) != self.power or self.power < 0:
            raise DomainError(f"factor power must be a non-negative integer, got {self.power}")
        object.__setattr__(self, "power", int(self.power))
        if self.kind is FactorKind.INPUT and not (self.width > 0 and math.isfinite(self.width)):
            raise DomainError(f"kappa_in must be positive and finite, got {self.width!r}")

    @classmethod
    def cavity(cls):
        return cls(FactorKind.CAVITY)

    @classmethod
    def input(cls, kappa_in: float):
        return cls(FactorKind.INPUT, 1, float(kappa_in))


def _kernel_consts(params: SystemParams) -> np.ndarray:
    if params.coupling_sq == 0.0:
        wp = wm = 0j  # unused by the kernels in the decoupled case
    else:
        wp, wm = rabi_poles(params)
    return np.array(
        [
            params.kappa,
            params.delta_e,
            params.lambda_L,
            params.lambda_R,
            wp.real,
            wp.imag,
            wm.real,
            wm.imag,
            params.pole_guard,
        ]
    )


@dataclass(frozen=True)
class SpectralFunction:
    """Single-photon amplitude ``prefactor * prod(factors) / norm`` over real ``k``.

    ``norm`` is the divisor applied by :func:`cqedfeedback.quadrature.normalize`;
    a freshly built function has ``norm == 1`` and is not necessarily
    normalized.
    """

    factors: tuple
    params: SystemParams
    norm: float = 1.0
    prefactor: complex = 1.0
    _encoded: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        facs = tuple(f if isinstance(f, Factor) else Factor(*f) for f in self.factors)
        object.__setattr__(self, "factors", facs)
        if not (self.norm > 0 and math.isfinite(self.norm)):
            raise DomainError(f"norm must be positive and finite, got {self.norm!r}")
        object.__setattr__(self, "prefactor", complex(self.prefactor))
        codes = np.array([f.kind for f in facs], dtype=np.int64)
        powers = np.array([f.power for f in facs], dtype=np.int64)
        widths = np.array([f.width for f in facs], dtype=float)
        object.__setattr__(self, "_encoded", (codes, powers, widths, _kernel_consts(self.params)))

    @classmethod
    def build(cls, params: SystemParams, *factors: Factor | FactorKind | tuple) -> "SpectralFunction":
        facs = []
        for f in factors:
            if isinstance(f, FactorKind):
                f = Factor(f)
            elif isinstance(f, tuple):
                f = Factor(*f)
            facs.append(f)
        return cls(tuple(facs), params)

    def scaled(self, c: complex) -> "SpectralFunction":
        return replace(self, prefactor=self.prefactor * c)

    @property
    def scale(self) -> complex:
        """Overall constant multiplying the factor product."""
        return self.prefactor / self.norm

    @property
    def is_zero(self) -> bool:
        """True when the function vanishes identically."""
        if self.prefactor == 0:
            return True
        p = self.params
        for f in self.factors:
            if f.power == 0:
                continue
            if f.kind in (FactorKind.D_R, FactorKind.C_R) and p.lambda_L * p.lambda_R == 0:
                return True
        return False

    @property
    def pole_count(self) -> int:
        """Total pole multiplicity of the factor product (before merging)."""
        return sum(f.power * _POLES_PER_FACTOR[f.kind] for f in self.factors)

    def widths(self) -> list:
        """Characteristic widths present in the product (for panel seeding)."""
        out = [self.params.kappa]
        out += [f.width for f in self.factors if f.kind is FactorKind.INPUT]
        return out

    def map_scale(self) -> float:
        """Length scale of the tangent map: wide enough to hold the Rabi sidebands."""
        s = self.params.kappa
        if self.params.coupling_sq > 0:
            s = max(s, *(abs(w) for w in rabi_poles(self.params)))
        return s

    def breakpoints(self) -> np.ndarray:
        """Offsets ``Delta k`` where sharp features may occur.

        The origin, the half widths of every Lorentzian and the real parts of
        the Rabi poles (each widened by the pole's imaginary part).
        """
        pts = [0.0, self.params.delta_e]
        for w in self.widths():
            pts += [0.5 * w, -0.5 * w]
        if self.params.coupling_sq > 0:
            for w in rabi_poles(self.params):
                pts += [w.real, -w.real, w.real + w.imag, w.real - w.imag]
        return np.unique(np.array(pts, dtype=float))

    def offset_values(self, dk) -> np.ndarray:
        """Evaluate at offsets ``Delta k = k - k_c`` (array in, complex array out)."""
        dk = np.ascontiguousarray(np.atleast_1d(np.asarray(dk, dtype=float)))
        codes, powers, widths, consts = self._encoded
        vals = _backend.kernels.eval_product(dk, codes, powers, widths, consts)
        return vals * self.scale

    def __call__(self, k):
        scalar = np.ndim(k) == 0
        vals = self.offset_values(np.asarray(k, dtype=float) - self.params.k_c)
        return complex(vals[0]) if scalar else vals.reshape(np.shape(k))

    def abs2(self, k):
        v = self(k)
        return abs(v) ** 2 if np.ndim(v) == 0 else np.abs(v) ** 2


def spectral_product(params: SystemParams, kinds: Sequence) -> SpectralFunction:
    """Convenience wrapper: ``spectral_product(p, [FactorKind.D_L, FactorKind.CAVITY])``."""
    return SpectralFunction.build(params, *kinds)
