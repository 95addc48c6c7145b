"""Round-by-round probabilities of the single-photon feedback protocol.

A cavity photon interacts with the atoms; if the emitted photon is
right-polarized the atoms are entangled, otherwise it is re-injected.  The
spectrum left in the ``L`` branch after ``n`` rounds is the lazy product
``C_L**(n-1) * D_L * f_c`` which is only ever evaluated pointwise inside
the quadrature.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, DomainError
from .model import Factor, FactorKind, SpectralFunction, SystemParams
from .quadrature import (
    DEFAULT_TOL,
    MAX_ORACLE_MULTIPLICITY,
    integrate_abs2,
    normalize,
)

log = logging.getLogger(__name__)

#: tolerance used once an integrand is beyond reach of the residue oracle
LARGE_N_TOL = 1e-12
#: allowed gap between the summed and the telescoped cumulative probability
CONSISTENCY_TOL = 1e-7


class RoundKind(enum.Enum):
    """Which coefficient family governs a round."""

    FIRST_ROUND_CAVITY = "D"  # photon prepared inside the cavity
    SCATTERING_ROUND = "C"  # photon injected from outside

    @classmethod
    def for_round(cls, n: int) -> "RoundKind":
        return cls.FIRST_ROUND_CAVITY if n == 1 else cls.SCATTERING_ROUND


def _tol_for(f: SpectralFunction, tol: float) -> float:
    return min(tol, LARGE_N_TOL) if f.pole_count > MAX_ORACLE_MULTIPLICITY else tol


def _integral(f: SpectralFunction, tol: float) -> float:
    return integrate_abs2(f, _tol_for(f, tol)).value


def left_branch(params: SystemParams, rounds: int) -> SpectralFunction:
    """Unnormalized ``C_L**(rounds-1) * D_L * f_c`` (``rounds >= 1``)."""
    if rounds < 1:
        raise DomainError(f"rounds must be >= 1, got {rounds}")
    return SpectralFunction.build(
        params, (FactorKind.C_L, rounds - 1), FactorKind.D_L, FactorKind.CAVITY
    )


def right_branch(params: SystemParams, n: int) -> SpectralFunction:
    """Unnormalized amplitude whose squared norm is the round-``n`` success probability."""
    if n < 1:
        raise DomainError(f"round index must be >= 1, got {n}")
    if n == 1:
        return SpectralFunction.build(params, FactorKind.D_R, FactorKind.CAVITY)
    return SpectralFunction.build(
        params, FactorKind.C_R, (FactorKind.C_L, n - 2), FactorKind.D_L, FactorKind.CAVITY
    )


def first_round_prob(params: SystemParams, tol: float = DEFAULT_TOL):
    """``(p1_R, p1_L)`` for a cavity photon; the two must sum to one."""
    p_r = _integral(right_branch(params, 1), tol)
    p_l = _integral(left_branch(params, 1), tol)
    if abs(p_r + p_l - 1.0) > 1e-8:
        raise ConsistencyError(f"first-round probabilities sum to {p_r + p_l!r}")
    return p_r, p_l


def spectral_after_n(params: SystemParams, n: int, tol: float = DEFAULT_TOL) -> SpectralFunction:
    """Normalized spectrum ``f_n`` of the photon after ``n`` unsuccessful rounds."""
    f = left_branch(params, n)
    return normalize(f, _tol_for(f, tol))


def left_prob(params: SystemParams, n: int, tol: float = DEFAULT_TOL) -> float:
    """Probability that the first ``n`` rounds all returned a left-polarized photon."""
    return _integral(left_branch(params, n), tol)


def round_prob(params: SystemParams, n: int, tol: float = DEFAULT_TOL) -> float:
    """Probability of the first success happening in round ``n >= 2`` (direct integral)."""
    if n < 2:
        raise DomainError(f"round_prob needs n >= 2, got {n}")
    return _integral(right_branch(params, n), tol)


def round_prob_factored(params: SystemParams, n: int, tol: float = DEFAULT_TOL) -> float:
    """Same as :func:`round_prob` via ``p^L_{n-1} * integral |C_R f_{n-1}|**2``."""
    if n < 2:
        raise DomainError(f"round_prob needs n >= 2, got {n}")
    p_left = left_prob(params, n - 1, tol)
    if p_left == 0.0:
        return 0.0
    f_prev = spectral_after_n(params, n - 1, tol)
    scattered = SpectralFunction(
        (Factor(FactorKind.C_R),) + f_prev.factors, params, f_prev.norm, f_prev.prefactor
    )
    return p_left * _integral(scattered, tol)


def success_prob(params: SystemParams, n: int, tol: float = DEFAULT_TOL) -> float:
    """``p^R_n`` for any ``n >= 1``."""
    return _integral(right_branch(params, n), tol)


def cumulative_prob(params: SystemParams, N: int, tol: float = DEFAULT_TOL) -> float:
    """Probability of entanglement within ``N`` rounds.

    Both the sum of per-round probabilities and the telescoped closed form
    ``1 - integral |C_L**(N-1) D_L f_c|**2`` are evaluated; the closed form
    is returned.

    Raises
    ------
    ConsistencyError
        If the two routes differ by more than ``1e-7``.
    """
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    summed = math.fsum(success_prob(params, n, tol) for n in range(1, N + 1))
    closed = 1.0 - left_prob(params, N, tol)
    if abs(summed - closed) > CONSISTENCY_TOL:
        raise ConsistencyError(
            f"summed P_R({N}) = {summed!r} but telescoped form gives {closed!r}"
        )
    return closed


def constant_p_baseline(p: float, N: int) -> float:
    """Success within ``N`` rounds if every round succeeded independently with ``p``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if N < 0:
        raise DomainError(f"N must be >= 0, got {N}")
    return 1.0 - (1.0 - p) ** N


def single_trial_prob(params: SystemParams, kappa_in: float, tol: float = DEFAULT_TOL) -> float:
    """Success probability of one scattering round for a Lorentzian input of width ``kappa_in``.

    An injected photon obeys the scattering condition, so the ``C``
    coefficients apply (not ``D``, even when ``kappa_in == kappa``).
    """
    f = SpectralFunction.build(params, FactorKind.C_R, Factor.input(kappa_in))
    return _integral(f, tol)


# --------------------------------------------------------------------------
# Traces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    n: int
    p_R: float
    p_L_cumulative: float
    P_R_cumulative: float

    @property
    def kind(self) -> RoundKind:
        return RoundKind.for_round(self.n)


@dataclass
class FeedbackTrace:
    """Per-round probability flow of one protocol run.

    ``terminating`` is False when the right-polarized branch is decoupled
    (``lambda_L * lambda_R == 0``): the photon then never succeeds and the
    trace stops after the requested rounds instead of looping.
    """

    params: SystemParams
    rounds: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    terminating: bool = True

    @property
    def p_R(self):
        return np.array([r.p_R for r in self.rounds])

    @property
    def P_R(self):
        return np.array([r.P_R_cumulative for r in self.rounds])

    @property
    def p_L(self):
        return np.array([r.p_L_cumulative for r in self.rounds])

    def telescoping_residual(self) -> np.ndarray:
        """``P^R_N + p^L_N - 1`` per round; zero up to quadrature error."""
        return self.P_R + self.p_L - 1.0


def feedback_trace(
    params: SystemParams,
    rounds: int,
    tol: float = DEFAULT_TOL,
    snapshot_rounds=(),
    snapshot_grid=None,
) -> FeedbackTrace:
    """Run the protocol for ``rounds`` rounds, recording probabilities.

    ``snapshot_rounds`` lists rounds ``n`` whose normalized ``|f_n(k)|**2``
    is sampled on ``snapshot_grid`` (absolute ``k``); round 0 means ``f_c``.
    """
    if rounds < 1:
        raise DomainError(f"rounds must be >= 1, got {rounds}")
    trace = FeedbackTrace(params, terminating=params.lambda_L * params.lambda_R > 0)
    if not trace.terminating:
        log.warning("lambda_L * lambda_R == 0: the protocol can never succeed")

    acc = []
    for n in range(1, rounds + 1):
        p_r = success_prob(params, n, tol)
        acc.append(p_r)
        p_l = left_prob(params, n, tol)
        trace.rounds.append(RoundRecord(n, p_r, p_l, math.fsum(acc)))

    if snapshot_rounds:
        if snapshot_grid is None:
            raise DomainError("snapshot_grid is required with snapshot_rounds")
        k = np.asarray(snapshot_grid, dtype=float)
        for n in snapshot_rounds:
            if n == 0:
                f = SpectralFunction.build(params, FactorKind.CAVITY)
            else:
                f = spectral_after_n(params, n, tol)
            trace.snapshots[n] = f.abs2(k)
    return trace
