"""Normal modes of the leaky cavity and the quasi-mode fit."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cqedfeedback import DomainError, SearchError
from cqedfeedback.modes import (
    MirrorCavity,
    find_quasimode,
    half_max_width,
    mode_amplitudes,
    peak_positions,
)


def test_cavity_validation():
    with pytest.raises(DomainError):
        MirrorCavity(1.0, 0.1)
    with pytest.raises(DomainError):
        MirrorCavity(0.5, 0.0)
    with pytest.raises(DomainError):
        MirrorCavity(0.5, 0.5, l=0.0)


def test_lossless_helper():
    c = MirrorCavity.lossless(0.99)
    assert abs(c.r) ** 2 + abs(c.t) ** 2 == pytest.approx(1.0, abs=1e-15)
    assert c.good_cavity
    assert not MirrorCavity.lossless(0.5).good_cavity
    assert MirrorCavity.lossless(0.5, l=2.0).free_spectral_range == pytest.approx(math.pi / 2)


def test_no_feedback_mirror():
    c = MirrorCavity(0.0, 0.3 + 0.1j)
    k = np.linspace(0, 5, 17)
    i_amp, r_amp = mode_amplitudes(k, c)
    assert np.allclose(i_amp, -2j * c.t)
    assert np.allclose(r_amp, -c.t)


def test_peak_value_at_antiresonance():
    c = MirrorCavity.lossless(0.9)
    i_amp, _ = mode_amplitudes(math.pi / 2, c)  # e^{2ik} = -1
    assert abs(i_amp) == pytest.approx(2 * abs(c.t) / (1 - 0.9), rel=1e-13)


@given(st.floats(0.0, 0.999), st.floats(0.2, 3.0), st.floats(-10, 10), st.integers(-3, 3))
def test_periodicity(r, l, k, shift):
    c = MirrorCavity.lossless(r, l)
    a = mode_amplitudes(k, c)[0]
    b = mode_amplitudes(k + shift * math.pi / l, c)[0]
    assert abs(abs(a) - abs(b)) <= 1e-9 * max(1.0, abs(a))


def test_quasimode_r099():
    qm = find_quasimode(MirrorCavity.lossless(0.99), 1.5)
    assert qm.k_c == pytest.approx(math.pi / 2, abs=1e-10)
    assert qm.kappa_fit > 0 and qm.fit_residual >= 0
    assert qm.fit_residual < 0.02
    assert abs(qm.kappa_fit - qm.half_max_width) / qm.half_max_width < 0.05


def test_better_mirror_narrower_and_more_lorentzian():
    a = find_quasimode(MirrorCavity.lossless(0.99), 1.5)
    b = find_quasimode(MirrorCavity.lossless(0.999), 1.5)
    assert b.kappa_fit < a.kappa_fit
    assert b.fit_residual < a.fit_residual


def test_complex_mirror_phase_shifts_peak():
    # a reflection phase moves the resonance away from pi/2
    c = MirrorCavity(0.98 * np.exp(0.4j), 0.1j)
    qm = find_quasimode(c, 1.4)
    assert qm.k_c == pytest.approx((math.pi - 0.4) / 2, abs=1e-9)


def test_bad_cavity_rejected():
    with pytest.raises(DomainError):
        find_quasimode(MirrorCavity.lossless(0.5), 1.5)


def test_flat_response_has_no_peak():
    with pytest.raises(SearchError):
        half_max_width(MirrorCavity(0.0, 0.1), 1.0)


def test_peak_spacing():
    c = MirrorCavity.lossless(0.99, l=1.3)
    peaks = peak_positions(c, 1.2, 5)
    assert np.allclose(np.diff(peaks), c.free_spectral_range, rtol=1e-9, atol=0)
