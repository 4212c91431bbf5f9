import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinsqueeze.constants import HBAR, K_B, STRAIN_D
from spinsqueeze.waveguide import (GeometryWarning, RegimeWarning, WaveguideSpec,
                                   compression_mode_spectrum, coupling_to_decay, guide_coupling,
                                   lame_constants, make_budget, single_spin_coupling,
                                   thermal_occupation, zeta_from_profile, zeta_profile,
                                   zero_point_amplitude)

TWO_PI = 2 * math.pi
GUIDE = WaveguideSpec(20e-6, 0.1e-6, 0.1e-6)


def test_lame_constants_for_diamond():
    lam, mu = lame_constants(1050e9, 0.2)
    assert lam == pytest.approx(0.2 * 1050e9 / (1.2 * 0.6))
    assert lam / 1e9 == pytest.approx(291.67, abs=0.01)
    assert mu / 1e9 == pytest.approx(437.5)


def test_lame_limits():
    assert lame_constants(1.0, 0.0) == (0.0, 0.5)
    with pytest.raises(ValueError):
        lame_constants(1.0, 0.5)


def test_longitudinal_velocity_and_mode_spacing():
    v = GUIDE.longitudinal_velocity
    assert v == pytest.approx(17320.5, rel=1e-4)
    assert v == pytest.approx(1.7e4, rel=0.02)
    spec = compression_mode_spectrum(GUIDE, 4)
    # fundamental spacing pi v / l is v / (2 l) in Hz
    assert spec.spacing / TWO_PI == pytest.approx(v / (2 * 20e-6))
    assert spec.spacing / TWO_PI == pytest.approx(433e6, rel=2e-3)
    assert spec.well_separated
    for n, m in enumerate(spec, start=1):
        assert m.omega == pytest.approx(n * spec[0].omega)


def test_doubling_length_halves_frequencies():
    a = compression_mode_spectrum(GUIDE, 3)
    b = compression_mode_spectrum(WaveguideSpec(40e-6, 0.1e-6, 0.1e-6), 3)
    for ma, mb in zip(a, b):
        assert mb.omega == pytest.approx(ma.omega / 2, rel=1e-15)


def test_short_guide_warns():
    with pytest.warns(GeometryWarning):
        WaveguideSpec(1e-6, 0.5e-6, 0.1e-6)


def test_zero_point_amplitude():
    q0 = zero_point_amplitude(TWO_PI * 46e9, 7e-16)
    assert q0 == pytest.approx(math.sqrt(HBAR / (2 * 7e-16 * TWO_PI * 46e9)))
    assert q0 == pytest.approx(5.1e-16, rel=0.01)


def test_single_spin_coupling_reference_value():
    g = guide_coupling(GUIDE, TWO_PI * 46e9, STRAIN_D)
    oracle = STRAIN_D / math.sqrt(1050e9 / 3500) * math.sqrt(
        HBAR * TWO_PI * 46e9 / (2 * 3500 * 20e-6 * 0.1e-6 * 0.1e-6))
    assert g == pytest.approx(oracle, rel=1e-12)
    assert g / TWO_PI == pytest.approx(8.5e6, rel=0.01)
    # within the factor-3 window of the quoted 3.4 MHz
    assert 1 / 3 < g / TWO_PI / 3.4e6 < 3


def test_coupling_scales_with_volume():
    g1 = single_spin_coupling(1.0, 2.0, 3.0, 4.0, 5.0)
    assert single_spin_coupling(1.0, 2.0, 3.0, 4.0, 20.0) == pytest.approx(g1 / 2)


def test_zeta_on_axis_and_direction():
    mode = compression_mode_spectrum(GUIDE, 1)[0]
    z = zeta_profile(GUIDE, mode, (5e-6, 0.0, 0.0))
    assert abs(abs(z) - 1) < 1e-12
    zr = zeta_profile(GUIDE, mode, (5e-6, 0.0, 0.0), direction=-1)
    assert zr == pytest.approx(z.conjugate())
    with pytest.raises(ValueError):
        zeta_profile(GUIDE, mode, (30e-6, 0, 0))


def test_zeta_finite_at_zero_wavevector():
    assert abs(zeta_from_profile(0.0, (1.0, 0.0, 0.0), {})) == pytest.approx(1.0)


@given(st.floats(1e-3, 1e3))
def test_zeta_conjugates_under_k_flip(k):
    u = (0.7, 0.0, 0.0)
    assert zeta_from_profile(-k, u, {}) == pytest.approx(zeta_from_profile(k, u, {}).conjugate())


def test_thermal_occupation_values():
    w = TWO_PI * 46e9
    assert thermal_occupation(w, 0.0) == 0.0
    assert thermal_occupation(w, 0.1) == pytest.approx(2.6e-10, rel=0.01)
    assert thermal_occupation(w, 0.1) < 1e-9
    assert thermal_occupation(w, 4.0) == pytest.approx(1.0 / math.expm1(HBAR * w / (K_B * 4)))
    assert thermal_occupation(w, 4.0) == pytest.approx(1.36, abs=0.01)


@given(st.floats(1e-3, 100), st.floats(1e-3, 100), st.floats(1e8, 1e12))
def test_thermal_occupation_monotone(t1, t2, w):
    lo, hi = sorted((t1, t2))
    assert thermal_occupation(w, lo) <= thermal_occupation(w, hi)
    assert thermal_occupation(2 * w, hi) <= thermal_occupation(w, hi)


def test_budget_reference_numbers():
    g = TWO_PI * 3.4e6
    b = make_budget(g, 1000, 10.0, TWO_PI * 1e6, TWO_PI * 0.1e6, TWO_PI * 46e9, 0.1, n_th=1.0)
    assert b.g_collective / TWO_PI == pytest.approx(107.5e6, rel=1e-3)
    assert b.g_collective / TWO_PI == pytest.approx(100e6, rel=0.1)
    assert b.lambda_twist / TWO_PI == pytest.approx(10e6, rel=0.1)
    assert b.big_gamma_m / TWO_PI == pytest.approx(10e3, rel=1e-9)
    assert b.eta == pytest.approx(3.4)
    b10 = make_budget(g, 1000, 10.0, TWO_PI * 1e6, TWO_PI * 0.1e6, TWO_PI * 46e9, 0.1, n_th=10.0)
    assert b10.eta == pytest.approx(0.34)


@given(st.integers(1, 10**5), st.floats(1.5, 100), st.floats(1e5, 1e8))
def test_budget_identities(n, ratio, g):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        b = make_budget(g, n, ratio, 1e6, 1e5, 1e11, 0.0)
    assert b.g_collective == pytest.approx(math.sqrt(n) * g, rel=1e-12)
    assert b.lambda_twist == pytest.approx(b.g_collective**2 / b.detuning, rel=1e-12)
    assert b.big_gamma_m == pytest.approx(1e6 * b.g_collective**2 / b.detuning**2, rel=1e-12)
    assert b.detuning_ratio == pytest.approx(ratio, rel=1e-12)


def test_budget_regime_checks():
    with pytest.raises(ValueError):
        make_budget(1.0, 10, 1.0, 0, 0, 1.0, 0)
    with pytest.warns(RegimeWarning):
        make_budget(1.0, 10, 3.0, 0, 0, 1.0, 0)
    b = make_budget(1.0, 10, 10.0, 0.0, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        b.eta
    with pytest.raises(ValueError):
        coupling_to_decay(1.0, 0.0, 1.0, 0.0)
