import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsqueeze.moments import (COLUMNS, MomentParams, MomentVector, evolve_moments,
                                 initial_moments, regime_parameters, rhs)
from spinsqueeze.squeezing import trace_from_moments


def test_initial_moments_are_coherent_state():
    m = initial_moments(500)
    assert m == MomentVector(500, 0.0, 0.0, 250, 250, 0.0)


def test_rhs_at_coherent_state_by_hand():
    j, lam, gs, gm, n = 5.0, 1.0, 0.1, 0.01, 1.0
    d = rhs(initial_moments(j).as_array(), MomentParams(j, lam, gs, gm, n))
    a = n + 0.5
    jj1 = j * (j + 1)
    expected = [
        -gs * j,
        0.0,
        -gm * (jj1 - j / 2),
        0.0,
        -2 * gm * a * (3 * j / 2 - jj1),
        lam * j * j / 2,
    ]
    np.testing.assert_allclose(d, expected, rtol=1e-14, atol=1e-15)


def test_pure_twisting_is_polynomial():
    # without rates: jyz = lambda J^2 t / 2 and jy2 = J/2 + lambda^2 J^3 t^2 / 2
    j, lam = 50.0, 0.3
    t = np.linspace(0, 0.2, 21)
    traj = evolve_moments(MomentParams(j, lam), t, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(traj.column("jyz"), lam * j * j * t / 2, rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(traj.column("jy2"), j / 2 + lam**2 * j**3 * t**2 / 2, rtol=1e-9)
    np.testing.assert_allclose(traj.column("jz2"), j / 2, rtol=1e-12)


def test_dephasing_only():
    j, gs = 20.0, 0.4
    t = np.linspace(0, 3, 13)
    traj = evolve_moments(MomentParams(j, 0.0, gamma_s=gs), t, rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(traj.column("jx"), j * np.exp(-gs * t), rtol=1e-9)
    np.testing.assert_allclose(traj.column("jy2"), j / 2, rtol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 400), st.floats(0, 0.05), st.floats(0, 0.01), st.floats(0, 5))
def test_trajectory_shape_and_finiteness(two_j, gs, gm, n_th):
    p = MomentParams(two_j / 2, 1.0, gs, gm, n_th)
    traj = evolve_moments(p, np.linspace(0, 0.05, 11))
    assert traj.values.shape == (11, len(COLUMNS))
    assert np.isfinite(traj.values).all()
    assert traj[0] == initial_moments(two_j / 2)


def test_regime_warning_when_beta_large():
    traj = evolve_moments(MomentParams(500, 1.0), np.linspace(0, 0.05, 5))
    assert any("beta" in w for w in traj.warnings)
    quiet = evolve_moments(MomentParams(500, 1.0), np.linspace(0, 0.01, 5))
    assert not any("beta" in w for w in quiet.warnings)


def test_regime_parameters():
    alpha, beta = regime_parameters(10.0, 2.0, 0.1)
    assert alpha == pytest.approx(2.0) and beta == pytest.approx(0.4)


def test_invalid_params():
    with pytest.raises(ValueError):
        MomentParams(0.3, 1.0)
    with pytest.raises(ValueError):
        MomentParams(5, 1.0, gamma_s=-1)
    with pytest.raises(ValueError):
        MomentParams(5, float("inf"))
    with pytest.raises(ValueError):
        evolve_moments(MomentParams(5, 1.0), [0.0, 0.0])


def test_halving_tolerances_leaves_optimum_unchanged():
    times = np.linspace(0, 0.05, 2001)
    p = MomentParams(500.0, 1.0, 0.01, 0.001, 1.0)
    coarse = trace_from_moments(evolve_moments(p, times), 1000).refined.xi2_opt
    fine = trace_from_moments(evolve_moments(p, times, rtol=5e-9, atol=5e-11), 1000).refined.xi2_opt
    assert abs(coarse - fine) < 1e-6
