import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from spinsqueeze.dicke import build_dicke_operators, coherent_spin_state_x, rotate_density_z
from spinsqueeze.lindblad import observable_operators
from spinsqueeze.moments import MomentVector
from spinsqueeze.squeezing import (aligned_moments, dissipative_estimate, estimate_from_eta,
                                   fig3b_rows, ideal_optimum, locate_minimum, minimizing_angle,
                                   moments_from_density, short_time_variance,
                                   transverse_second_moment, xi_squared)
from spinsqueeze.waveguide import RegimeWarning


def test_xi_squared_by_hand():
    p = xi_squared(MomentVector(2.0, 0.0, 0.0, 3.0, 1.0, 1.0), 4)
    # A = 4, B = 2, C = 1: v_min = (4 - sqrt(8)) / 2
    assert p.v_min == pytest.approx(2 - math.sqrt(2))
    assert p.xi2 == pytest.approx(2 - math.sqrt(2))
    assert transverse_second_moment(p.alpha_min, 4, 2, 1) == pytest.approx(p.v_min)


def test_variance_mode_subtracts_means():
    m = MomentVector(1.0, 0.5, 0.2, 1.0, 0.6, 0.3)
    raw = xi_squared(m, 2)
    centred = xi_squared(m, 2, variance_mode=True)
    assert centred.a_sum == pytest.approx(1.0 - 0.25 + 0.6 - 0.04)
    assert centred.c_cross == pytest.approx(0.3 - 0.1)
    assert centred.xi2 < raw.xi2


moment_triples = st.tuples(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(-1, 1))


@settings(max_examples=200)
@given(moment_triples)
def test_minimum_over_angles(args):
    y2, z2, r = args
    c = r * math.sqrt(y2 * z2)  # Cauchy-Schwarz keeps the state physical
    p = xi_squared(MomentVector(1.0, 0.0, 0.0, y2, z2, c), 1)
    grid = np.linspace(0, math.pi, 2001)
    brute = np.min(transverse_second_moment(grid, y2 + z2, y2 - z2, c))
    assert p.v_min <= brute + 1e-9 * (y2 + z2)
    assert p.v_min >= brute - 1e-5 * (y2 + z2)
    assert p.v_min <= min(y2, z2) + 1e-12 * (y2 + z2)
    assert 0 <= p.alpha_min < math.pi


def test_degenerate_angle():
    assert minimizing_angle(2.0, 0.0, 0.0) == 0.0


def test_ideal_optimum_reference_values():
    t, xi = ideal_optimum(50, 1.0)
    assert t == pytest.approx(3 ** (1 / 6) * 100 ** (-2 / 3))
    assert xi == pytest.approx(0.0482, abs=1e-4)
    assert ideal_optimum(500, 1.0)[1] == pytest.approx(0.0104, abs=5e-5)
    with pytest.warns(RegimeWarning):
        ideal_optimum(3, 1.0)


@pytest.mark.parametrize("j", [50, 500, 5000])
def test_short_time_variance_minimum_is_closed_form(j):
    lam = 2.0
    res = minimize_scalar(lambda t: short_time_variance(j, lam, t).value,
                          bounds=(1e-6 / lam, 1.0 / lam), method="bounded",
                          options={"xatol": 1e-14})
    t_min, xi_opt = ideal_optimum(j, lam)
    assert res.x == pytest.approx(t_min, rel=1e-5)
    assert 4 * res.fun / (2 * j) == pytest.approx(xi_opt, rel=1e-9)


def test_short_time_flags():
    s = short_time_variance(500, 1.0, 0.05)
    assert s.alpha_ok and not s.beta_ok


def test_dissipative_estimate_reference_values():
    two_pi = 2 * math.pi
    e = dissipative_estimate(500, two_pi * 3.4e6, 1.0, two_pi * 1e6, two_pi * 0.1e6)
    assert e.eta == pytest.approx(3.4)
    assert e.xi2_opt == pytest.approx(2 / math.sqrt(1700))
    assert e.xi2_opt == pytest.approx(0.0485, abs=5e-5)
    assert e.t_min == pytest.approx(1 / (two_pi * 0.1e6 * math.sqrt(1700)))
    assert estimate_from_eta(500, 0.34) == pytest.approx(0.1534, abs=5e-5)


def test_fig3b_rows():
    rows = fig3b_rows([100, 1000, 10000], 3.4)
    assert rows[1][1] == pytest.approx(0.0104, abs=5e-5)
    assert rows[1][2] == pytest.approx(0.0485, abs=5e-5)
    assert rows[0][1] == pytest.approx(0.0482, abs=1e-4)
    assert rows[0][2] == pytest.approx(0.1534, abs=5e-5)
    for col in (1, 2):
        vals = [r[col] for r in rows]
        assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        fig3b_rows([0], 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-math.pi, math.pi), st.floats(0.05, 0.5))
def test_closed_form_realignment_matches_density_rotation(angle, lam_t):
    n = 10
    ops = build_dicke_operators(n)
    psi = coherent_spin_state_x(n).amplitudes * np.exp(1j * lam_t * ops.m**2)
    rho = rotate_density_z(np.outer(psi, psi.conj()), n, angle)
    obs = observable_operators(ops)
    exps = {k: np.trace(op @ rho) for k, op in obs.items()}
    fast = aligned_moments(exps).as_array()
    slow = moments_from_density(rho, ops).as_array()
    np.testing.assert_allclose(fast, slow, atol=1e-10)


def test_locate_minimum():
    t = np.linspace(0, 2.6, 27)
    opt = locate_minimum(t, (t - 1.3) ** 2 + 0.2)
    assert opt.interior and opt.t_opt == pytest.approx(1.3) and opt.xi2_opt == pytest.approx(0.2)
    # off-grid vertex: parabola through (0, 4), (1, 1), (3, 9) has its vertex at 8/7
    opt = locate_minimum([0, 1, 3], [4, 1, 9])
    assert opt.t_opt == pytest.approx(8 / 7)
    assert opt.xi2_opt == pytest.approx(4 - (16 / 3) ** 2 / (4 * 7 / 3))
    edge = locate_minimum([0, 1, 2], [3, 2, 1])
    assert not edge.interior and edge.t_opt == 2
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert locate_minimum([0, 1, 2], [1, 0.5, 1]).t_opt == 1.0
