import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gflswitch import analysis
from gflswitch.analysis import (
    MULTI,
    VFDC,
    DampingLine,
    EnergyAudit,
    boundary_for,
    check_appendix_properties,
    check_vfdc_expansion,
    damping_line,
    lyapunov_energy,
    sep,
    sep_clc,
    sep_clc_approx,
    sep_cvc,
    stability_boundary,
    switching_energy_audit,
)
from gflswitch.converters import cvc_source, pll_rhs_reference, pll_terms
from gflswitch.phasor import CLC, CVC, NetworkParams, Phasor, derive_params

from conftest import make_context


# --- equilibria ---------------------------------------------------------------


def test_cvc_equilibrium_without_active_current(net):
    ctx = make_context(net, CVC, delta=0.4, mags=[0.0])
    assert sep_cvc(ctx, approx=True) == pytest.approx(0.4, abs=1e-12)
    # the exact root follows the Thevenin source, which sits between the GFMC and the grid
    assert sep_cvc(ctx) == pytest.approx(cmath.phase(cvc_source(ctx)), abs=1e-12)
    assert sep_cvc(make_context(NetworkParams(x_c1=1e-12), CVC, delta=0.4, mags=[0.0])) == pytest.approx(0.4, abs=1e-9)


def test_cvc_equilibrium_table_value(net):
    ctx = make_context(net, CVC, delta=0.0)
    expected = math.asin(derive_params(net).l_v * 0.55)
    assert sep_cvc(ctx) == pytest.approx(expected, abs=1e-12)
    assert sep_cvc(ctx) == pytest.approx(0.04183, abs=1e-5)


def test_approximate_cvc_equilibrium_tracks_delta(net):
    a = sep_cvc(make_context(net, CVC, delta=0.1), approx=True)
    b = sep_cvc(make_context(net, CVC, delta=0.6), approx=True)
    assert b - a == pytest.approx(0.5, abs=1e-12)


def test_clc_equilibrium_examples(net):
    assert sep_clc(make_context(net, CLC, mags=[0.0], i_c1=Phasor(0.0, 0.0))) == pytest.approx(0.0, abs=1e-12)
    target = math.asin(0.479)
    assert sep_clc_approx(net, 0.3, 0.5) == pytest.approx(target, abs=1e-12)
    assert target == pytest.approx(0.4996, abs=1e-4)
    # the exact root agrees when the GFMC current is aligned with that angle
    ctx = make_context(net, CLC, mags=[0.5], i_c1=Phasor(0.3, target))
    assert sep_clc(ctx) == pytest.approx(target, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([CVC, CLC]), st.floats(-0.5, 0.8), st.floats(0.1, 1.0), st.floats(-math.pi / 2, 0))
def test_equilibria_are_roots_of_the_network_pll(mode, delta, i_d, eta_1):
    net = NetworkParams()
    ctx = make_context(net, mode, delta, mags=[i_d], i_c1=Phasor(1.1, delta + eta_1))
    try:
        th = sep(ctx)
    except analysis.NoEquilibriumError:
        return
    _, acc = pll_rhs_reference(ctx, [th], [0.0])
    assert abs(acc[0]) / ctx.k_i[0] < 1e-9
    # stable root: restoring torque on both sides
    assert pll_terms(ctx, 0, [th + 1e-4], [0.0]).accel(0.0) < 0 < pll_terms(ctx, 0, [th - 1e-4], [0.0]).accel(0.0)


# --- energy -----------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([CVC, CLC]), st.integers(1, 3), st.floats(-2.0, 2.0), st.floats(-50.0, 50.0))
def test_closed_form_energy_matches_quadrature(mode, n, offset, varpi):
    net = NetworkParams()
    ctx = make_context(net, mode, 0.2, n=n, i_c1=Phasor(1.1, 0.2 - math.pi / 2))
    thetas = [sep(ctx, j) for j in range(n)]
    th = thetas[0] + offset
    for scale in ("rad2", "area"):
        a = lyapunov_energy(th, varpi, ctx, 0, thetas, scale=scale, method="closed")
        b = lyapunov_energy(th, varpi, ctx, 0, thetas, scale=scale, method="quadrature")
        assert a == pytest.approx(b, rel=1e-8, abs=1e-8)


def test_energy_zero_at_equilibrium_and_even_in_frequency(net):
    ctx = make_context(net, CVC, 0.2)
    th = sep(ctx)
    assert lyapunov_energy(th, 0.0, ctx, 0, [th]) == pytest.approx(0.0, abs=1e-12)
    assert lyapunov_energy(th + 0.3, 7.0, ctx, 0, [th]) == lyapunov_energy(th + 0.3, -7.0, ctx, 0, [th])


def test_energy_scales_differ_by_inertia(net):
    ctx = make_context(net, CVC, 0.2)
    th = sep(ctx)
    t_eq = pll_terms(ctx, 0, [th], [0.0]).t
    v_rad2 = lyapunov_energy(th + 0.5, 3.0, ctx, 0, [th], method="closed")
    v_area = lyapunov_energy(th + 0.5, 3.0, ctx, 0, [th], scale="area", method="closed")
    assert v_area == pytest.approx(t_eq * v_rad2, rel=1e-12)
    with pytest.raises(ValueError):
        lyapunov_energy(th, 0.0, ctx, 0, [th], scale="joules")


# --- damping lines ----------------------------------------------------------


def _line_oracle(ctx, th_s, theta):
    """``sin(theta - psi) - int_{theta_s}^{theta} D / (r*|E|)`` with D from the PLL terms."""
    line = damping_line(ctx)
    e_mag = abs(analysis.source_terms(ctx).e)
    r = ctx.k_p[0] / ctx.k_i[0]
    integral, _ = quad(lambda x: pll_terms(ctx, 0, [x], [0.0]).d, th_s, theta, epsabs=1e-13, epsrel=1e-13)
    return math.sin(theta - line.psi) - integral / (r * e_mag)


def test_cvc_line_regression_value(net):
    line = damping_line(make_context(net, CVC, 0.0))
    # k_i*l_v*i_d/(k_p*U_c1) with both gains carrying the base angular frequency
    g = make_context(net, CVC, 0.0)
    expected = g.k_i[0] * derive_params(net).l_v * 0.55 / (g.k_p[0] * net.omega_b)
    assert line.slope == pytest.approx(expected, rel=1e-9)
    assert line.slope == pytest.approx(0.19016, abs=1e-5)


@pytest.mark.parametrize("delta", [-0.3, 0.0, 0.4])
def test_cvc_line_matches_integrated_damping(net, delta):
    ctx = make_context(net, CVC, delta)
    line = damping_line(ctx)
    for off in (-1.0, -0.2, 0.3, 1.5):
        th = line.theta_s + off
        assert line(th) == pytest.approx(_line_oracle(ctx, line.theta_s, th), abs=1e-9)


def test_clc_line_slope_is_the_local_derivative(net):
    ctx = make_context(net, CLC, 0.3, i_c1=Phasor(1.1, 0.3))
    line = damping_line(ctx)
    h = 1e-5
    fd = (_line_oracle(ctx, line.theta_s, line.theta_s + h) - _line_oracle(ctx, line.theta_s, line.theta_s - h)) / (2 * h)
    assert line.slope == pytest.approx(fd, rel=1e-6)


def test_clc_line_steeper_than_cvc(net):
    cvc = damping_line(make_context(net, CVC, 0.3))
    clc = damping_line(make_context(net, CLC, 0.3, i_c1=Phasor(1.1, 0.3 - math.pi / 2)))
    assert clc.slope > cvc.slope > 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([CVC, CLC]), st.integers(1, 3), st.floats(-3.0, 3.0))
def test_vfdc_line_never_above_plain_line(mode, n, offset):
    net = NetworkParams()
    ctx = make_context(net, mode, 0.2, n=n, i_c1=Phasor(1.1, 0.2))
    plain = damping_line(ctx, 0, None, MULTI)
    pinned = damping_line(ctx, 0, None, VFDC)
    th = plain.theta_s + offset
    assert pinned.slope_at(th) <= plain.slope_at(th) + 1e-15


def test_unknown_variant_rejected(net):
    with pytest.raises(ValueError):
        damping_line(make_context(net), variant="OTHER")


# --- boundaries ---------------------------------------------------------------


def _flat_line(theta_s, slope=0.0):
    return DampingLine(intercept=math.sin(theta_s), slope=slope, theta_s=theta_s, mode=CLC)


def _equal_area(theta_s):
    return lambda th: (math.cos(theta_s) - math.cos(th)) - math.sin(theta_s) * (th - theta_s)


def test_flat_line_boundary_is_sine_symmetric():
    ts = math.pi / 6
    b = stability_boundary(_flat_line(ts), _equal_area(ts))
    assert b.theta_max == pytest.approx(5 * math.pi / 6, abs=1e-9)
    exact, _ = quad(lambda x: math.sin(x) - math.sin(ts), ts, math.pi - ts)
    assert b.v_max == pytest.approx(exact, abs=1e-10)


def test_boundary_angles_are_line_crossings(net):
    line, b = boundary_for(make_context(net, CVC, 0.3))
    for th in (b.theta_min, b.theta_max):
        assert abs(line.margin(th)) < 1e-9
    assert b.theta_min < line.theta_s < b.theta_max


def test_critical_energy_falls_with_slope_and_intercept():
    slopes = np.linspace(0.0, 0.9, 10)
    ts = 0.3
    v = [stability_boundary(_flat_line(ts, k), _equal_area(ts)).v_max for k in slopes]
    assert np.all(np.diff(v) <= 1e-12)
    thetas = np.linspace(0.05, 1.2, 10)
    v = [stability_boundary(_flat_line(t), _equal_area(t)).v_max for t in thetas]
    assert np.all(np.diff(v) <= 1e-12)


def test_steep_line_collapses_the_region(net):
    line = _flat_line(0.3, slope=5.0)
    b = stability_boundary(line, _equal_area(0.3))
    assert b.collapsed and b.v_max == 0.0 and b.theta_max == b.theta_min == 0.3


def test_cvc_critical_energy_independent_of_gfmc_angle():
    # with a stiff GFMC the CVC source is U_c1∠delta and everything rotates with delta
    stiff = NetworkParams(x_c1=1e-12)
    v = [boundary_for(make_context(stiff, CVC, d))[1].v_max for d in (-0.4, 0.0, 0.25, 0.9)]
    assert np.ptp(v) < 1e-9 * max(v)


def test_clc_weaker_than_cvc_at_table_parameters(net):
    _, b_v = boundary_for(make_context(net, CVC, 0.3))
    _, b_l = boundary_for(make_context(net, CLC, 0.3, i_c1=Phasor(1.1, 0.3)))
    assert b_l.theta_max < b_v.theta_max
    assert b_l.v_max < b_v.v_max


# --- randomized property suites --------------------------------------------


def test_appendix_properties_small_run():
    rep = check_appendix_properties(150, seed=11)
    assert rep.ok, rep.examples
    assert rep.solvable > 20 and rep.switching_checks > 20 and rep.sigma_checks > 20


def test_vfdc_expansion_small_run():
    rep = check_vfdc_expansion(150, seed=5)
    assert rep.violations == 0, rep.examples
    assert rep.feasible > 100


def test_audit_of_a_run_without_switching():
    class NoSwitching:
        events = []
        trace = None

    audit = switching_energy_audit(NoSwitching())
    assert isinstance(audit, EnergyAudit) and audit.empty and audit.violations() == []
