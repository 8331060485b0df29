import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gflswitch.analysis import sep_cvc
from gflswitch.phasor import (
    CLC,
    CVC,
    InvalidParameterError,
    NetworkParams,
    Phasor,
    derive_params,
    gfmc_power,
    project_to_frame,
    solve_clc,
    solve_cvc,
    terminal_power,
    wrap_angle,
)

from conftest import make_context

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
mags = st.floats(0.0, 1.5, allow_nan=False)
phasors = st.builds(Phasor, mags, angles)


def test_phasor_arithmetic_matches_rectangular():
    a, b = Phasor(0.7, 0.4), Phasor(1.3, -2.1)
    assert abs((a + b).z - (cmath.rect(0.7, 0.4) + cmath.rect(1.3, -2.1))) < 1e-12
    assert abs(a.rotated(1.0).z - a.z * cmath.exp(1j)) < 1e-12
    assert abs(a.scaled(-2.0).z + 2.0 * a.z) < 1e-12


def test_angles_are_not_wrapped_unless_asked():
    p = Phasor(1.0, 7.0)
    assert p.angle == 7.0
    assert p.wrapped().angle == pytest.approx(7.0 - 2 * math.pi)
    assert wrap_angle(-math.pi) == math.pi


def test_negative_magnitude_rejected():
    with pytest.raises(InvalidParameterError):
        Phasor(-0.1, 0.0)


def test_derived_constants_table_values(net):
    d = derive_params(net)
    assert d.alpha == pytest.approx(0.92063, abs=5e-6)
    assert d.l_v == pytest.approx(0.07603, abs=5e-6)
    assert d.beta_1 == pytest.approx(0.63, abs=1e-12)
    assert d.gamma == pytest.approx(0.58, abs=1e-12)
    assert d.y_1g == pytest.approx(1.58730, abs=5e-6)


@given(st.floats(0.01, 0.2), st.floats(0.01, 0.2), st.floats(1.0, 3.0))
def test_derived_relations_hold(x_c1, x_c2, ratio):
    net = NetworkParams(x_c1=x_c1, x_c2=x_c2, x_g=x_c1 * ratio * 5.0)
    d = derive_params(net)
    assert 0 < d.alpha < 1
    assert abs(d.alpha - net.x_g / (net.x_c1 + net.x_g)) < 1e-12
    assert abs(d.l_v - (x_c2 + (1 - d.alpha) * net.x_g)) < 1e-12
    assert abs(d.beta_1 - (net.x_g + net.x_c1)) < 1e-12
    assert abs(d.y_1g - 1 / (net.x_c1 + net.x_g)) < 1e-12


def test_alpha_limits():
    with pytest.warns(UserWarning):
        equal = NetworkParams(x_c1=0.3, x_g=0.3)
    d = derive_params(equal)
    assert d.alpha == 0.5
    assert d.l_v == pytest.approx(equal.x_c2 + 0.15, abs=1e-12)
    assert derive_params(NetworkParams(x_g=1e6)).alpha == pytest.approx(1.0, abs=1e-6)


def test_weak_gfmc_coupling_only_warns():
    with pytest.warns(UserWarning, match="not small"):
        NetworkParams(x_c1=0.5)
    with pytest.raises(InvalidParameterError):
        NetworkParams(x_g=0.0)


def test_cvc_no_power_flow(net):
    sol = solve_cvc(0.0, [], net)
    assert abs(sol.u_pcc.z - 1.0) < 1e-12
    assert sol.i_c1.magnitude < 1e-12


def test_cvc_solution_has_zero_q_voltage_at_pll_equilibrium(net):
    ctx = make_context(net, CVC, delta=0.2)
    theta = sep_cvc(ctx)
    sol = solve_cvc(0.2, [Phasor(0.55, theta)], net)
    assert abs((sol.u_c2[0].z * cmath.exp(-1j * theta)).imag) < 1e-9


def test_clc_hand_example(net):
    sol = solve_clc(Phasor(1.1, math.pi / 2), [], net)
    assert sol.u_pcc.magnitude == pytest.approx(0.362, abs=1e-12)
    assert abs(sol.u_pcc.angle) < 1e-12
    assert abs(solve_clc(Phasor(0.0, 0.0), [], net).u_pcc.z - net.u_g) < 1e-12


@given(angles, st.lists(phasors, min_size=0, max_size=3), st.floats(0.9, 1.1))
def test_cvc_kcl_kvl(delta, currents, scale):
    net = NetworkParams()
    sol = solve_cvc(delta, currents, net, scale=scale)
    assert sol.kcl_residual() < 1e-10
    assert sol.kvl_residual(net, scale=scale) < 1e-10


@given(phasors, st.lists(phasors, min_size=0, max_size=3), st.floats(0.9, 1.1))
def test_clc_kcl_kvl(i_c1, currents, scale):
    net = NetworkParams()
    sol = solve_clc(i_c1, currents, net, scale=scale)
    assert sol.kcl_residual() < 1e-10
    assert sol.kvl_residual(net, scale=scale) < 1e-10


def test_project_to_frame():
    d, q = project_to_frame(Phasor(1.0, 0.8), 0.8)
    assert (d, q) == pytest.approx((1.0, 0.0), abs=1e-15)
    d, q = project_to_frame(Phasor(1.0, 0.8 + math.pi / 2), 0.8)
    assert (d, q) == pytest.approx((0.0, 1.0), abs=1e-15)
    d, q = project_to_frame(Phasor(1.1, 0.3), -0.4)
    assert (d, q) == pytest.approx((1.1 * math.cos(0.7), 1.1 * math.sin(0.7)), abs=1e-15)


def test_cvc_power_examples(net):
    assert gfmc_power(CVC, 0.0, [], net) == 0.0
    # hand evaluation of y_1g*sin(0.3); a rounded 0.4692 is quoted elsewhere
    assert gfmc_power(CVC, 0.3, [], net) == pytest.approx(math.sin(0.3) / 0.63, abs=1e-12)
    assert gfmc_power(CVC, 0.3, [], net) == pytest.approx(0.46908, abs=1e-5)
    assert gfmc_power(CVC, 0.3, [], net) == pytest.approx(terminal_power(solve_cvc(0.3, [], net)), abs=1e-12)


@given(angles, st.lists(phasors, min_size=0, max_size=3))
def test_cvc_power_matches_complex_power(delta, currents):
    net = NetworkParams()
    p = gfmc_power(CVC, delta, currents, net)
    assert abs(p - terminal_power(solve_cvc(delta, currents, net))) < 1e-9


@given(phasors, st.lists(phasors, min_size=0, max_size=3))
def test_clc_power_matches_complex_power(i_c1, currents):
    net = NetworkParams()
    p = gfmc_power(CLC, 0.0, currents, net, i_c1=i_c1)
    assert abs(p - terminal_power(solve_clc(i_c1, currents, net))) < 1e-9


def test_clc_power_needs_current(net):
    with pytest.raises(ValueError):
        gfmc_power(CLC, 0.0, [], net)
