import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gflswitch.analysis import sep_cvc
from gflswitch.converters import GfmcState
from gflswitch.phasor import CLC, CVC, NetworkParams, Phasor, solve_clc, solve_cvc
from gflswitch.switching import (
    CLC_TO_CVC,
    CVC_TO_CLC,
    TransitionError,
    apply_transition,
    crossings_closed_form,
    crossings_oracle,
    gflc_angle_crossings,
    gfmc_angle_window,
    saturation_guard,
    window_roots_oracle,
)

from conftest import make_context

# |e^{j*delta} - 1| * y_1g = i_max solved by hand for the default reactances
EDGE = 2 * math.asin(1.1 * 0.63 / 2)


def test_guard_without_gflc_current(net):
    assert saturation_guard(0.0, [], net, i_max=1.1) == pytest.approx(-1.1, abs=1e-12)
    assert saturation_guard(EDGE, [], net, i_max=1.1) == pytest.approx(0.0, abs=1e-12)
    assert EDGE == pytest.approx(0.70767, abs=1e-5)


def test_window_without_gflc_current(net):
    w = gfmc_angle_window(Phasor(0.0, 0.0), net, i_max=1.1)
    assert w.lam == pytest.approx(math.pi / 2)
    assert w.delta_R == pytest.approx(EDGE, abs=1e-12)
    assert w.delta_L == pytest.approx(-EDGE, abs=1e-12)
    assert w.contains(0.0) and not w.contains(1.0)
    assert w.contains(2 * math.pi + 0.1)


def test_window_degenerate_cases(net):
    assert gfmc_angle_window(Phasor(0.0, 0.0), net, i_max=10.0).always == CVC
    assert gfmc_angle_window(Phasor(0.0, 0.0), net, i_max=10.0).contains(3.0)
    tiny = gfmc_angle_window(Phasor(3.0, -math.pi / 2), net, i_max=0.05)
    assert not tiny.exists and tiny.always == CLC


@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 1.2), st.floats(-math.pi, math.pi), st.floats(0.4, 2.0), st.floats(0.8, 1.2))
def test_window_endpoints_are_guard_roots(i_mag, phi, i_max, u_c1):
    net = NetworkParams()
    i2 = Phasor(i_mag, phi)
    w = gfmc_angle_window(i2, net, i_max=i_max, u_c1=u_c1)
    assume(w.exists)
    for edge in (w.delta_L, w.delta_R):
        assert abs(saturation_guard(edge, [i2], net, i_max=i_max, u_c1=u_c1)) < 1e-8
    mid = 0.5 * (w.delta_L + w.delta_R)
    assert saturation_guard(mid, [i2], net, i_max=i_max, u_c1=u_c1) < 0
    # the closed form finds every root the scan finds
    for r in window_roots_oracle([i2], net, i_max, u_c1):
        assert min(abs(math.remainder(r - e, 2 * math.pi)) for e in (w.delta_L, w.delta_R)) < 1e-8


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.0, 1.2))
def test_guard_is_periodic(delta, phi, i_mag):
    net = NetworkParams()
    g0 = saturation_guard(delta, [Phasor(i_mag, phi)], net)
    g1 = saturation_guard(delta + 2 * math.pi, [Phasor(i_mag, phi + 2 * math.pi)], net)
    assert g0 == pytest.approx(g1, abs=1e-12)


def test_theta_crossing_example(net):
    cr = gflc_angle_crossings(0.2, 0.55, net, i_max=0.7)
    assert cr.solvable and cr.source == "closed-form"
    assert cr.theta_2 == pytest.approx(2.10, abs=5e-3)
    assert cr.oracle_deviation < 1e-6


def test_theta_crossings_unsolvable_with_large_limit(net):
    cr = gflc_angle_crossings(0.2, 0.55, net, i_max=1.25)
    assert not cr.solvable
    assert crossings_oracle(0.2, 0.55, 0.0, net, i_max=1.25) == ([], [])


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.6, 0.8), st.floats(0.1, 1.2), st.floats(0.5, 1.5), st.floats(-math.pi / 2, 0.0))
def test_theta_crossings_match_frozen_delta_roots(delta_p, i_mag, i_max, eta_2):
    net = NetworkParams()
    cf = crossings_closed_form(delta_p, i_mag, eta_2, net, i_max=i_max)
    assume(cf is not None)
    down, up = crossings_oracle(delta_p, i_mag, eta_2, net, i_max=i_max, centre=0.5 * (cf[0] + cf[1]))
    assume(down and up)  # tangent crossings have no sign change
    assert min(abs(r - cf[0]) for r in down) < 1e-6
    assert min(abs(r - cf[1]) for r in up) < 1e-6


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.3, 0.6), st.floats(0.1, 1.0), st.floats(0.4, 1.5))
def test_pll_equilibrium_lies_between_crossings(delta_p, i_mag, i_max):
    net = NetworkParams()
    ctx = make_context(net, CVC, delta=delta_p, mags=[i_mag])
    th_s = sep_cvc(ctx)
    # only meaningful when the operating point itself sits in CVC
    assume(saturation_guard(delta_p, [Phasor(i_mag, th_s)], net, i_max=i_max) < 0)
    cr = gflc_angle_crossings(delta_p, i_mag, net, i_max=i_max)
    assume(cr.solvable)
    assert cr.theta_1 < th_s < cr.theta_2


def test_transitions_keep_state(net):
    s = GfmcState(EDGE, CVC)
    g = saturation_guard(EDGE, [], net, i_max=1.1)
    after = apply_transition(s, CVC_TO_CLC, g)
    assert after.delta == s.delta and after.mode == CLC
    # the current source continues from the voltage source's current at the guard zero
    assert solve_cvc(EDGE, [], net).i_c1.magnitude == pytest.approx(1.1, abs=1e-12)
    assert solve_clc(Phasor(1.1, 0.0), [], net).i_c1.magnitude == 1.1


def test_transition_back_requires_admissible_current(net):
    s = GfmcState(0.3, CLC)
    g = saturation_guard(0.3, [], net, i_max=1.1)
    back = apply_transition(s, CLC_TO_CVC, g)
    assert back.mode == CVC and back.delta == 0.3
    assert solve_cvc(0.3, [], net).i_c1.magnitude <= 1.1
    with pytest.raises(TransitionError):
        apply_transition(GfmcState(1.0, CLC), CLC_TO_CVC, saturation_guard(1.0, [], net, i_max=1.1))
    with pytest.raises(TransitionError):
        apply_transition(GfmcState(0.3, CVC), CVC_TO_CLC, g)
