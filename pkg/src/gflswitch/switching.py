"""Mode-switching guards of the current-limited GFMC.

The GFMC stays in CVC while the current its voltage source would have to
deliver is below ``i_max``.  That single guard is resolved two ways: over the
GFMC angle with the GFLC current fixed (an interval of admissible delta), and
over the PLL angle with delta frozen (an interval of admissible theta).  Both
closed forms are checked here against root-finding on the guard itself.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .converters import GfmcState
from .phasor import CLC, CVC, DerivedParams, NetworkParams, Phasor, derive_params, solve_cvc

log = logging.getLogger(__name__)

CVC_TO_CLC = "CVC_TO_CLC"
CLC_TO_CVC = "CLC_TO_CVC"


class TransitionError(RuntimeError):
    pass


def saturation_guard(
    delta: float,
    gflc_currents: Sequence[Phasor],
    net: NetworkParams,
    derived: DerivedParams | None = None,
    i_max: float = 1.1,
    u_c1: float | None = None,
) -> float:
    """``|i_c1|`` of the hypothetical CVC solution minus ``i_max``; negative means CVC is admissible."""
    sol = solve_cvc(delta, gflc_currents, net, derived, u_c1=u_c1)
    return sol.i_c1.magnitude - i_max


@dataclass(frozen=True)
class SwitchingWindow:
    delta_L: float
    delta_R: float
    k: int
    lam: float
    d: float
    exists: bool = True
    always: str | None = None

    def contains(self, delta: float) -> bool:
        if not self.exists:
            return self.always == CVC
        c = 0.5 * (self.delta_L + self.delta_R)
        off = math.remainder(delta - c, 2 * math.pi)
        return abs(off) <= 0.5 * (self.delta_R - self.delta_L)


def gfmc_angle_window(
    i_c2: Phasor | Sequence[Phasor],
    net: NetworkParams,
    derived: DerivedParams | None = None,
    i_max: float = 1.1,
    u_c1: float | None = None,
    k: int = 0,
) -> SwitchingWindow:
    """Interval ``[delta_L, delta_R] + 2*k*pi`` of GFMC angles that keep CVC active.

    ``lam`` and ``d`` are the offset and cosine threshold of the closed form
    ``delta = +-arccos(d) + pi/2 - lam``.  When ``|d| > 1`` there is no switching
    window and ``always`` reports which mode holds for every delta.
    """
    dp = derived or derive_params(net)
    u = net.u_c1_set if u_c1 is None else u_c1
    i2 = i_c2.z if isinstance(i_c2, Phasor) else sum((c.z for c in i_c2), 0j)
    i_mag, phi = abs(i2), cmath.phase(i2)
    g = dp.gamma
    w_sq = net.u_g**2 + (g * i_mag) ** 2 - 2 * net.u_g * g * i_mag * math.sin(phi)
    num = u**2 + w_sq - (i_max / dp.y_1g) ** 2
    den = math.sqrt(max(4 * u**2 * w_sq, 0.0))
    lam = math.atan2(net.u_g - g * i_mag * math.sin(phi), g * i_mag * math.cos(phi))
    centre = math.pi / 2 - lam + 2 * k * math.pi
    d = num / den if den > 0 else math.copysign(math.inf, num)
    if d > 1:
        return SwitchingWindow(centre, centre, k, lam, d, exists=False, always=CLC)
    if d < -1:
        return SwitchingWindow(centre - math.pi, centre + math.pi, k, lam, d, exists=False, always=CVC)
    a = math.acos(d)
    return SwitchingWindow(centre - a, centre + a, k, lam, d)


def window_roots_oracle(
    i_c2: Sequence[Phasor], net: NetworkParams, i_max: float, u_c1: float | None = None, n_scan: int = 720
) -> list[float]:
    """Roots of the guard over one period of delta, by scan and Brent refinement."""
    f = lambda dl: saturation_guard(dl, i_c2, net, None, i_max, u_c1)  # noqa: E731
    grid = np.linspace(-math.pi, math.pi, n_scan + 1)
    vals = [f(x) for x in grid]
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(brentq(f, a, b, xtol=1e-14, rtol=1e-15))
    return roots


@dataclass(frozen=True)
class ThetaCrossings:
    theta_1: float
    theta_2: float
    solvable: bool
    source: str = "closed-form"
    oracle_deviation: float | None = None
    printed: dict | None = None


def _crossing_geometry(delta_p, i_mag, net, dp, i_max, u):
    p = cmath.rect(u, delta_p) - net.u_g
    r = dp.beta_1 * i_max
    gi = dp.gamma * i_mag
    return p, r, gi


def crossings_closed_form(delta_p, i_mag, eta_2, net, derived=None, i_max=1.1, u_c1=None):
    """PLL angles where the guard changes sign with delta frozen at ``delta_p``.

    Law of cosines in the triangle (U_c1∠delta_p - U_g, gamma*I_c2, beta_1*i_max).
    Returns ``(theta_1, theta_2)`` with theta_1 < theta_2, or None.
    """
    dp = derived or derive_params(net)
    u = net.u_c1_set if u_c1 is None else u_c1
    p, r, gi = _crossing_geometry(delta_p, i_mag, net, dp, i_max, u)
    pm = abs(p)
    if gi == 0 or pm == 0:
        return None
    c = (pm**2 + gi**2 - r**2) / (2 * gi * pm)
    if abs(c) > 1:
        return None
    a = math.acos(c)
    base = cmath.phase(p) - math.pi / 2 - eta_2
    return base - a, base + a


def crossings_as_printed(i_mag, net, derived=None, i_max=1.1, u_c1=None, eta_1=0.0, reading="printed"):
    """Literal evaluation of the published crossing formula (no delta_p dependence).

    ``reading='printed'`` uses ``U_c1**2 - beta_1*i_max`` as typeset;
    ``reading='dimensional'`` uses ``U_c1 - beta_1*i_max``.
    """
    dp = derived or derive_params(net)
    u = net.u_c1_set if u_c1 is None else u_c1
    k = u**2 - dp.beta_1 * i_max if reading == "printed" else u - dp.beta_1 * i_max
    gi = dp.gamma * i_mag
    try:
        theta_2 = math.pi / 2 - math.acos((gi**2 + net.u_g**2 - k**2) / (2 * gi * net.u_g))
        theta_1 = 2 * math.acos((k**2 + net.u_g**2 - gi**2) / (2 * net.u_g * k)) - theta_2 + eta_1
    except (ValueError, ZeroDivisionError):
        return None
    return theta_1, theta_2


def crossings_oracle(delta_p, i_mag, eta_2, net, i_max=1.1, u_c1=None, centre=None, n_scan=720):
    """Brute-force roots of the frozen-delta guard over one period of theta."""
    f = lambda th: saturation_guard(delta_p, [Phasor(i_mag, th + eta_2)], net, None, i_max, u_c1)  # noqa: E731
    c0 = 0.0 if centre is None else centre
    grid = np.linspace(c0 - math.pi, c0 + math.pi, n_scan + 1)
    vals = [f(x) for x in grid]
    up, down = [], []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa * fb < 0:
            root = brentq(f, a, b, xtol=1e-14, rtol=1e-15)
            # leaving CLC (guard falls) marks theta_1, leaving CVC marks theta_2
            (down if fa > 0 else up).append(root)
    return down, up


def gflc_angle_crossings(
    delta_p: float,
    i_mag: float,
    net: NetworkParams,
    derived: DerivedParams | None = None,
    i_max: float = 1.1,
    u_c1: float | None = None,
    eta_2: float = 0.0,
    eta_1: float = 0.0,
    verify: bool = True,
    tol: float = 1e-6,
) -> ThetaCrossings:
    """CLC->CVC (theta_1) and CVC->CLC (theta_2) PLL angles at frozen ``delta_p``.

    The closed form is checked against guard roots; if they disagree by more
    than ``tol`` the oracle values are returned and a warning is logged.
    """
    dp = derived or derive_params(net)
    cf = crossings_closed_form(delta_p, i_mag, eta_2, net, dp, i_max, u_c1)
    printed = {
        r: crossings_as_printed(i_mag, net, dp, i_max, u_c1, eta_1, reading=r) for r in ("printed", "dimensional")
    }
    if not verify:
        if cf is None:
            return ThetaCrossings(math.nan, math.nan, False, printed=printed)
        return ThetaCrossings(cf[0], cf[1], True, printed=printed)

    centre = None
    if cf is not None:
        centre = 0.5 * (cf[0] + cf[1])
    down, up = crossings_oracle(delta_p, i_mag, eta_2, net, i_max, u_c1, centre)
    if cf is None:
        if down or up:
            log.warning("crossing closed form unsolvable but guard has roots at delta_p=%.6g", delta_p)
            if down and up:
                return ThetaCrossings(down[0], up[0], True, source="oracle", printed=printed)
        return ThetaCrossings(math.nan, math.nan, False, printed=printed)
    if not (down and up):
        log.warning("guard has no sign change where the closed form predicts crossings (tangency)")
        return ThetaCrossings(cf[0], cf[1], True, printed=printed)
    t1 = min(down, key=lambda r: abs(r - cf[0]))
    t2 = min(up, key=lambda r: abs(r - cf[1]))
    dev = max(abs(t1 - cf[0]), abs(t2 - cf[1]))
    if dev > tol:
        log.warning("closed-form crossings deviate from guard roots by %.3g rad; using roots", dev)
        return ThetaCrossings(t1, t2, True, source="oracle", oracle_deviation=dev, printed=printed)
    return ThetaCrossings(cf[0], cf[1], True, oracle_deviation=dev, printed=printed)


def apply_transition(state: GfmcState, direction: str, guard_value: float, tol: float = 1e-9) -> GfmcState:
    """Switch the GFMC mode; delta (and every PLL state) carries over unchanged."""
    if direction == CVC_TO_CLC:
        if state.mode != CVC or guard_value < -tol:
            raise TransitionError(f"CVC->CLC without the guard firing (mode={state.mode}, g={guard_value:.3g})")
        return replace(state, mode=CLC)
    if direction == CLC_TO_CVC:
        if state.mode != CLC or guard_value > tol:
            raise TransitionError(f"CLC->CVC without the guard firing (mode={state.mode}, g={guard_value:.3g})")
        return replace(state, mode=CVC)
    raise ValueError(f"unknown transition {direction!r}")
