"""Equilibria, damping lines, stability boundaries and Lyapunov energies of the PLL.

Everything is evaluated for one PLL (index ``i``) with the other PLL angles
frozen, which is the single-machine view used in the energy analysis.  The
frequency term of the PLL equation is written ``T*dvarpi/dt = M - N - D*varpi``
with ``N`` the source voltage projected on the q axis and ``M`` the voltage
drop the converter currents create; see :func:`gflswitch.converters.pll_terms`.

Energies come in two scales.  ``scale='rad2'`` is the natural one
(``varpi**2/2 + (1/T)*int(N - M)``, in rad^2/s^2); ``scale='area'`` multiplies
by ``T`` so the potential is the signed area between the N and M curves, in
pu*rad.  The area scale is what P-theta diagrams plot.
"""

from __future__ import annotations

import cmath
import math
import random
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .converters import DegenerateParameterError, PllContext, cvc_source, pll_terms
from .phasor import CLC, CVC, NetworkParams, Phasor, derive_params, gfmc_power
from .switching import gflc_angle_crossings

BASE = "BASE"
MULTI = "MULTI"
VFDC = "VFDC"


class NoEquilibriumError(ValueError):
    """The requested subsystem has no stable equilibrium for these currents."""


# --- source/current decomposition -----------------------------------------


@dataclass(frozen=True)
class SourceTerms:
    """``N(theta) = -Im(E*e^{-j theta})`` and ``M(theta) = m_self + Re(C*e^{-j theta})``."""

    e: complex
    c: complex
    m_self: float


def source_terms(ctx: PllContext, i: int = 0, thetas: Sequence[float] | None = None, others: bool = True) -> SourceTerms:
    """Split PLL ``i``'s drive into its source, the fixed current phasors, and its own tracking current.

    With ``others=False`` currents of the other GFLCs are left out, which is
    the single-converter (BASE) view.
    """
    thetas = list(thetas) if thetas is not None else [0.0] * ctx.n
    net, dp = ctx.net, ctx.derived
    if ctx.mode == CVC:
        e = cvc_source(ctx)
        shared = (1.0 - dp.alpha) * net.x_g
        c = 0j
    else:
        e = complex(net.u_g)
        shared = net.x_g
        c = net.x_g * ctx.i_c1.z
    m_self = 0.0
    angles = ctx.angles(thetas)
    for j in range(ctx.n):
        if j != i and not others:
            continue
        coeff = shared + (ctx.x_c2[i] if j == i else 0.0)
        if j == i and not ctx.pinned[i]:
            m_self = coeff * ctx.mags[i] * math.cos(ctx.offsets[i])
        else:
            c += coeff * cmath.rect(ctx.mags[j], angles[j])
    return SourceTerms(e, c, m_self)


def _sep_from_terms(st: SourceTerms) -> float:
    # M - N = m_self + |Z| cos(theta - zeta) with Z = C - jE; stable root has sin(theta - zeta) > 0
    z = st.c - 1j * st.e
    zm = abs(z)
    if zm == 0 or abs(st.m_self) > zm:
        raise NoEquilibriumError(f"no equilibrium: |m_self|={abs(st.m_self):.6g} exceeds source {zm:.6g}")
    return cmath.phase(z) + math.acos(-st.m_self / zm)


def sep(ctx: PllContext, i: int = 0, thetas: Sequence[float] | None = None, others: bool = True) -> float:
    """Stable equilibrium of PLL ``i`` in the context's mode (exact, any currents)."""
    return _sep_from_terms(source_terms(ctx, i, thetas, others))


def sep_cvc(ctx: PllContext, i: int = 0, thetas: Sequence[float] | None = None, approx: bool = False) -> float:
    """CVC equilibrium.  ``approx=True`` gives the textbook ``arcsin(l_v*i_d/U_c1) + delta``."""
    c = ctx if ctx.mode == CVC else ctx.with_mode(CVC)
    if approx:
        i_d = c.mags[i] * math.cos(c.offsets[i])
        return sep_cvc_approx(c.net, i_d, c.delta, x_c2=c.x_c2[i], u_c1=c.source_voltage)
    return sep(c, i, thetas)


def sep_clc(
    ctx: PllContext, i: int = 0, thetas: Sequence[float] | None = None, i_c1: Phasor | None = None, approx: bool = False
) -> float:
    """CLC equilibrium; ``i_c1`` defaults to ``ctx.i_c1`` or else ``i_max``-free zero current."""
    i1 = i_c1 if i_c1 is not None else (ctx.i_c1 if ctx.i_c1 is not None else Phasor(0.0, 0.0))
    c = ctx.with_mode(CLC, i1)
    if approx:
        th = sep(c, i, thetas)
        i_d = c.mags[i] * math.cos(c.offsets[i])
        return sep_clc_approx(c.net, i1.magnitude * math.cos(i1.angle - th), i_d, x_c2=c.x_c2[i])
    return sep(c, i, thetas)


def sep_cvc_approx(net: NetworkParams, i_d: float, delta: float, x_c2: float | None = None, u_c1: float | None = None) -> float:
    u = net.u_c1_set if u_c1 is None else u_c1
    arg = derive_params(net, x_c2).l_v * i_d / u
    if abs(arg) > 1:
        raise NoEquilibriumError(f"CVC equilibrium needs |l_v*i_d/U_c1| <= 1, got {arg:.6g}")
    return math.asin(arg) + delta


def sep_clc_approx(net: NetworkParams, i_c1_d: float, i_d: float, x_c2: float | None = None) -> float:
    x_c2 = net.x_c2 if x_c2 is None else x_c2
    arg = (net.x_g * i_c1_d + (net.x_g + x_c2) * i_d) / net.u_g
    if abs(arg) > 1:
        raise NoEquilibriumError(f"CLC equilibrium needs |argument| <= 1, got {arg:.6g}")
    return math.asin(arg)


# --- energy ---------------------------------------------------------------


def potential_closed_form(st: SourceTerms, theta: float, theta_s: float) -> float:
    """``int_{theta_s}^{theta} (N - M) dtheta`` from the analytic antiderivative."""

    def prim(t):
        r = cmath.exp(-1j * t)
        return -(st.e * r).real - st.m_self * t + (st.c * r).imag

    return prim(theta) - prim(theta_s)


def _simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10, depth: int = 40) -> float:
    def simp(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simp(fa, flm, fm, a, m)
        right = simp(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15.0
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1)

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simp(fa, fm, fb, a, b), tol, depth)


def lyapunov_energy(
    theta: float,
    varpi: float,
    ctx: PllContext,
    i: int = 0,
    thetas: Sequence[float] | None = None,
    theta_s: float | None = None,
    scale: str = "rad2",
    method: str = "quadrature",
    tol: float = 1e-10,
) -> float:
    """PLL energy ``varpi**2/2 + (1/T)*int_{theta_s}^{theta}(N - M)``.

    ``method='quadrature'`` integrates the PLL terms numerically (adaptive
    Simpson); ``method='closed'`` uses the analytic antiderivative.
    """
    thetas = list(thetas) if thetas is not None else [0.0] * ctx.n
    th_s = sep(ctx, i, thetas) if theta_s is None else theta_s
    at_s = list(thetas)
    at_s[i] = th_s
    zero = [0.0] * ctx.n
    t_eq = pll_terms(ctx, i, at_s, zero).t

    if method == "closed":
        pot = potential_closed_form(source_terms(ctx, i, thetas), theta, th_s)
    else:

        def integrand(x):
            th = list(thetas)
            th[i] = x
            pt = pll_terms(ctx, i, th, zero)
            return pt.p_e - pt.p_m

        # integration tolerance is on the area; scale it for the 1/T factor
        pot = _simpson(integrand, th_s, theta, tol=tol * (t_eq if scale == "rad2" else 1.0))
    if scale == "area":
        return t_eq * 0.5 * varpi**2 + pot
    if scale != "rad2":
        raise ValueError(f"unknown energy scale {scale!r}")
    return 0.5 * varpi**2 + pot / t_eq


# --- damping lines and boundaries -------------------------------------------


@dataclass(frozen=True)
class DampingLine:
    """``line(theta) = intercept + slope_eff(theta)*(theta - theta_s)``, compared with ``sin(theta - psi)``.

    ``psi`` is the source angle (the GFMC-driven voltage angle in CVC, 0 in
    CLC).  In the VFDC variant the converter's own current term
    (``self_slope`` of the total) is weighted by ``cos(theta - theta_s)``.
    """

    intercept: float
    slope: float
    theta_s: float
    mode: str
    variant: str = BASE
    psi: float = 0.0
    self_slope: float = 0.0

    def slope_at(self, theta: float) -> float:
        if self.variant == VFDC:
            return self.slope - self.self_slope * (1.0 - math.cos(theta - self.theta_s))
        return self.slope

    def __call__(self, theta: float) -> float:
        return self.intercept + self.slope_at(theta) * (theta - self.theta_s)

    def margin(self, theta: float) -> float:
        """``sin(theta - psi) - line(theta)``; positive above theta_s means energy decays."""
        return math.sin(theta - self.psi) - self(theta)


def damping_line(ctx: PllContext, i: int = 0, thetas: Sequence[float] | None = None, variant: str = BASE) -> DampingLine:
    """Linearised damping-sign condition for PLL ``i`` in ``ctx.mode``.

    The slope is ``(G(theta_s) + M(theta_s)*k_i/(k_p*omega_b)) / |E|``: the
    first part comes from currents whose angle does not follow the PLL, the
    second from the frequency scaling of every reactance drop.
    """
    if variant not in (BASE, MULTI, VFDC):
        raise ValueError(f"unknown variant {variant!r}")
    thetas = list(thetas) if thetas is not None else [0.0] * ctx.n
    others = variant != BASE
    st = source_terms(ctx, i, thetas, others=others)
    th_s = _sep_from_terms(st)
    e_mag, psi = abs(st.e), cmath.phase(st.e)
    w_b = ctx.net.omega_b
    r = ctx.k_i[i] / (ctx.k_p[i] * w_b)
    rot = cmath.exp(-1j * th_s)
    m_fixed = (st.c * rot).real
    g_fixed = (st.c * rot).imag
    if ctx.mode == CLC:
        # only the GFMC current counts as a non-tracking term in the base line
        g_line = g_fixed if others else (ctx.net.x_g * ctx.i_c1.z * rot).imag
    else:
        g_line = g_fixed if others else 0.0
    self_part = r * st.m_self / e_mag
    slope = self_part + (r * m_fixed + g_line) / e_mag
    return DampingLine(
        intercept=math.sin(th_s - psi),
        slope=slope,
        theta_s=th_s,
        mode=ctx.mode,
        variant=variant,
        psi=psi,
        self_slope=self_part if variant == VFDC else 0.0,
    )


@dataclass(frozen=True)
class StabilityBoundary:
    theta_min: float
    theta_max: float
    v_max: float
    theta_s: float = math.nan
    collapsed: bool = False


def _first_crossing(f, start, stop, step, tol=1e-10):
    n = max(1, int(math.ceil(abs(stop - start) / step)))
    xs = np.linspace(start, stop, n + 1)
    prev = xs[0]
    for x in xs[1:]:
        if f(x) <= 0:
            lo, hi = prev, x
            while abs(hi - lo) > tol:
                mid = 0.5 * (lo + hi)
                if f(mid) <= 0:
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        prev = x
    return None


def stability_boundary(
    line: DampingLine,
    energy: Callable[[float], float] | None = None,
    resolution: float = math.pi / 180,
    tol: float = 1e-10,
) -> StabilityBoundary:
    """Angles where the damping condition first fails on either side of ``theta_s``.

    ``energy(theta)`` gives the potential at rest; ``v_max`` is its value at
    ``theta_max``.  When the line is steeper than the sine at ``theta_s`` the
    region collapses to the equilibrium.
    """
    th_s = line.theta_s
    up = lambda t: line.margin(t)  # noqa: E731  >0 while stable above theta_s
    down = lambda t: -line.margin(t)  # noqa: E731
    probe = min(resolution, 1e-6)
    if up(th_s + probe) <= 0 or down(th_s - probe) <= 0:
        return StabilityBoundary(th_s, th_s, 0.0, th_s, collapsed=True)
    th_max = _first_crossing(up, th_s + probe, th_s + 2 * math.pi, resolution, tol)
    th_min = _first_crossing(down, th_s - probe, th_s - 2 * math.pi, resolution, tol)
    th_max = th_s + 2 * math.pi if th_max is None else th_max
    th_min = th_s - 2 * math.pi if th_min is None else th_min
    v = energy(th_max) if energy is not None else math.nan
    return StabilityBoundary(th_min, th_max, max(v, 0.0) if not math.isnan(v) else v, th_s)


def boundary_for(
    ctx: PllContext, i: int = 0, thetas: Sequence[float] | None = None, variant: str = BASE, scale: str = "rad2"
) -> tuple[DampingLine, StabilityBoundary]:
    """Damping line and boundary with ``v_max`` from the PLL's own energy."""
    thetas = list(thetas) if thetas is not None else [0.0] * ctx.n
    line = damping_line(ctx, i, thetas, variant)
    st = source_terms(ctx, i, thetas, others=variant != BASE)

    def energy(th):
        return lyapunov_energy(th, 0.0, ctx, i, thetas, line.theta_s, scale=scale, method="closed") if variant != BASE \
            else _base_energy(st, ctx, i, thetas, line.theta_s, th, scale)

    return line, stability_boundary(line, energy)


def _base_energy(st, ctx, i, thetas, th_s, th, scale):
    at_s = list(thetas)
    at_s[i] = th_s
    t_eq = pll_terms(ctx, i, at_s, [0.0] * ctx.n).t
    pot = potential_closed_form(st, th, th_s)
    return pot if scale == "area" else pot / t_eq


# --- switching-energy audit -----------------------------------------------


@dataclass(frozen=True)
class CycleEnergy:
    k: int
    t_entry: float
    t_exit: float
    theta_a: float
    theta_b: float
    theta_s_cvc: float
    v_a: float
    v_b: float
    dv_pe: float
    dv_pf: float
    dv_d: float
    dv_o: float
    dv_d_integrated: float = math.nan


@dataclass
class EnergyAudit:
    cycles: list[CycleEnergy] = field(default_factory=list)
    scale: str = "area"

    @property
    def empty(self) -> bool:
        return not self.cycles

    def violations(self, tol: float = 1e-9) -> list[int]:
        return [c.k for c in self.cycles if c.dv_pe > tol or c.dv_pf > tol]


def _energy_at(result, snap, mode, i, scale):
    ctx = result.context_for(snap, mode)
    th = list(snap["thetas"])
    return lyapunov_energy(th[i], snap["varpis"][i], ctx, i, th, scale=scale, method="closed"), ctx


def switching_energy_audit(result, i: int = 0, scale: str = "area") -> EnergyAudit:
    """Energy bookkeeping over each CLC -> CVC -> CLC cycle of a simulation result.

    ``result`` must expose ``events`` (with ``kind`` and ``snapshot``) and
    ``context_for(snapshot, mode)``.  For cycle k, ``v_a`` is the CLC energy
    just before CVC is entered and ``v_b`` the CLC energy just after CVC is
    left.  ``dv_pe`` and ``dv_pf`` are the potential jumps at the two
    switches and ``dv_d`` the change while in CVC, so the three add up to
    ``dv_o = v_b - v_a``.  When the result carries a trace, ``dv_d_integrated``
    integrates ``-D*varpi**2`` over the CVC interval as an independent check.
    """
    audit = EnergyAudit(scale=scale)
    entry = None
    k = 0
    for ev in result.events:
        if ev.kind == "CLC_TO_CVC":
            entry = ev
        elif ev.kind == "CVC_TO_CLC" and entry is not None:
            try:
                va_l, _ = _energy_at(result, entry.snapshot, CLC, i, scale)
                va_v, ctx_v = _energy_at(result, entry.snapshot, CVC, i, scale)
                vb_v, _ = _energy_at(result, ev.snapshot, CVC, i, scale)
                vb_l, _ = _energy_at(result, ev.snapshot, CLC, i, scale)
            except NoEquilibriumError:
                entry = None
                continue
            k += 1
            th_sv = sep(ctx_v, i, entry.snapshot["thetas"])
            dv_pe = va_v - va_l
            dv_d = vb_v - va_v
            dv_pf = vb_l - vb_v
            integ = math.nan
            if getattr(result, "trace", None) is not None:
                integ = _integrated_damping(result, entry, ev, i, scale)
            audit.cycles.append(
                CycleEnergy(
                    k, entry.t, ev.t, entry.snapshot["thetas"][i], ev.snapshot["thetas"][i], th_sv,
                    va_l, vb_l, dv_pe, dv_pf, dv_d, dv_pe + dv_pf + dv_d, integ,
                )
            )
            entry = None
    return audit


def _integrated_damping(result, entry, ev, i, scale):
    tr = result.trace
    t = np.asarray(tr["t"])
    sel = (t >= entry.t) & (t <= ev.t)
    if sel.sum() < 2:
        return math.nan
    vals, ts = [], t[sel]
    for idx in np.nonzero(sel)[0]:
        snap = result.snapshot_at(idx)
        ctx = result.context_for(snap, CVC)
        pt = pll_terms(ctx, i, snap["thetas"], snap["varpis"])
        w = snap["varpis"][i]
        loss = -(pt.d * w * w + pt.d2 * w**3)
        vals.append(loss if scale == "area" else loss / pt.t)
    return float(np.trapezoid(vals, ts)) if hasattr(np, "trapezoid") else float(np.trapz(vals, ts))


# --- randomized property checks ---------------------------------------------


@dataclass
class AppendixReport:
    draws: int = 0
    solvable: int = 0
    skipped: int = 0
    ordering_violations: int = 0
    switching_checks: int = 0
    sep_order_violations: int = 0
    sigma_checks: int = 0
    sigma_violations: int = 0
    examples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.ordering_violations == 0 and self.sep_order_violations == 0 and self.sigma_violations == 0


def _draw_case(rng: random.Random, spread: float):
    def around(v):
        return v * rng.uniform(1 - spread, 1 + spread)

    with warnings.catch_warnings():
        # the wide draws deliberately include weakly coupled GFMCs
        warnings.simplefilter("ignore", UserWarning)
        net = NetworkParams(x_c1=around(0.05), x_c2=around(0.03), x_g=around(0.58))
    return net, around(1.1), around(0.55), around(0.175), around(0.15), around(100.0)


def check_appendix_properties(n_draws: int = 1000, spread: float = 0.5, seed: int = 0, sigma_scan: int = 720) -> AppendixReport:
    """Randomised check of the switching-angle ordering and the SEP ordering.

    Each draw perturbs the reactances, GFMC limit, GFLC current and power by
    up to ``spread`` around the nominal set and picks the GFMC angle ``delta_p``
    from its droop equilibrium.  Checked per draw:

    (a) ``theta_1 < theta_s^V < theta_2`` when the crossings exist;
    (b) at both crossings (the switching instants on the PLL time scale)
        ``theta_s^V <= theta_s^L + 1e-9`` with the GFMC current at its limit;
    (c) the largest ``delta_p`` giving collinear limit and GFLC current
        vectors does not exceed ``arcsin((beta_1*i_max + gamma*i_d)/U_g)``.
    """
    rep = AppendixReport()
    rng = random.Random(seed)
    for _ in range(n_draws):
        net, i_max, i_d, p_ref, k_2p, k_2i = _draw_case(rng, spread)
        rep.draws += 1
        dp = derive_params(net)
        w_b = net.omega_b
        base = PllContext(
            net=net, mode=CVC, delta=0.0, x_c2=(net.x_c2,), k_p=(w_b * k_2p,), k_i=(w_b * k_2i,),
            mags=(i_d,), offsets=(0.0,), pinned=(False,), derived=dp,
        )
        delta_p = _droop_angle(base, p_ref)
        if delta_p is None:
            rep.skipped += 1
            continue
        ctx = replace(base, delta=delta_p)
        try:
            th_sv = sep(ctx)
        except NoEquilibriumError:
            rep.skipped += 1
            continue
        cr = gflc_angle_crossings(delta_p, i_d, net, dp, i_max, verify=False)
        if cr.solvable:
            rep.solvable += 1
            if not (cr.theta_1 < th_sv < cr.theta_2):
                rep.ordering_violations += 1
                if len(rep.examples) < 5:
                    rep.examples.append(("ordering", net, i_max, i_d, delta_p, cr.theta_1, th_sv, cr.theta_2))
            for th_sw in (cr.theta_1, cr.theta_2):
                i1 = Phasor(i_max, delta_p)
                try:
                    th_sl = sep(ctx.with_mode(CLC, i1))
                except NoEquilibriumError:
                    continue
                rep.switching_checks += 1
                if th_sv > th_sl + 1e-9:
                    rep.sep_order_violations += 1
                    if len(rep.examples) < 5:
                        rep.examples.append(("sep-order", net, i_max, i_d, delta_p, th_sw, th_sv, th_sl))
        else:
            rep.skipped += 1
        sig = (dp.beta_1 * i_max + dp.gamma * i_d) / net.u_g
        if sig <= 1:
            rep.sigma_checks += 1
            if _delta_p_max(net, dp, i_max, i_d, sigma_scan) > math.asin(sig) + 1e-9:
                rep.sigma_violations += 1
    return rep


def _droop_angle(ctx: PllContext, p_ref: float) -> float | None:
    """GFMC angle where the CVC power with the GFLC at its SEP equals ``p_ref``."""

    def mismatch(d):
        c = replace(ctx, delta=d)
        th = sep(c)
        return gfmc_power(CVC, d, c.currents([th]), c.net, c.derived, u_c1=c.source_voltage) - p_ref

    try:
        return brentq(mismatch, -1.2, 1.2, xtol=1e-13)
    except (ValueError, NoEquilibriumError):
        return None


def _delta_p_max(net, dp, i_max, i_d, n_scan):
    """Largest GFMC angle reachable with collinear limit-current and GFLC-current drops.

    At a switching instant ``U_c1∠delta_p = U_g + j*(beta_1*I_1 + gamma*I_2)``;
    with both drops collinear their sum has length ``r = beta_1*i_max + gamma*i_d``.
    The common direction is scanned and the roots of ``|U_g + r∠a| = U_c1``
    refined by Brent's method.
    """
    r = dp.beta_1 * i_max + dp.gamma * i_d
    u = net.u_c1_set
    f = lambda a: abs(net.u_g + cmath.rect(r, a)) - u  # noqa: E731
    grid = np.linspace(-math.pi, math.pi, n_scan + 1)
    vals = [f(a) for a in grid]
    best = -math.inf
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa * fb < 0:
            root = brentq(f, a, b, xtol=1e-14)
            best = max(best, cmath.phase(net.u_g + cmath.rect(r, root)))
    return best


@dataclass
class ExpansionReport:
    draws: int = 0
    feasible: int = 0
    violations: int = 0
    examples: list = field(default_factory=list)


def check_vfdc_expansion(n_draws: int = 1000, spread: float = 0.5, seed: int = 0) -> ExpansionReport:
    """Randomised check that the VFDC line never shrinks the stability region.

    Each draw perturbs the nominal parameters, picks one to three GFLCs, a
    GFMC angle and a mode, and compares ``theta_max`` of the VFDC line with
    that of the plain line over the same set of currents (BASE for one GFLC,
    MULTI otherwise).  Draws without a stable equilibrium or with a
    non-positive PLL inertia are not feasible and are skipped.
    """
    rep = ExpansionReport()
    rng = random.Random(seed)
    for _ in range(n_draws):
        net, i_max, i_d, _p, k_2p, k_2i = _draw_case(rng, spread)
        rep.draws += 1
        n = rng.randint(1, 3)
        mode = rng.choice((CVC, CLC))
        delta = rng.uniform(-0.5, 0.8)
        w_b = net.omega_b
        mags = tuple(i_d * rng.uniform(0.5, 1.5) for _ in range(n))
        eta_1 = rng.choice((0.0, -math.pi / 2))
        ctx = PllContext(
            net=net, mode=mode, delta=delta, x_c2=(net.x_c2,) * n, k_p=(w_b * k_2p,) * n, k_i=(w_b * k_2i,) * n,
            mags=mags, offsets=(0.0,) * n, pinned=(False,) * n,
            i_c1=Phasor(i_max, delta + eta_1) if mode == CLC else None,
        )
        plain = BASE if n == 1 else MULTI
        try:
            thetas = [0.0] * n
            for _sweep in range(3):  # settle the other PLLs at their own equilibria
                thetas = [sep(ctx, j, thetas) for j in range(n)]
            _, b_plain = boundary_for(ctx, 0, thetas, plain)
            _, b_vfdc = boundary_for(ctx, 0, thetas, VFDC)
        except (NoEquilibriumError, DegenerateParameterError):
            continue
        rep.feasible += 1
        if b_vfdc.theta_max < b_plain.theta_max - 1e-9:
            rep.violations += 1
            if len(rep.examples) < 5:
                rep.examples.append((mode, n, delta, b_plain.theta_max, b_vfdc.theta_max))
    return rep
