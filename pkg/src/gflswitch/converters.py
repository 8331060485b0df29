"""Converter control laws and the PLL dynamics in both GFMC modes.

Units: angles in rad, time in s, the PLL frequency deviation ``varpi`` in
rad/s.  PLL gains are given per unit (``omega_pu = k_2p*u_q + k_2i*int(u_q)``)
and enter the dynamics multiplied by ``omega_b``.  Inductances are
``x / omega_b`` so that ``omega_c2 * L = x * (1 + varpi/omega_b)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .phasor import (
    CLC,
    CVC,
    DerivedParams,
    InvalidParameterError,
    NetworkParams,
    Phasor,
    derive_params,
    solve_clc,
    solve_cvc,
)

LVRT_VOLTAGE = 0.9


class DegenerateParameterError(ValueError):
    """The PLL equivalent inertia is not positive for this gain/current combination."""


class CtrlMode(str, enum.Enum):
    NORMAL = "NORMAL"
    LVRT = "LVRT"
    VFDC_HOLD = "VFDC_HOLD"


@dataclass(frozen=True)
class GflcParams:
    k_2p: float = 0.07
    k_2i: float = 100.0
    x_c2: float = 0.03
    i_d_ref: float = 0.55
    i_q_ref: float = 0.0
    k_q: float = 3.0
    i_max: float = 1.2
    vfdc_enabled: bool = False
    vfdc_hold: float = 2.0

    def __post_init__(self):
        if self.k_2p <= 0 or self.k_2i <= 0:
            raise InvalidParameterError("PLL gains must be positive")
        if self.i_max <= 0 or self.k_q < 0 or self.x_c2 <= 0:
            raise InvalidParameterError("need i_max > 0, k_q >= 0, x_c2 > 0")

    def gains(self, f_base: float) -> tuple[float, float]:
        """(k_p, k_i) in rad/s per pu voltage and rad/s^2 per pu voltage."""
        w = 2.0 * math.pi * f_base
        return w * self.k_2p, w * self.k_2i


@dataclass
class GflcState:
    theta: float
    varpi: float = 0.0
    ctrl_mode: CtrlMode = CtrlMode.NORMAL
    theta_snapshot: float | None = None


_ALLOWED = {
    CtrlMode.NORMAL: {CtrlMode.LVRT},
    CtrlMode.LVRT: {CtrlMode.VFDC_HOLD, CtrlMode.NORMAL},
    CtrlMode.VFDC_HOLD: {CtrlMode.NORMAL, CtrlMode.LVRT},
}


def next_ctrl_mode(current: CtrlMode, target: CtrlMode) -> CtrlMode:
    if target not in _ALLOWED[current]:
        raise ValueError(f"illegal GFLC control transition {current.value} -> {target.value}")
    return target


@dataclass(frozen=True)
class GfmcParams:
    m_p: float = 0.04
    p_ref: float = 0.175
    u_set: float = 1.0
    i_max: float = 1.1
    eta_1: float = 0.0
    vfdc_enabled: bool = False
    epsilon: float = -math.pi / 2

    def __post_init__(self):
        if self.m_p <= 0 or self.i_max <= 0:
            raise InvalidParameterError("need m_p > 0 and i_max > 0")
        for name in ("eta_1", "epsilon"):
            v = getattr(self, name)
            if not -math.pi < v <= math.pi:
                raise InvalidParameterError(f"{name} must lie in (-pi, pi]")


@dataclass
class GfmcState:
    delta: float
    mode: str = CVC


# --- current laws ---------------------------------------------------------


def lvrt_references(params: GflcParams, u_pcc: float, i_d_pre: float | None = None) -> tuple[float, float]:
    """Reactive-priority ride-through references ``(i_d, i_q)``."""
    i_d_pre = params.i_d_ref if i_d_pre is None else i_d_pre
    i_q = min(max(params.k_q * (LVRT_VOLTAGE - u_pcc), 0.0), params.i_max)
    i_d = min(i_d_pre, math.sqrt(max(params.i_max**2 - i_q**2, 0.0)))
    return i_d, i_q


def current_pinned(params: GflcParams, state: GflcState) -> bool:
    return params.vfdc_enabled and state.ctrl_mode in (CtrlMode.LVRT, CtrlMode.VFDC_HOLD)


def gflc_current(
    state: GflcState,
    params: GflcParams,
    u_pcc: float = 1.0,
    fault_active: bool = False,
    i_d_pre: float | None = None,
) -> Phasor:
    """Output current phasor of one GFLC.

    The current sits at ``eta_2 = atan2(-i_q, i_d)`` from its d-axis, so a
    positive ``i_q`` is a lagging (voltage-supporting) injection.  While VFDC is
    engaged the d-axis is the stored ``theta_snapshot`` rather than the PLL
    angle.
    """
    if fault_active or state.ctrl_mode == CtrlMode.LVRT:
        i_d, i_q = lvrt_references(params, u_pcc, i_d_pre)
    else:
        i_d, i_q = params.i_d_ref, params.i_q_ref
    mag = min(math.hypot(i_d, i_q), params.i_max)
    eta_2 = math.atan2(-i_q, i_d)
    if current_pinned(params, state):
        if state.theta_snapshot is None:
            raise ValueError("VFDC engaged without a stored d-axis angle")
        return Phasor(mag, state.theta_snapshot + eta_2)
    return Phasor(mag, state.theta + eta_2)


def gfmc_clc_current(state: GfmcState, params: GfmcParams) -> Phasor:
    if state.mode != CLC:
        raise ValueError("GFMC current source only exists in CLC mode")
    if params.vfdc_enabled:
        return Phasor(params.i_max, params.epsilon)
    return Phasor(params.i_max, state.delta + params.eta_1)


def apl_rhs(state: GfmcState, params: GfmcParams, p_c1: float, f_base: float = 50.0) -> float:
    """First-order droop: d(delta)/dt in rad/s."""
    return 2.0 * math.pi * f_base * params.m_p * (params.p_ref - p_c1)


def vfdc_power_line(
    i_max: float, i_c2: float, theta_s: float, gamma: float, u_g: float = 1.0
) -> tuple[float, float]:
    """Amplitude and phase of the flat CLC power line under GFMC VFDC.

    With the GFMC current pinned at ``epsilon`` and the GFLC current at
    ``theta_s`` the CLC power is ``k_a * sin(epsilon + beta)`` for every delta.
    """
    k_a = i_max * math.sqrt(u_g**2 + (gamma * i_c2) ** 2 - 2.0 * u_g * gamma * i_c2 * math.sin(theta_s))
    beta = math.atan2(u_g - gamma * i_c2 * math.sin(theta_s), gamma * i_c2 * math.cos(theta_s))
    return k_a, beta


# --- PLL dynamics ---------------------------------------------------------


@dataclass(frozen=True)
class PllContext:
    """Everything the PLL equations need apart from the PLL states themselves.

    Per-GFLC current ``j`` has magnitude ``mags[j]``; its angle is
    ``theta_j + offsets[j]`` when it tracks its PLL and ``offsets[j]`` when
    pinned.  In CLC the GFMC current is the fixed phasor ``i_c1``.
    """

    net: NetworkParams
    mode: str
    delta: float
    x_c2: tuple[float, ...]
    k_p: tuple[float, ...]
    k_i: tuple[float, ...]
    mags: tuple[float, ...]
    offsets: tuple[float, ...]
    pinned: tuple[bool, ...]
    i_c1: Phasor | None = None
    u_c1: float | None = None
    derived: DerivedParams = field(default=None)

    def __post_init__(self):
        if self.derived is None:
            object.__setattr__(self, "derived", derive_params(self.net))
        n = len(self.x_c2)
        if not all(len(v) == n for v in (self.k_p, self.k_i, self.mags, self.offsets, self.pinned)):
            raise ValueError("per-GFLC tuples must share one length")
        if self.mode == CLC and self.i_c1 is None:
            raise ValueError("CLC context needs the GFMC current")

    @property
    def n(self) -> int:
        return len(self.x_c2)

    @property
    def source_voltage(self) -> float:
        return self.net.u_c1_set if self.u_c1 is None else self.u_c1

    def angles(self, thetas: Sequence[float]) -> list[float]:
        return [o if p else t + o for t, o, p in zip(thetas, self.offsets, self.pinned)]

    def currents(self, thetas: Sequence[float]) -> list[Phasor]:
        return [Phasor(m, a) for m, a in zip(self.mags, self.angles(thetas))]

    def with_mode(self, mode: str, i_c1: Phasor | None = None) -> "PllContext":
        return replace(self, mode=mode, i_c1=i_c1)


@dataclass(frozen=True)
class PllTerms:
    """Swing-equation coefficients of one PLL.

    ``T*dvarpi/dt = p_m - p_e - d*varpi - d2*varpi**2 + cross``, where
    ``cross`` collects the drive from other PLLs' frequencies.
    """

    p_e: float
    p_m: float
    t: float
    d: float
    d2: float
    cross: float
    dp_e: float

    def accel(self, varpi: float) -> float:
        return (self.p_m - self.p_e - self.d * varpi - self.d2 * varpi**2 + self.cross) / self.t


def cvc_source(ctx: PllContext) -> complex:
    """Voltage behind ``l_v`` that a GFLC sees in CVC: alpha*U_c1∠delta + (1-alpha)*U_g."""
    a = ctx.derived.alpha
    return a * ctx.source_voltage * complex(math.cos(ctx.delta), math.sin(ctx.delta)) + (1.0 - a) * ctx.net.u_g


def pll_terms(ctx: PllContext, i: int, thetas: Sequence[float], varpis: Sequence[float]) -> PllTerms:
    net, d = ctx.net, ctx.derived
    w_b = net.omega_b
    th = thetas[i]
    w = varpis[i]
    kp, ki = ctx.k_p[i], ctx.k_i[i]
    angles = ctx.angles(thetas)

    if ctx.mode == CVC:
        e = cvc_source(ctx)
        p_e = e.real * math.sin(th) - e.imag * math.cos(th)
        dp_e = e.real * math.cos(th) + e.imag * math.sin(th)
        shared = (1.0 - d.alpha) * net.x_g
        p_m = 0.0
        g = 0.0
    else:
        p_e = net.u_g * math.sin(th)
        dp_e = net.u_g * math.cos(th)
        shared = net.x_g
        i1 = ctx.i_c1
        p_m = net.x_g * i1.magnitude * math.cos(i1.angle - th)
        # GFMC current angle is frozen on the PLL time scale
        g = net.x_g * i1.magnitude * math.sin(i1.angle - th)

    cross = 0.0
    for j in range(ctx.n):
        c = shared + (ctx.x_c2[i] if j == i else 0.0)
        p_m += c * ctx.mags[j] * math.cos(angles[j] - th)
        q = c * ctx.mags[j] * math.sin(angles[j] - th)
        if ctx.pinned[j]:
            g += q
        elif j != i:
            g += q
            cross += q * varpis[j]

    t = (1.0 - kp * p_m / w_b) / ki
    if t <= 0:
        raise DegenerateParameterError(f"PLL equivalent inertia T={t:.3g} <= 0")
    r = kp / ki
    s = 1.0 + w / w_b
    return PllTerms(
        p_e=p_e,
        p_m=p_m,
        t=t,
        d=r * (dp_e - g) - p_m / w_b,
        d2=-r * g / w_b,
        cross=-r * s * cross,
        dp_e=dp_e,
    )


def pll_rhs_reduced(ctx: PllContext, thetas: Sequence[float], varpis: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """(dtheta/dt, dvarpi/dt) for every PLL from the swing-equation form."""
    acc = np.array([pll_terms(ctx, i, thetas, varpis).accel(varpis[i]) for i in range(ctx.n)])
    return np.asarray(varpis, dtype=float), acc


def uq_reference(ctx: PllContext, i: int, thetas: Sequence[float], varpi_i: float) -> float:
    """q-axis voltage at GFLC ``i`` straight from the network solution."""
    scale = 1.0 + varpi_i / ctx.net.omega_b
    currents = ctx.currents(thetas)
    if ctx.mode == CVC:
        sol = solve_cvc(ctx.delta, currents, ctx.net, ctx.derived, u_c1=ctx.source_voltage, x_c2=ctx.x_c2, scale=scale)
    else:
        sol = solve_clc(ctx.i_c1, currents, ctx.net, x_c2=ctx.x_c2, scale=scale)
    u = sol.u_c2[i]
    return u.magnitude * math.sin(u.angle - thetas[i])


def pll_rhs_reference(
    ctx: PllContext, thetas: Sequence[float], varpis: Sequence[float], h: float = 1e-5
) -> tuple[np.ndarray, np.ndarray]:
    """PI-controller PLL evaluated on the network solution.

    ``d(u_q)/dt`` is assembled from central differences of the network
    solution; its implicit ``dvarpi/dt`` part is moved to the left-hand side.
    """
    thetas = list(map(float, thetas))
    acc = np.empty(ctx.n)
    for i in range(ctx.n):
        w = float(varpis[i])
        u = uq_reference(ctx, i, thetas, w)
        du_dt = 0.0
        for k in range(ctx.n):
            hi = list(thetas)
            lo = list(thetas)
            hi[k] += h
            lo[k] -= h
            du_dt += (uq_reference(ctx, i, hi, w) - uq_reference(ctx, i, lo, w)) / (2 * h) * varpis[k]
        hw = 1.0
        du_dw = (uq_reference(ctx, i, thetas, w + hw) - uq_reference(ctx, i, thetas, w - hw)) / (2 * hw)
        denom = 1.0 - ctx.k_p[i] * du_dw
        if denom <= 0:
            raise DegenerateParameterError("PLL implicit derivative term is singular")
        acc[i] = (ctx.k_i[i] * u + ctx.k_p[i] * du_dt) / denom
    return np.asarray(varpis, dtype=float), acc
