"""Fixed-step simulation of the switched GFMC/GFLC system.

The continuous state is ``y = [delta, theta_1..theta_n, varpi_1..varpi_n]``.
Between events it is advanced by classical RK4 on a uniform grid.  Mode
switches of the GFMC are located by bisecting the step on the saturation
guard; the rest of the grid step is then completed in the new mode so the
integrator returns to the grid.  Fault application, clearance and the end of
the GFLC VFDC hold fall on grid points and are handled between steps.

During the fault the GFLC ride-through references are refreshed every step
from the previous PCC voltage (a zero-order hold on the algebraic loop).
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import root

from . import analysis
from .converters import (
    CtrlMode,
    GflcParams,
    GflcState,
    GfmcParams,
    GfmcState,
    PllContext,
    lvrt_references,
    next_ctrl_mode,
    pll_rhs_reduced,
    pll_rhs_reference,
)
from .kernels import Kernel, default_kernel
from .kernels import layout as L
from .phasor import CLC, CVC, InvalidParameterError, NetworkParams, Phasor, derive_params, solve_clc, solve_cvc
from .switching import CLC_TO_CVC, CVC_TO_CLC, apply_transition

log = logging.getLogger(__name__)

REDUCED = "REDUCED"
REFERENCE = "REFERENCE"

FAULT_ON = "FAULT_ON"
FAULT_CLEAR = "FAULT_CLEAR"
VFDC_ON = "VFDC_ON"
VFDC_OFF = "VFDC_OFF"


class InfeasibleScenarioError(RuntimeError):
    """No pre-fault operating point exists for the configured set-points."""


# --- configuration ----------------------------------------------------------


@dataclass
class FaultSpec:
    t_start: float = 1.0
    duration: float = 0.05
    rho: float = 0.3


@dataclass
class SimSettings:
    t_end: float = 4.0
    dt: float = 5e-5
    event_tol: float = 1e-9
    model: str = REDUCED
    min_event_sep: float = 1e-6
    vfdc_snapshot: str = "local"  # or "oracle": pin at the post-fault CVC equilibrium
    settle_window: float = 0.5
    freq_tol: float = 1e-3  # pu of omega_b
    angle_tol: float = 1e-2
    diverge_angle: float = 3 * math.pi
    early_exit: bool = False
    lvrt_filter_tc: float = 0.01  # s, first-order lag on the PCC voltage seen by ride-through


@dataclass
class OutputSpec:
    trace_csv: str | None = None
    events_csv: str | None = None
    decimation: int = 20


@dataclass
class ScenarioConfig:
    net: NetworkParams = field(default_factory=NetworkParams)
    gfmc: GfmcParams = field(default_factory=GfmcParams)
    gflcs: list[GflcParams] = field(default_factory=lambda: [GflcParams()])
    gflc_p_ref: list[float | None] = field(default_factory=lambda: [None])
    fault: FaultSpec | None = field(default_factory=FaultSpec)
    sim: SimSettings = field(default_factory=SimSettings)
    outputs: OutputSpec = field(default_factory=OutputSpec)
    name: str = ""

    def validate(self) -> None:
        s = self.sim
        if not s.dt > 0 or not s.t_end > 0:
            raise InvalidParameterError("need dt > 0 and t_end > 0")
        if s.model not in (REDUCED, REFERENCE):
            raise InvalidParameterError(f"unknown model {s.model!r}")
        if s.vfdc_snapshot not in ("local", "oracle"):
            raise InvalidParameterError(f"unknown vfdc_snapshot {s.vfdc_snapshot!r}")
        if not self.gflcs:
            raise InvalidParameterError("at least one GFLC is required")
        if len(self.gflc_p_ref) != len(self.gflcs):
            raise InvalidParameterError("gflc_p_ref must have one entry per GFLC")
        if self.outputs.decimation < 1:
            raise InvalidParameterError("decimation must be >= 1")
        f = self.fault
        if f is not None:
            if not 0.0 <= f.rho <= 1.0:
                raise InvalidParameterError("rho must lie in [0, 1]")
            if f.t_start < 0 or f.duration < 0 or not f.t_start + f.duration < s.t_end:
                raise InvalidParameterError("need 0 <= t_start and t_start + duration < t_end")

    def with_vfdc(self, on: bool) -> "ScenarioConfig":
        c = copy.deepcopy(self)
        c.gfmc = replace(c.gfmc, vfdc_enabled=on)
        c.gflcs = [replace(g, vfdc_enabled=on) for g in c.gflcs]
        return c

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SimState:
    t: float
    gfmc: GfmcState
    gflcs: list[GflcState]

    @property
    def mode_indicator(self) -> int:
        return 1 if self.gfmc.mode == CVC else 0


# --- results ----------------------------------------------------------------


@dataclass
class Event:
    t: float
    kind: str
    snapshot: dict
    unit: str = "gfmc"


class Trace:
    """Decimated per-step records; columns are fixed once the GFLC count is known."""

    def __init__(self, n: int):
        self.n = n
        self.columns = ["t", "delta", "S", "p_c1", "i_c1", "u_pcc"]
        for i in range(n):
            self.columns += [f"theta_{i+1}", f"varpi_{i+1}", f"V_{i+1}"]
        self.rows: list[tuple] = []
        self.aux: list[dict] = []
        self._arr = None

    def append(self, row: tuple, aux: dict) -> None:
        if self.rows and not row[0] > self.rows[-1][0]:
            return
        self.rows.append(row)
        self.aux.append(aux)
        self._arr = None

    def array(self) -> np.ndarray:
        if self._arr is None:
            self._arr = np.array(self.rows, dtype=float).reshape(-1, len(self.columns))
        return self._arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self.array()[:, self.columns.index(name)]

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class Summary:
    name: str
    final_mode: str
    final_S: int
    pll_stable: list[bool]
    pole_slip: list[bool]
    stable: bool
    diverged: bool
    t_final: float
    final_p_c1: float
    p_ref_error: float
    post_clearance_switches: int
    post_clearance_cvc_fraction: float
    post_clearance_pattern: str
    clearance_mode: str | None
    clearance_energy: list[float]
    clearance_energy_rad2: list[float]
    final_sep: list[float]
    final_sep_mode: str | None
    n_events: int
    equilibrium: dict
    cycles: list[dict] = field(default_factory=list)

    @property
    def pll(self) -> str:
        return "STABLE" if self.stable else "UNSTABLE"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pll"] = self.pll
        return d


@dataclass
class SimResult:
    config: ScenarioConfig
    trace: Trace
    events: list[Event]
    summary: Summary
    gflc_params: list[GflcParams]

    def context_for(self, snap: dict, mode: str) -> PllContext:
        cfg = self.config
        net = replace(cfg.net, u_g=snap["u_g"]) if snap["u_g"] != cfg.net.u_g else cfg.net
        return _context(net, cfg.gfmc, self.gflc_params, mode, snap)

    def snapshot_at(self, idx: int) -> dict:
        n = self.trace.n
        row = self.trace.rows[idx]
        snap = dict(self.trace.aux[idx])
        snap["t"] = row[0]
        snap["delta"] = row[1]
        snap["thetas"] = [row[6 + 3 * i] for i in range(n)]
        snap["varpis"] = [row[7 + 3 * i] for i in range(n)]
        return snap

    @property
    def mode_events(self) -> list[Event]:
        return [e for e in self.events if e.kind in (CVC_TO_CLC, CLC_TO_CVC)]


def _context(net, gfmc: GfmcParams, gflcs: Sequence[GflcParams], mode: str, snap: dict) -> PllContext:
    i_c1 = None
    if mode == CLC:
        ang = gfmc.epsilon if gfmc.vfdc_enabled else snap["delta"] + gfmc.eta_1
        i_c1 = Phasor(gfmc.i_max, ang)
    w_b = net.omega_b
    return PllContext(
        net=net,
        mode=mode,
        delta=snap["delta"],
        x_c2=tuple(g.x_c2 for g in gflcs),
        k_p=tuple(w_b * g.k_2p for g in gflcs),
        k_i=tuple(w_b * g.k_2i for g in gflcs),
        mags=tuple(snap["mags"]),
        offsets=tuple(snap["offsets"]),
        pinned=tuple(snap["pinned"]),
        i_c1=i_c1,
        u_c1=gfmc.u_set,
        derived=derive_params(net),
    )


# --- initialisation ---------------------------------------------------------


@dataclass
class Equilibrium:
    delta: float
    thetas: list[float]
    i_d_refs: list[float]
    residual: float


def solve_equilibrium(config: ScenarioConfig, kernel: Kernel | None = None, tol: float = 1e-9) -> Equilibrium:
    """Pre-fault CVC operating point: droop balance, PLL lock, and GFLC power set-points.

    Unknowns are delta, every PLL angle, and ``i_d`` of every GFLC with a
    power set-point.  Raises :class:`InfeasibleScenarioError` when no
    converged, stable, unsaturated point exists.
    """
    kern = kernel or default_kernel
    net, gfmc = config.net, config.gfmc
    dp = derive_params(net)
    n = len(config.gflcs)
    free = [j for j, p in enumerate(config.gflc_p_ref) if p is not None]
    w_b = net.omega_b
    params = list(config.gflcs)

    def unpack(x):
        delta = x[0]
        th = list(x[1 : 1 + n])
        i_d = [g.i_d_ref for g in params]
        for k, j in enumerate(free):
            i_d[j] = x[1 + n + k]
        return delta, th, i_d

    def arrays(delta, th, i_d):
        scal = _scal(net, dp, gfmc, CVC, net.u_g)
        gfl = np.array(
            [[g.x_c2, w_b * g.k_2p, w_b * g.k_2i, math.hypot(i_d[j], g.i_q_ref), math.atan2(-g.i_q_ref, i_d[j]), 0.0]
             for j, g in enumerate(params)]
        )
        y = np.array([delta] + th + [0.0] * n)
        return y, scal, gfl

    def residual(x):
        delta, th, i_d = unpack(x)
        y, scal, gfl = arrays(delta, th, i_d)
        dy = kern.rhs(y, scal, gfl)
        res = [dy[0] / (w_b * gfmc.m_p)]
        res += [dy[1 + n + j] / gfl[j, L.KI] for j in range(n)]
        if free:
            currents = [Phasor(gfl[j, L.MAG], th[j] + gfl[j, L.ANG]) for j in range(n)]
            sol = solve_cvc(delta, currents, net, dp, u_c1=gfmc.u_set, x_c2=[g.x_c2 for g in params])
            for j in free:
                res.append((sol.u_c2[j].z * currents[j].z.conjugate()).real - config.gflc_p_ref[j])
        return np.array(res)

    p_tot = sum(p if p is not None else g.i_d_ref for p, g in zip(config.gflc_p_ref, params))
    arg = min(0.95, (gfmc.p_ref + dp.alpha * p_tot) / (gfmc.u_set * net.u_g * dp.y_1g))
    d0 = math.asin(max(-0.95, arg))
    th0 = [dp.alpha * d0 + dp.l_v * (p if p is not None else g.i_d_ref) for p, g in zip(config.gflc_p_ref, params)]
    x0 = np.array([d0] + th0 + [config.gflc_p_ref[j] for j in free])
    sol = root(residual, x0, method="hybr", options={"xtol": 1e-14})
    res = float(np.max(np.abs(residual(sol.x))))
    if not np.isfinite(res) or res > tol:
        raise InfeasibleScenarioError(f"no pre-fault equilibrium (residual {res:.3g})")
    delta, th, i_d = unpack(sol.x)
    # reject unstable PLL roots and operating points that already saturate the GFMC
    snap = {"delta": delta, "mags": [], "offsets": [], "pinned": [False] * n}
    for j, g in enumerate(params):
        snap["mags"].append(math.hypot(i_d[j], g.i_q_ref))
        snap["offsets"].append(math.atan2(-g.i_q_ref, i_d[j]))
    ctx = _context(net, gfmc, params, CVC, snap)
    for j in range(n):
        try:
            ts = analysis.sep(ctx, j, th)
        except analysis.NoEquilibriumError as exc:
            raise InfeasibleScenarioError(str(exc)) from exc
        if abs(math.remainder(ts - th[j], 2 * math.pi)) > 1e-6:
            raise InfeasibleScenarioError("pre-fault solution is an unstable PLL equilibrium")
    y, scal, gfl = arrays(delta, th, i_d)
    if kern.guard(y, scal, gfl) >= 0:
        raise InfeasibleScenarioError("pre-fault operating point exceeds the GFMC current limit")
    return Equilibrium(delta, th, i_d, res)


def _scal(net: NetworkParams, dp, gfmc: GfmcParams, mode: str, u_g: float) -> np.ndarray:
    s = np.zeros(L.NS)
    s[L.W_B] = net.omega_b
    s[L.U_G] = u_g
    s[L.U_C1] = gfmc.u_set
    s[L.X_C1] = net.x_c1
    s[L.X_G] = net.x_g
    s[L.ALPHA] = dp.alpha
    s[L.Y1G] = dp.y_1g
    s[L.I1MAX] = gfmc.i_max
    s[L.C1_PIN] = 1.0 if gfmc.vfdc_enabled else 0.0
    s[L.C1_VAL] = gfmc.epsilon if gfmc.vfdc_enabled else gfmc.eta_1
    s[L.M_P] = gfmc.m_p
    s[L.P_REF] = gfmc.p_ref
    s[L.MODE] = 0.0 if mode == CVC else 1.0
    return s


# --- the simulator ------------------------------------------------------------


class Simulator:
    """Stateful runner for one scenario; use :func:`run_scenario` for the common case."""

    def __init__(
        self,
        config: ScenarioConfig,
        kernel: Kernel | None = None,
        initial: SimState | None = None,
        schedule: bool = True,
        equilibrium: "Equilibrium | None" = None,
    ):
        config.validate()
        self.cfg = config
        self.kernel = kernel or default_kernel
        self.net = config.net
        self.dp = derive_params(config.net)
        self.n = n = len(config.gflcs)
        self.gfmc = config.gfmc
        self.dt = config.sim.dt

        eq = equilibrium or solve_equilibrium(config, self.kernel)
        self.equilibrium = eq
        self.params = [replace(g, i_d_ref=eq.i_d_refs[j]) for j, g in enumerate(config.gflcs)]
        self.theta_ref = list(eq.thetas)

        if initial is None:
            initial = SimState(0.0, GfmcState(eq.delta, CVC), [GflcState(th) for th in eq.thetas])
        self.t = initial.t
        self.k = int(round(initial.t / self.dt))
        self.mode = initial.gfmc.mode
        self.y = np.array([initial.gfmc.delta] + [g.theta for g in initial.gflcs] + [g.varpi for g in initial.gflcs])
        self.ctrl = [g.ctrl_mode for g in initial.gflcs]
        self.snap = [g.theta_snapshot for g in initial.gflcs]
        self.i_d_pre = [p.i_d_ref for p in self.params]
        self.lvrt = [(p.i_d_ref, p.i_q_ref) for p in self.params]
        self.u_g = self.net.u_g
        self.fault_active = False
        self.u_meas = None
        self.y_prev = np.empty_like(self.y)

        self.trace = Trace(n)
        self.events: list[Event] = []
        self.last_event_t = -math.inf
        self.diverged = False
        self.diverged_at = math.nan
        self.clearance_snapshot = None
        self.clearance_mode = None
        self._settled_since = None

        self.schedule = {}
        f = config.fault
        if schedule and f is not None:
            k_on = int(round(f.t_start / self.dt))
            k_off = int(round((f.t_start + f.duration) / self.dt))
            self.schedule.setdefault(k_on, []).append(FAULT_ON)
            self.schedule.setdefault(k_off, []).append(FAULT_CLEAR)
            holds = {int(round(p.vfdc_hold / self.dt)) for p in self.params if p.vfdc_enabled}
            for h in holds:
                self.schedule.setdefault(k_off + h, []).append("HOLD_END")
        self.k_end = int(round(config.sim.t_end / self.dt))

    # -- packing -------------------------------------------------------------

    def _refs(self, j: int) -> tuple[float, float]:
        if self.fault_active:
            return self.lvrt[j]
        p = self.params[j]
        return p.i_d_ref, p.i_q_ref

    def _current_layout(self):
        mags, offs, pins = [], [], []
        for j, p in enumerate(self.params):
            i_d, i_q = self._refs(j)
            mag = min(math.hypot(i_d, i_q), p.i_max)
            eta = math.atan2(-i_q, i_d)
            pinned = p.vfdc_enabled and self.ctrl[j] in (CtrlMode.LVRT, CtrlMode.VFDC_HOLD)
            mags.append(mag)
            offs.append(self.snap[j] + eta if pinned else eta)
            pins.append(pinned)
        return mags, offs, pins

    def pack(self, mode: str | None = None):
        mode = mode or self.mode
        scal = _scal(self.net, self.dp, self.gfmc, mode, self.u_g)
        mags, offs, pins = self._current_layout()
        gfl = np.empty((self.n, L.NG))
        w_b = self.net.omega_b
        for j, p in enumerate(self.params):
            gfl[j] = (p.x_c2, w_b * p.k_2p, w_b * p.k_2i, mags[j], offs[j], 1.0 if pins[j] else 0.0)
        return scal, gfl

    def snapshot(self) -> dict:
        mags, offs, pins = self._current_layout()
        n = self.n
        return {
            "t": self.t,
            "delta": float(self.y[0]),
            "thetas": [float(v) for v in self.y[1 : 1 + n]],
            "varpis": [float(v) for v in self.y[1 + n :]],
            "mode": self.mode,
            "ctrl": [c.value for c in self.ctrl],
            "mags": mags,
            "offsets": offs,
            "pinned": pins,
            "u_g": self.u_g,
        }

    def state(self) -> SimState:
        n = self.n
        return SimState(
            self.t,
            GfmcState(float(self.y[0]), self.mode),
            [GflcState(float(self.y[1 + j]), float(self.y[1 + n + j]), self.ctrl[j], self.snap[j]) for j in range(n)],
        )

    def _net_now(self) -> NetworkParams:
        return self.net if self.u_g == self.net.u_g else replace(self.net, u_g=self.u_g)

    def network(self):
        mags, offs, pins = self._current_layout()
        n = self.n
        currents = [Phasor(mags[j], offs[j] if pins[j] else self.y[1 + j] + offs[j]) for j in range(n)]
        net = self._net_now()
        x_c2 = [p.x_c2 for p in self.params]
        if self.mode == CVC:
            return solve_cvc(self.y[0], currents, net, self.dp, u_c1=self.gfmc.u_set, x_c2=x_c2)
        ang = self.gfmc.epsilon if self.gfmc.vfdc_enabled else self.y[0] + self.gfmc.eta_1
        return solve_clc(Phasor(self.gfmc.i_max, ang), currents, net, x_c2=x_c2)

    # -- dynamics backends -------------------------------------------------------

    def _rhs_reference(self, y, scal, gfl):
        n = self.n
        mode = CVC if scal[L.MODE] == 0.0 else CLC
        snap = {"delta": y[0], "mags": gfl[:, L.MAG], "offsets": gfl[:, L.ANG], "pinned": gfl[:, L.PIN] != 0.0}
        ctx = _context(self._net_now(), self.gfmc, self.params, mode, snap)
        dy = np.empty_like(y)
        dy[0] = self.kernel.rhs(y, scal, gfl)[0]
        _, acc = pll_rhs_reference(ctx, y[1 : 1 + n], y[1 + n :])
        dy[1 : 1 + n] = y[1 + n :]
        dy[1 + n :] = acc
        return dy

    def _rk4(self, y, h, scal, gfl):
        if self.cfg.sim.model == REDUCED:
            self.kernel.rk4_step(y, h, scal, gfl)
            return
        f = self._rhs_reference
        k1 = f(y, scal, gfl)
        k2 = f(y + 0.5 * h * k1, scal, gfl)
        k3 = f(y + 0.5 * h * k2, scal, gfl)
        k4 = f(y + h * k3, scal, gfl)
        y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def _advance(self, nsteps, scal, gfl, guard_dir):
        if self.cfg.sim.model == REDUCED:
            return self.kernel.advance(self.y, self.dt, nsteps, scal, gfl, guard_dir, self.y_prev)
        for k in range(nsteps):
            self.y_prev[:] = self.y
            self._rk4(self.y, self.dt, scal, gfl)
            if not np.all(np.isfinite(self.y)):
                return k + 1, 2
            if guard_dir and self._fired(self.kernel.guard(self.y, scal, gfl)):
                return k + 1, 1
        return nsteps, 0

    def _fired(self, g: float, mode: str | None = None) -> bool:
        return g >= 0.0 if (mode or self.mode) == CVC else g < 0.0

    # -- events ----------------------------------------------------------------

    def _log(self, kind: str, unit: str = "gfmc", **extra) -> None:
        snap = self.snapshot()
        snap.update(extra)
        self.events.append(Event(self.t, kind, snap, unit))

    def _switch(self, g: float) -> None:
        direction = CVC_TO_CLC if self.mode == CVC else CLC_TO_CVC
        before = self.mode
        st = apply_transition(GfmcState(float(self.y[0]), self.mode), direction, g)
        self.mode = st.mode
        self.last_event_t = self.t
        self._log(direction, mode_before=before)
        if self.gfmc.vfdc_enabled:
            self._log(VFDC_ON if self.mode == CLC else VFDC_OFF, unit="gfmc")
        self._record()

    def _resolve_step(self, h_total: float) -> None:
        """Integrate ``h_total`` from the current state, stopping at every guard crossing."""
        tol = self.cfg.sim.event_tol
        sep_min = self.cfg.sim.min_event_sep
        remaining = h_total
        while remaining > 0.0:
            scal, gfl = self.pack()
            y0 = self.y.copy()
            trial = y0.copy()
            self._rk4(trial, remaining, scal, gfl)

            def fired_at(h):
                if self.t + h - self.last_event_t < sep_min:
                    return False
                yt = y0.copy()
                self._rk4(yt, h, scal, gfl)
                return self._fired(self.kernel.guard(yt, scal, gfl))

            if not (self.t + remaining - self.last_event_t >= sep_min and self._fired(self.kernel.guard(trial, scal, gfl))):
                self.y[:] = trial
                self.t += remaining
                return
            lo, hi = 0.0, remaining
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if fired_at(mid):
                    hi = mid
                else:
                    lo = mid
            self.y[:] = y0
            self._rk4(self.y, hi, scal, gfl)
            self.t += hi
            remaining -= hi
            self._switch(self.kernel.guard(self.y, scal, gfl))
            if remaining <= 1e-15:
                return

    def _scheduled(self, kinds: list[str]) -> None:
        for kind in kinds:
            if kind == FAULT_ON:
                self.u_meas = self.network().u_pcc.magnitude
                self.fault_active = True
                self.u_g = self.cfg.fault.rho * self.net.u_g
                self._log(FAULT_ON)
                for j, p in enumerate(self.params):
                    self.ctrl[j] = next_ctrl_mode(self.ctrl[j], CtrlMode.LVRT)
                    self.i_d_pre[j] = p.i_d_ref
                    if p.vfdc_enabled:
                        self.snap[j] = float(self.y[1 + j])
                        self._log(VFDC_ON, unit=f"gflc{j+1}")
                self._refresh_lvrt()
            elif kind == FAULT_CLEAR:
                self.fault_active = False
                self.u_g = self.net.u_g
                for j, p in enumerate(self.params):
                    target = CtrlMode.VFDC_HOLD if p.vfdc_enabled else CtrlMode.NORMAL
                    self.ctrl[j] = next_ctrl_mode(self.ctrl[j], target)
                if self.cfg.sim.vfdc_snapshot == "oracle":
                    self._oracle_snapshots()
                self._log(FAULT_CLEAR)
                self.clearance_snapshot = self.events[-1].snapshot
                self.clearance_mode = self.mode
            elif kind == "HOLD_END":
                for j, p in enumerate(self.params):
                    if self.ctrl[j] == CtrlMode.VFDC_HOLD and self.t >= self._hold_end(p) - 0.5 * self.dt:
                        self.ctrl[j] = next_ctrl_mode(self.ctrl[j], CtrlMode.NORMAL)
                        self._log(VFDC_OFF, unit=f"gflc{j+1}")
        self._check_guard()

    def _hold_end(self, p: GflcParams) -> float:
        f = self.cfg.fault
        return f.t_start + f.duration + p.vfdc_hold

    def _oracle_snapshots(self) -> None:
        snap = self.snapshot()
        snap["pinned"] = [False] * self.n
        snap["offsets"] = [math.atan2(-p.i_q_ref, p.i_d_ref) for p in self.params]
        snap["mags"] = [math.hypot(p.i_d_ref, p.i_q_ref) for p in self.params]
        ctx = _context(self.net, self.gfmc, self.params, CVC, snap)
        for j, p in enumerate(self.params):
            if p.vfdc_enabled:
                try:
                    self.snap[j] = analysis.sep(ctx, j, snap["thetas"])
                except analysis.NoEquilibriumError:
                    pass

    def _refresh_lvrt(self) -> None:
        u = self.network().u_pcc.magnitude
        tc = self.cfg.sim.lvrt_filter_tc
        if self.u_meas is None or tc <= 0:
            self.u_meas = u
        else:
            self.u_meas += (1.0 - math.exp(-self.dt / tc)) * (u - self.u_meas)
        self.lvrt = [lvrt_references(p, self.u_meas, self.i_d_pre[j]) for j, p in enumerate(self.params)]
        self._check_guard()

    def _check_guard(self) -> None:
        """Switch at once if a reference change (not motion) put the guard across zero."""
        if self.t - self.last_event_t < self.cfg.sim.min_event_sep:
            return
        scal, gfl = self.pack()
        g = self.kernel.guard(self.y, scal, gfl)
        if self._fired(g):
            self._switch(g)

    # -- recording ---------------------------------------------------------------

    def _record(self) -> None:
        n = self.n
        sol = self.network()
        p_c1 = (sol.u_c1_terminal.z * sol.i_c1.z.conjugate()).real
        snap = self.snapshot()
        row = [self.t, float(self.y[0]), 1.0 if self.mode == CVC else 0.0, p_c1, sol.i_c1.magnitude, sol.u_pcc.magnitude]
        try:
            ctx = _context(self._net_now(), self.gfmc, self.params, self.mode, snap)
        except Exception:  # noqa: BLE001 - energy is diagnostic only
            ctx = None
        for j in range(n):
            v = math.nan
            if ctx is not None and np.all(np.isfinite(self.y)):
                try:
                    v = analysis.lyapunov_energy(
                        snap["thetas"][j], snap["varpis"][j], ctx, j, snap["thetas"], scale="area", method="closed"
                    )
                except (analysis.NoEquilibriumError, ValueError):
                    pass
            row += [snap["thetas"][j], snap["varpis"][j], v]
        self.trace.append(tuple(row), {k: snap[k] for k in ("mags", "offsets", "pinned", "u_g", "mode")})

    # -- main loop ---------------------------------------------------------------

    def _check_divergence(self) -> bool:
        n = self.n
        if not np.all(np.isfinite(self.y)):
            return True
        lim = self.cfg.sim.diverge_angle
        return any(abs(self.y[1 + j] - self.theta_ref[j]) > lim for j in range(n))

    def _settled(self) -> bool:
        s = self.cfg.sim
        n = self.n
        if self.fault_active or any(c != CtrlMode.NORMAL for c in self.ctrl):
            return False
        w = np.abs(self.y[1 + n :]) / self.net.omega_b
        return bool(np.all(w < 0.1 * s.freq_tol))

    def step(self) -> None:
        """Advance one grid step (with any scheduled or guard events on it)."""
        if self.k in self.schedule:
            self._scheduled(self.schedule.pop(self.k))
        if self.fault_active:
            self._refresh_lvrt()
        self._resolve_step(self.dt)
        self.k += 1
        self.t = self.k * self.dt

    def run(self) -> SimResult:
        dec = self.cfg.outputs.decimation
        s = self.cfg.sim
        self._record()
        settle_steps = int(round(s.settle_window / self.dt))
        while self.k < self.k_end:
            if self.k in self.schedule:
                self._scheduled(self.schedule.pop(self.k))
            if self.fault_active:
                self._refresh_lvrt()
                chunk = 1
            else:
                nxt = min([k for k in self.schedule if k > self.k] + [self.k_end])
                chunk = min(nxt - self.k, dec - self.k % dec)
            scal, gfl = self.pack()
            steps, status = self._advance(chunk, scal, gfl, 1 if self.mode == CVC else -1)
            if status == 1:
                self.y[:] = self.y_prev
                self.t = (self.k + steps - 1) * self.dt
                self._resolve_step(self.dt)
            self.k += steps
            self.t = self.k * self.dt
            if status == 2 or self._check_divergence():
                self.diverged = True
                self.diverged_at = self.t
                if np.all(np.isfinite(self.y)):
                    self._record()
                break
            if self.k % dec == 0:
                self._record()
            if s.early_exit and not self.schedule and self._settled():
                if self._settled_since is None:
                    self._settled_since = self.k
                elif self.k - self._settled_since >= settle_steps:
                    break
            else:
                self._settled_since = None
        if self.trace.rows[-1][0] < self.t and np.all(np.isfinite(self.y)):
            self._record()
        result = SimResult(self.cfg, self.trace, self.events, None, self.params)
        result.summary = self._summarize(result)
        return result

    # -- classification ------------------------------------------------------------

    def _final_equilibrium(self):
        """Equilibrium of the final mode nearest the final state (delta free)."""
        n = self.n
        mode = self.mode
        scal, gfl = self.pack(mode)
        w_b = self.net.omega_b

        def res(x):
            y = np.concatenate([x, np.zeros(n)])
            dy = self.kernel.rhs(y, scal, gfl)
            return np.concatenate([[dy[0] / (w_b * self.gfmc.m_p)], dy[1 + n :] / gfl[:, L.KI]])

        sol = root(res, self.y[: 1 + n].copy(), method="hybr", options={"xtol": 1e-13})
        # hybr reports "no progress" when started on the root, so judge by residual
        if not np.all(np.isfinite(sol.x)) or np.max(np.abs(res(sol.x))) > 1e-8:
            return None
        return sol.x

    def _summarize(self, result: SimResult) -> Summary:
        s = self.cfg.sim
        n = self.n
        tr = self.trace
        t = tr["t"]
        w_b = self.net.omega_b
        eq = None if self.diverged else self._final_equilibrium()
        stable = [False] * n
        final_sep = [math.nan] * n
        if eq is not None:
            final_sep = [float(v) for v in eq[1:]]
            win = t >= t[-1] - s.settle_window - 1e-12
            for j in range(n):
                w_ok = np.all(np.abs(tr[f"varpi_{j+1}"][win]) / w_b < s.freq_tol)
                th_ok = np.all(np.abs(tr[f"theta_{j+1}"][win] - final_sep[j]) < s.angle_tol)
                stable[j] = bool(w_ok and th_ok and t[-1] - t[0] >= s.settle_window)
        # settling one or more cycles away from the initial angle is a pole slip
        slips = [bool(abs(final_sep[j] - self.theta_ref[j]) > math.pi) for j in range(n)]
        stable = [ok and not sl for ok, sl in zip(stable, slips)]
        all_stable = all(stable) and not self.diverged

        f = self.cfg.fault
        t_clear = f.t_start + f.duration if f is not None else 0.0
        post = [e for e in result.mode_events if e.t > t_clear]
        cvc_frac = self._cvc_fraction(t_clear)
        if len(post) >= 4:
            pattern = "ALTERNATING"
        elif cvc_frac >= 0.5:
            pattern = "CVC"
        else:
            pattern = "CLC"

        e_area, e_rad = [math.nan] * n, [math.nan] * n
        if self.clearance_snapshot is not None:
            snap = self.clearance_snapshot
            for j in range(n):
                try:
                    ctx = result.context_for(snap, self.clearance_mode)
                    e_area[j] = analysis.lyapunov_energy(snap["thetas"][j], snap["varpis"][j], ctx, j, snap["thetas"], scale="area")
                    e_rad[j] = analysis.lyapunov_energy(snap["thetas"][j], snap["varpis"][j], ctx, j, snap["thetas"], scale="rad2")
                except analysis.NoEquilibriumError:
                    pass

        p_c1 = float(tr["p_c1"][-1])
        cycles = []
        try:
            audit = analysis.switching_energy_audit(result)
            cycles = [asdict(c) for c in audit.cycles]
        except Exception as exc:  # noqa: BLE001 - audit is a report, not part of the run
            log.warning("energy audit failed: %s", exc)

        return Summary(
            name=self.cfg.name,
            final_mode=self.mode,
            final_S=1 if self.mode == CVC else 0,
            pll_stable=stable,
            pole_slip=slips,
            stable=all_stable,
            diverged=self.diverged,
            t_final=self.t,
            final_p_c1=p_c1,
            p_ref_error=abs(p_c1 - self.gfmc.p_ref),
            post_clearance_switches=len(post),
            post_clearance_cvc_fraction=cvc_frac,
            post_clearance_pattern=pattern,
            clearance_mode=self.clearance_mode,
            clearance_energy=e_area,
            clearance_energy_rad2=e_rad,
            final_sep=final_sep,
            final_sep_mode=self.mode if all_stable else None,
            n_events=len(self.events),
            equilibrium={"delta": self.equilibrium.delta, "thetas": self.equilibrium.thetas,
                         "i_d_refs": self.equilibrium.i_d_refs, "residual": self.equilibrium.residual},
            cycles=cycles,
        )

    def _cvc_fraction(self, t0: float) -> float:
        """Share of ``[t0, t_final]`` spent in CVC, from the mode events."""
        if self.t <= t0:
            return 1.0 if self.mode == CVC else 0.0
        mode_at = CVC
        for e in self.events:
            if e.kind in (CVC_TO_CLC, CLC_TO_CVC) and e.t <= t0:
                mode_at = e.snapshot["mode"]
        total, last, cur = 0.0, t0, mode_at
        for e in self.events:
            if e.kind in (CVC_TO_CLC, CLC_TO_CVC) and e.t > t0:
                if cur == CVC:
                    total += e.t - last
                last, cur = e.t, e.snapshot["mode"]
        if cur == CVC:
            total += self.t - last
        return total / (self.t - t0)


def run_scenario(
    config: ScenarioConfig,
    kernel: Kernel | None = None,
    initial: SimState | None = None,
    equilibrium: Equilibrium | None = None,
) -> SimResult:
    """Initialise at the pre-fault equilibrium (or ``initial``) and run to ``t_end``."""
    return Simulator(config, kernel, initial, equilibrium=equilibrium).run()


def step(state: SimState, config: ScenarioConfig, kernel: Kernel | None = None) -> SimState:
    """One grid step from ``state`` (fault schedule ignored; network at nominal voltage)."""
    sim = Simulator(config, kernel, initial=state, schedule=False)
    sim.step()
    return sim.state()


def multi_gflc_coupling(thetas: Sequence[float], currents: Sequence[Phasor], i: int) -> float:
    """Sum of the other GFLCs' currents projected on GFLC ``i``'s d axis."""
    return sum(c.magnitude * math.cos(thetas[i] - c.angle) for j, c in enumerate(currents) if j != i)


@dataclass
class CrossCheckReport:
    samples: int
    max_rel_dev: float
    max_rel_dev_at_rest: float
    ok: bool


def cross_check(config: ScenarioConfig, n_samples: int = 1000, seed: int = 0, tol: float = 1e-5) -> CrossCheckReport:
    """Compare reduced and reference right-hand sides on states sampled along a run.

    States come from the scenario's trace (every mode and current regime
    visited), with the PLL frequencies additionally set to zero on every
    fourth sample to isolate the static part.
    """
    res = run_scenario(config)
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, len(res.trace), size=n_samples)
    n = len(config.gflcs)
    worst, worst_rest = 0.0, 0.0
    for k, idx in enumerate(rows):
        snap = res.snapshot_at(int(idx))
        mode = snap["mode"] if k % 2 == 0 else (CLC if snap["mode"] == CVC else CVC)
        if k % 4 == 3:
            snap["varpis"] = [0.0] * n
        ctx = res.context_for(snap, mode)
        try:
            _, a_red = pll_rhs_reduced(ctx, snap["thetas"], snap["varpis"])
        except ValueError:
            continue
        _, a_ref = pll_rhs_reference(ctx, snap["thetas"], snap["varpis"])
        scale = np.maximum(np.abs(a_ref), np.array(ctx.k_i) * 1e-3)
        dev = float(np.max(np.abs(a_red - a_ref) / scale))
        if k % 4 == 3:
            worst_rest = max(worst_rest, dev)
        worst = max(worst, dev)
    return CrossCheckReport(n_samples, worst, worst_rest, worst < tol)


def rk4_order_ratio(
    config: ScenarioConfig,
    dt: float = 5e-4,
    t_end: float = 0.2,
    theta_kick: float = 0.3,
    varpi_kick: float = 20.0,
    kernel: Kernel | None = None,
) -> float:
    """Self-convergence ratio ``(x_h - x_{h/2}) / (x_{h/2} - x_{h/4})`` of the first PLL angle.

    A fault-free run from a kicked operating point stays on one smooth
    interval; classical RK4 gives a ratio near 16.
    """
    cfg = copy.deepcopy(config)
    cfg.fault = None
    eq = solve_equilibrium(cfg, kernel)
    finals = []
    for h in (dt, dt / 2, dt / 4):
        c = copy.deepcopy(cfg)
        c.sim = replace(c.sim, dt=h, t_end=t_end, early_exit=False)
        c.outputs = replace(c.outputs, trace_csv=None, events_csv=None, decimation=1)
        gflcs = [GflcState(th) for th in eq.thetas]
        gflcs[0] = GflcState(eq.thetas[0] + theta_kick, varpi_kick)
        res = run_scenario(c, kernel, initial=SimState(0.0, GfmcState(eq.delta, CVC), gflcs), equilibrium=eq)
        if res.mode_events:
            raise ValueError("the kicked run switches mode; use a smaller kick")
        finals.append(float(res.trace["theta_1"][-1]))
    return (finals[0] - finals[1]) / (finals[1] - finals[2])
