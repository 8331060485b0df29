"""Brute-force basins of attraction and critical clearing times.

Every cell of an initial-condition grid is simulated as an independent,
fault-free run from ``(theta0, varpi0)`` with the GFMC at its operating angle.
Cells run in a process pool and are merged by index, so a map is identical
whatever the worker count.  The maps are the numerical ground truth for the
damping-line boundaries of :mod:`gflswitch.analysis`.
"""

from __future__ import annotations

import copy
import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import analysis
from .converters import GflcState, GfmcState
from .phasor import CLC, CVC
from .simulator import Equilibrium, ScenarioConfig, SimState, _context, run_scenario, solve_equilibrium

STABLE_CVC = "STABLE_CVC"
STABLE_CLC = "STABLE_CLC"
UNSTABLE = "UNSTABLE"

WORKERS_ENV = "GFLSWITCH_WORKERS"
CCT_TOL = 1e-4


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


@dataclass(frozen=True)
class BasinGrid:
    """Initial-condition grid; ``varpi`` is in pu of the base angular frequency.

    ``theta_centre=None`` centres the angle axis on the PLL operating angle.
    """

    theta_steps: int = 201
    varpi_steps: int = 201
    theta_half_span: float = math.pi
    varpi_half_span: float = 0.5
    theta_centre: float | None = None

    def axes(self, centre: float) -> tuple[np.ndarray, np.ndarray]:
        c = centre if self.theta_centre is None else self.theta_centre
        th = np.linspace(c - self.theta_half_span, c + self.theta_half_span, self.theta_steps)
        w = np.linspace(-self.varpi_half_span, self.varpi_half_span, self.varpi_steps)
        return th, w


@dataclass(frozen=True)
class BasinCell:
    theta0: float
    varpi0: float  # pu
    cls: str
    borderline: bool
    final_theta: float
    final_mode: str


@dataclass
class BasinMap:
    grid: BasinGrid
    start_mode: str
    theta_s: float
    delta: float
    cells: list[BasinCell]
    name: str = ""

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.theta_steps, self.grid.varpi_steps

    def classes(self) -> np.ndarray:
        """Class labels as an array indexed ``[theta_index, varpi_index]``."""
        return np.array([c.cls for c in self.cells], dtype=object).reshape(self.shape)

    def counts(self) -> dict[str, int]:
        out = {STABLE_CVC: 0, STABLE_CLC: 0, UNSTABLE: 0, "borderline": 0}
        for c in self.cells:
            out[c.cls] += 1
            out["borderline"] += c.borderline
        return out

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta0", "varpi0", "class", "final_theta", "final_mode"])
            for c in self.cells:
                w.writerow([f"{c.theta0:.9g}", f"{c.varpi0:.9g}", c.cls, f"{c.final_theta:.9g}", c.final_mode])


def _free_run_config(config: ScenarioConfig, t_end: float = 5.0) -> ScenarioConfig:
    cfg = copy.deepcopy(config)
    cfg.fault = None
    cfg.sim = replace(cfg.sim, t_end=t_end, early_exit=True)
    # the basin only needs the final state; sparse traces keep cells cheap
    cfg.outputs = replace(cfg.outputs, trace_csv=None, events_csv=None, decimation=max(cfg.outputs.decimation, 200))
    return cfg


def classify(summary, final_mode: str) -> tuple[str, bool]:
    """Cell class from a run summary; non-converged, non-diverged runs are borderline."""
    if summary.stable:
        return (STABLE_CVC if final_mode == CVC else STABLE_CLC), False
    return UNSTABLE, not summary.diverged and not any(summary.pole_slip)


def _run_cell(args) -> BasinCell:
    cfg, eq, start_mode, th0, w0 = args
    w_b = cfg.net.omega_b
    init = SimState(0.0, GfmcState(eq.delta, start_mode), [GflcState(th0, w0 * w_b)] + [
        GflcState(th) for th in eq.thetas[1:]
    ])
    res = run_scenario(cfg, initial=init, equilibrium=eq)
    s = res.summary
    cls, border = classify(s, s.final_mode)
    final_theta = float(res.trace["theta_1"][-1]) if len(res.trace) else math.nan
    return BasinCell(float(th0), float(w0), cls, border, final_theta, s.final_mode)


def _pool_map(fn, tasks: list, workers: int | None, chunksize: int | None = None) -> list:
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = chunksize or max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=chunk))


def map_basin(
    config: ScenarioConfig,
    grid: BasinGrid | None = None,
    start_mode: str = CVC,
    workers: int | None = None,
    horizon: float = 5.0,
) -> BasinMap:
    """Classify every ``(theta0, varpi0)`` cell of ``grid`` for the first GFLC.

    Other GFLCs start at their operating angles; the GFMC starts at its
    operating angle in ``start_mode`` and switches freely from there.
    """
    grid = grid or BasinGrid()
    cfg = _free_run_config(config, horizon)
    eq = solve_equilibrium(cfg)
    th_axis, w_axis = grid.axes(eq.thetas[0])
    tasks = [(cfg, eq, start_mode, th, w) for th in th_axis for w in w_axis]
    cells = _pool_map(_run_cell, tasks, workers)
    return BasinMap(grid, start_mode, float(eq.thetas[0]), float(eq.delta), cells, name=config.name)


# --- energy criterion against the map ----------------------------------------


@dataclass
class ConservativenessReport:
    mode: str
    variant: str
    v_max: float
    theta_max: float
    inside: int
    inside_stable: int
    violations: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def fraction(self) -> float:
        return self.inside_stable / self.inside if self.inside else 1.0


def operating_context(config: ScenarioConfig, mode: str, equilibrium: Equilibrium | None = None):
    """PLL context at the pre-fault operating point with the GFMC forced into ``mode``."""
    eq = equilibrium or solve_equilibrium(config)
    params = [replace(g, i_d_ref=eq.i_d_refs[j]) for j, g in enumerate(config.gflcs)]
    mags = [math.hypot(p.i_d_ref, p.i_q_ref) for p in params]
    offs = [math.atan2(-p.i_q_ref, p.i_d_ref) for p in params]
    snap = {"delta": eq.delta, "thetas": list(eq.thetas), "mags": mags, "offsets": offs, "pinned": [False] * len(params)}
    return _context(config.net, config.gfmc, params, mode, snap), eq


def energy_conservativeness(
    bmap: BasinMap, config: ScenarioConfig, mode: str = CLC, variant: str = analysis.BASE
) -> ConservativenessReport:
    """Share of cells with energy below ``V_max`` of ``mode`` that the map calls stable.

    Energies use the per-rad**2 scale, with each cell's ``varpi0`` converted to rad/s.
    """
    ctx, eq = operating_context(config, mode)
    thetas = list(eq.thetas)
    line, bnd = analysis.boundary_for(ctx, 0, thetas, variant)
    w_b = config.net.omega_b
    inside = stable = 0
    bad = []
    for c in bmap.cells:
        th = list(thetas)
        th[0] = c.theta0
        v = analysis.lyapunov_energy(c.theta0, c.varpi0 * w_b, ctx, 0, th, line.theta_s, method="closed")
        if bnd.theta_min < c.theta0 < bnd.theta_max and v < bnd.v_max:
            inside += 1
            if c.cls != UNSTABLE:
                stable += 1
            else:
                bad.append((c.theta0, c.varpi0, v))
    return ConservativenessReport(mode, variant, bnd.v_max, bnd.theta_max, inside, stable, bad)


# --- critical clearing time --------------------------------------------------


@dataclass
class ClearingSweep:
    """``bracket`` always holds the critical duration, open-ended when it is out of range."""

    table: list[tuple[float, bool]]
    critical: float | None
    bracket: tuple[float, float] | None
    monotone: bool
    violations: list[float]


def _fault_outcome(args) -> bool:
    cfg, eq, t_c = args
    c = copy.deepcopy(cfg)
    c.fault = replace(c.fault, duration=float(t_c))
    return bool(run_scenario(c, equilibrium=eq).summary.stable)


def critical_clearing_sweep(
    config: ScenarioConfig,
    durations: Sequence[float] | Iterable[float],
    workers: int | None = None,
    tol: float = CCT_TOL,
    horizon: float = 5.0,
) -> ClearingSweep:
    """Outcome per fault duration, then bisection between the last stable and first unstable one.

    Outcomes are assumed monotone in the duration; stable outcomes after the
    first unstable one are reported in ``violations``.
    """
    if config.fault is None:
        raise ValueError("critical_clearing_sweep needs a fault in the config")
    cfg = copy.deepcopy(config)
    cfg.sim = replace(cfg.sim, t_end=max(horizon, cfg.fault.t_start + max(durations) + 1.0), early_exit=True)
    cfg.outputs = replace(cfg.outputs, trace_csv=None, events_csv=None, decimation=max(cfg.outputs.decimation, 200))
    eq = solve_equilibrium(cfg)
    ts = sorted(float(t) for t in durations)
    outcomes = _pool_map(_fault_outcome, [(cfg, eq, t) for t in ts], workers, chunksize=1)
    table = list(zip(ts, outcomes))

    first_bad = next((k for k, ok in enumerate(outcomes) if not ok), None)
    if first_bad is None:
        # stable over the whole range: the critical time lies beyond it
        return ClearingSweep(table, None, (ts[-1], math.inf), True, [])
    violations = [t for t, ok in table[first_bad + 1 :] if ok]
    if first_bad == 0:
        return ClearingSweep(table, None, (0.0, ts[0]), not violations, violations)
    lo, hi = ts[first_bad - 1], ts[first_bad]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _fault_outcome((cfg, eq, mid)):
            lo = mid
        else:
            hi = mid
    return ClearingSweep(table, lo, (lo, hi), not violations, violations)
