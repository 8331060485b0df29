"""Command-line front end: ``gflswitch run|analyze|basin|sweep``.

Exit codes: 0 on completion (an unstable PLL is a result, not an error),
2 for a bad config or unknown case, 3 when no pre-fault operating point
exists, 4 for anything else.  ``GFLSWITCH_WORKERS`` sets the worker count of
the basin and sweep commands.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from dataclasses import replace

from . import analysis, basin
from .phasor import CLC, CVC, InvalidParameterError
from .presets import PRESET_NAMES, preset
from .records import (
    ConfigError,
    load_config,
    parse_range,
    set_param,
    summary_document,
    to_plain,
    write_events_csv,
    write_json,
    write_trace_csv,
)
from .simulator import REDUCED, REFERENCE, InfeasibleScenarioError, ScenarioConfig, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 2, 3, 4

log = logging.getLogger("gflswitch")


def _config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif getattr(args, "case", None):
        try:
            cfg = preset(args.case)
        except KeyError as exc:
            raise ConfigError(f"unknown case {args.case!r}; choose from {', '.join(PRESET_NAMES)}") from exc
    else:
        raise ConfigError("give --case or --config")
    vfdc = getattr(args, "vfdc", None)
    if vfdc is not None:
        cfg = cfg.with_vfdc(vfdc == "on")
    model = getattr(args, "model", None)
    if model is not None:
        cfg.sim = replace(cfg.sim, model=REFERENCE if model == "reference" else REDUCED)
    return cfg


def _outdir(path: str | None) -> str | None:
    if path:
        os.makedirs(path, exist_ok=True)
    return path


# --- commands ---------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = _config(args)
    res = run_scenario(cfg)
    doc = summary_document(res)
    out = _outdir(args.out)
    if out:
        write_trace_csv(res.trace, os.path.join(out, "trace.csv"))
        write_events_csv(res.events, os.path.join(out, "events.csv"))
        write_json(doc, os.path.join(out, "summary.json"))
    s = res.summary
    print(f"case={s.name or '-'} final_mode={s.final_mode} pll={s.pll} pattern={s.post_clearance_pattern} "
          f"switches={s.post_clearance_switches} diverged={s.diverged}")
    return EXIT_OK


def stability_report(cfg: ScenarioConfig) -> dict:
    """SEPs, damping lines and boundaries at the operating point, both modes and all variants."""
    report: dict = {"name": cfg.name, "modes": {}}
    for mode in (CVC, CLC):
        ctx, eq = basin.operating_context(cfg, mode)
        thetas = list(eq.thetas)
        entry: dict = {"delta": eq.delta, "gflcs": []}
        for i in range(len(cfg.gflcs)):
            g: dict = {}
            try:
                g["theta_s"] = analysis.sep(ctx, i, thetas)
            except analysis.NoEquilibriumError as exc:
                g["theta_s"] = None
                g["error"] = str(exc)
                entry["gflcs"].append(g)
                continue
            for variant in (analysis.BASE, analysis.MULTI, analysis.VFDC):
                line, bnd = analysis.boundary_for(ctx, i, thetas, variant)
                g[variant] = {
                    "intercept": line.intercept,
                    "slope": line.slope,
                    "theta_s": line.theta_s,
                    "theta_min": float(bnd.theta_min),
                    "theta_max": float(bnd.theta_max),
                    "v_max": float(bnd.v_max),
                    "collapsed": bnd.collapsed,
                }
            entry["gflcs"].append(g)
        report["modes"][mode] = entry
    report["equilibrium"] = {"delta": eq.delta, "thetas": list(eq.thetas)}
    return to_plain(report)


def cmd_analyze(args) -> int:
    cfg = _config(args)
    rep = stability_report(cfg)
    text = json.dumps(rep, indent=2, sort_keys=True)
    if args.out:
        _outdir(os.path.dirname(args.out) or None)
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text)
    return EXIT_OK


def _parse_grid(spec: str) -> basin.BasinGrid:
    try:
        parts = [p for p in spec.replace("x", ",").split(",") if p]
        steps = [int(parts[0]), int(parts[1])]
        spans = [float(v) for v in parts[2:4]]
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"grid {spec!r} is not THETAxVARPI[,theta_half_span,varpi_half_span]") from exc
    if min(steps) < 1:
        raise ConfigError("grid needs at least one cell per axis")
    kw = {}
    if spans:
        kw["theta_half_span"] = spans[0]
    if len(spans) > 1:
        kw["varpi_half_span"] = spans[1]
    return basin.BasinGrid(steps[0], steps[1], **kw)


def cmd_basin(args) -> int:
    cfg = _config(args)
    grid = _parse_grid(args.grid)
    bmap = basin.map_basin(cfg, grid, start_mode=args.mode, workers=args.workers)
    report = {"counts": bmap.counts(), "theta_s": bmap.theta_s, "delta": bmap.delta, "start_mode": bmap.start_mode}
    for mode in (CVC, CLC):
        c = basin.energy_conservativeness(bmap, cfg, mode)
        report[f"criterion_{mode}"] = {"v_max": c.v_max, "theta_max": c.theta_max, "inside": c.inside,
                                       "inside_stable": c.inside_stable, "fraction": c.fraction}
    out = _outdir(args.out)
    if out:
        bmap.write_csv(os.path.join(out, "basin.csv"))
        write_json(report, os.path.join(out, "basin_summary.json"))
    print(json.dumps(to_plain(report), indent=2, sort_keys=True))
    return EXIT_OK


SWEEP_COLUMNS = ["value", "final_mode", "pll", "pattern", "post_clearance_switches", "clearance_mode",
                 "clearance_energy", "p_ref_error"]


def _sweep_point(cfg: ScenarioConfig) -> list:
    s = run_scenario(cfg).summary
    return [s.final_mode, s.pll, s.post_clearance_pattern, s.post_clearance_switches, s.clearance_mode or "",
            s.clearance_energy[0], s.p_ref_error]


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = parse_range(args.range)
    cfgs = [set_param(cfg, args.param, v) for v in values]
    rows = basin._pool_map(_sweep_point, cfgs, args.workers, chunksize=1)
    out = _outdir(args.out)
    lines = [SWEEP_COLUMNS] + [[v] + r for v, r in zip(values, rows)]
    if out:
        with open(os.path.join(out, "sweep.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(lines[0])
            for row in lines[1:]:
                w.writerow([f"{x:.9g}" if isinstance(x, float) else x for x in row])
    for row in lines:
        print(",".join(f"{x:.9g}" if isinstance(x, float) else str(x) for x in row))
    return EXIT_OK


# --- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gflswitch", description="GFLC transient stability next to a current-limited GFMC")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def source(sp):
        g = sp.add_mutually_exclusive_group(required=True)
        g.add_argument("--case", help=f"preset name ({PRESET_NAMES[0]}..{PRESET_NAMES[-1]})")
        g.add_argument("--config", help="path to a JSON scenario config")
        sp.add_argument("--vfdc", choices=["on", "off"], default=None)

    r = sub.add_parser("run", help="simulate one scenario")
    source(r)
    r.add_argument("--model", choices=["reduced", "reference"], default=None)
    r.add_argument("--out", help="directory for trace.csv, events.csv and summary.json")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="equilibria, damping lines and critical energies")
    source(a)
    a.add_argument("--out", help="write the JSON report here as well")
    a.set_defaults(func=cmd_analyze)

    b = sub.add_parser("basin", help="brute-force basin of attraction over (theta0, varpi0)")
    source(b)
    b.add_argument("--grid", default="201x201", help="THETAxVARPI[,theta_half_span,varpi_half_span_pu]")
    b.add_argument("--mode", choices=[CVC, CLC], default=CVC, help="GFMC mode at the start of every cell")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--out")
    b.set_defaults(func=cmd_basin)

    s = sub.add_parser("sweep", help="run one scenario over a range of one parameter")
    source(s)
    s.add_argument("--param", required=True, help="dotted config path, e.g. gfmc.i_max or gflcs.0.k_2p")
    s.add_argument("--range", required=True, help="a:b:n or v1,v2,...")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", UserWarning)
    try:
        return args.func(args)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleScenarioError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001 - mapped to the documented exit code
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
