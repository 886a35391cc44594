"""Command-line entry point.

    triscale simulate --config run.json --out results/
    triscale preset fig6 --out results/

Every command writes data files only.  On failure a one-line JSON error
record goes to stderr and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .bifurcation import branch_scan, detect_bifurcations, lp_curve
from .compare import compare
from .config import ScenarioConfig, load_config, presets
from .equilibria import all_equilibria, existence_verdict, global_stability_certificate
from .errors import ConfigError, NumericalError, TriscaleError
from .integrator import basin_sample, integrate
from .io import write_csv, write_json
from .maps import iterate_epochs

STATE_COLS = ["S", "I", "T", "P", "Y", "R"]
EPOCH_HEADER = [
    "epoch", "entry_S", "entry_P", "entry_T", "land_S", "land_P", "land_T",
    "exit_scale", "exit_time_tau1", "exit_S", "exit_P", "exit_T",
]


def _state6(x):
    x = list(x)[:5]
    return x + [1.0 - sum(x)]


def _simulate(cfg: ScenarioConfig):
    span = cfg.fast_span()
    grid = np.linspace(span[0], span[1], cfg.n_output)
    traj = integrate(cfg.initial, cfg.params, span, cfg.integrator, t_eval=grid, system=cfg.system)
    k = cfg.time_scale()
    rows = [[t * k] + _state6(x) for t, x in zip(traj.times, traj.states)]
    ev = [[e.kind.value, e.t * k] + _state6(e.state) + [e.threshold] for e in traj.events]
    return {
        "trajectory.csv": (["t"] + STATE_COLS, rows),
        "events.csv": (["kind", "t"] + STATE_COLS + ["threshold"], ev),
    }


def _equilibria(cfg: ScenarioConfig):
    p = cfg.params
    rows = []
    for rec in all_equilibria(p):
        rows.append([rec.kind.value] + list(rec.state) + [rec.max_real, rec.stable, rec.residual])
    v = existence_verdict(p)
    summary = {
        "r0": p.r0,
        "global_stability_certificate": global_stability_certificate(p),
        "verdict": v.verdict.value,
        "r_star": v.r_star,
        "finite_delta_verdict": v.finite_delta.value,
        "verdicts_agree": v.agrees,
    }
    return {
        "equilibria.csv": (["kind"] + STATE_COLS + ["max_real_eig", "stable", "residual"], rows),
        "summary.json": summary,
    }


def _bifurcate(cfg: ScenarioConfig):
    b = cfg.bifurcation
    pts = branch_scan(cfg.params, b.beta_range, b.n_points)
    rows = [
        [pt.beta, pt.branch.value] + list(pt.equilibrium.state)
        + [pt.equilibrium.max_real, pt.equilibrium.stable]
        for pt in pts
    ]
    special = detect_bifurcations(cfg.params, b.beta_range)
    if b.alpha_range is not None:
        special = special + lp_curve(cfg.params, b.alpha_range, b.n_alpha)
    srows = [[s.kind.value, s.beta, s.alpha] + list(s.state) + [s.residual] for s in special]
    return {
        "branches.csv": (["beta", "branch"] + STATE_COLS + ["max_real_eig", "stable"], rows),
        "bifurcations.csv": (["kind", "beta", "alpha"] + STATE_COLS + ["residual"], srows),
    }


def _entry(cfg: ScenarioConfig):
    x = cfg.initial
    if len(x) == 5:
        return (x[0], x[3], x[2])
    return x


def _epoch_rows(logs):
    return [
        [log.index, *log.entry, *log.landing.as_tuple(), log.exit.scale.value,
         log.return_time, *log.exit.exit_point]
        for log in logs
    ]


def _epochs(cfg: ScenarioConfig):
    e = cfg.epochs
    logs = iterate_epochs(_entry(cfg), e.n, cfg.params, e.transit_correction)
    return {"epochs.csv": (EPOCH_HEADER, _epoch_rows(logs))}


def _compare(cfg: ScenarioConfig):
    span = cfg.t_span if cfg.time_unit == "tau1" else tuple(v * cfg.params.epsilon for v in cfg.t_span)
    rep = compare(cfg.params, cfg.initial, span, cfg.epochs.n, cfg.integrator,
                  cfg.epochs.transit_correction, cfg.n_output)
    rows = [
        [r.epoch, r.arrival_scale, r.map_start_tau1, r.ode_start_tau1, r.rel_time_error,
         *r.map_landing, *(r.ode_landing or (None, None, None)), r.landing_sup_err]
        for r in rep.rows
    ]
    header = ["epoch", "arrival_scale", "map_start_tau1", "ode_start_tau1", "rel_time_error",
              "map_land_S", "map_land_P", "map_land_T", "ode_land_S", "ode_land_P", "ode_land_T",
              "landing_sup_err"]
    traj = rep.trajectory
    eps = cfg.params.epsilon
    trows = [[t * eps] + _state6(x) for t, x in zip(traj.times, traj.states)]
    return {
        "compare.csv": (header, rows),
        "epochs.csv": (EPOCH_HEADER, _epoch_rows(rep.epochs)),
        "trajectory.csv": (["t"] + STATE_COLS, trows),
        "summary.json": {"breakdown": rep.breakdown, "breakdown_reason": rep.breakdown_reason,
                         "aligned_epochs": len(rep.rows), "time_unit": "tau1"},
    }


def _basins(cfg: ScenarioConfig):
    b = cfg.basins
    samples = basin_sample(cfg.params, b.n, cfg.seed, b.t_max, b.classifier_tol, cfg.integrator)
    rows = []
    for s in samples:
        fin = list(s.final) if s.final is not None else [None] * 5
        rows.append([s.index, *s.initial, s.label, *fin, s.error or ""])
    header = (["index", "S0", "I0", "T0", "P0", "Y0", "label", "S", "I", "T", "P", "Y", "error"])
    counts = {}
    for s in samples:
        counts[s.label] = counts.get(s.label, 0) + 1
    return {"basins.csv": (header, rows), "summary.json": {"counts": counts, "n": b.n}}


HANDLERS = {
    "simulate": _simulate,
    "equilibria": _equilibria,
    "bifurcate": _bifurcate,
    "epochs": _epochs,
    "compare": _compare,
    "basins": _basins,
}


def run(cfg: ScenarioConfig, out_dir: str | None = None) -> dict:
    """Compute everything first, then write; a failure leaves no files behind.

    Returns the in-memory results keyed by file name.
    """
    out_dir = out_dir or cfg.output
    results = HANDLERS[cfg.kind](cfg)
    for name, payload in results.items():
        path = os.path.join(out_dir, name)
        if isinstance(payload, tuple):
            write_csv(path, *payload)
        else:
            write_json(path, payload)
    write_json(os.path.join(out_dir, "config.json"), cfg.to_dict())
    return results


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        cfg.seed = args.seed
    if args.tol is not None:
        if not (args.tol > 0 and math.isfinite(args.tol)):
            raise ConfigError(f"--tol must be positive, got {args.tol}")
        cfg.integrator = cfg.integrator.with_(rel_tol=args.tol, abs_tol=args.tol * 1e-2)
    return cfg


def _second_epidemic_summary(out_dir, runs, results):
    rows = []
    for (_, cfg), res in zip(runs, results):
        table = res["compare.csv"][1]
        second = table[1] if len(table) > 1 else [None] * 4
        rows.append([cfg.params.nu, second[2], second[3]])
    write_csv(os.path.join(out_dir, "second_epidemic.csv"),
              ["nu", "map_start_tau1", "ode_start_tau1"], rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="random seed (basins)")
    common.add_argument("--tol", type=float, help="relative integrator tolerance")

    parser = argparse.ArgumentParser(prog="triscale", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in HANDLERS:
        sp = sub.add_parser(kind, parents=[common], help=f"run a {kind} scenario")
        sp.add_argument("--config", required=True, help="JSON scenario file")
    sp = sub.add_parser("preset", parents=[common], help="run a built-in scenario")
    sp.add_argument("name", choices=sorted(presets()))
    return parser


def _error_record(exc: BaseException) -> dict:
    rec = {"error": type(exc).__name__, "message": str(exc)}
    diag = getattr(exc, "diagnostics", None)
    if diag:
        rec["diagnostics"] = {k: v for k, v in diag.items() if isinstance(v, (int, float, str))}
    return rec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preset":
            runs = presets()[args.name]
            out_dir = args.out or os.path.join("out", args.name)
            results = [
                run(_apply_overrides(cfg, args), os.path.join(out_dir, subdir))
                for subdir, cfg in runs
            ]
            if len(runs) > 1 and runs[0][1].kind == "compare":
                _second_epidemic_summary(out_dir, runs, results)
            return 0
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config kind {cfg.kind!r} does not match command {args.command!r}")
        run(_apply_overrides(cfg, args), args.out)
        return 0
    except ConfigError as exc:
        print(json.dumps(_error_record(exc)), file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(json.dumps(_error_record(exc)), file=sys.stderr)
        return 3
    except TriscaleError as exc:
        print(json.dumps(_error_record(exc)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
