"""Command-line entry points: ``run``, ``sweep`` and ``check``.

Exit codes: 0 success, 2 configuration error, 3 solver failure.  A run
directory always contains a verbatim copy of the resolved configuration
(``config.cfg``) next to the timeseries and snapshots, and identical
configuration plus seed produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import itertools
import os
import sys
from dataclasses import replace
from importlib import resources

from . import config as config_mod
from . import mobility, output
from .config import ConfigError, RunConfig
from .core import initial_condition, validate_params
from .integrator import QuadratizationError, SolverError, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def bundled_config_path(name: str) -> str:
    """Filesystem path of a configuration shipped with the package."""
    return str(resources.files("bulksurf").joinpath("configs", name))


def _load(args: argparse.Namespace) -> RunConfig:
    cfg = config_mod.load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "out", None) is not None:
        cfg = replace(cfg, out_dir=args.out)
    return cfg


def _say(args: argparse.Namespace, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _execute_run(cfg: RunConfig, directory: str) -> output.RunDirSink:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "config.cfg"), "w", encoding="utf-8") as fh:
        fh.write(config_mod.render_config(replace(cfg, out_dir=directory, sweep=())))
    sink = output.RunDirSink(directory, report_interval=cfg.report_interval)
    state0 = initial_condition(cfg.grid, cfg.params, cfg.seed)
    run(state0, cfg.params, cfg.kind, cfg.scheme, sink)
    sink.close()
    return sink


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    directory = cfg.out_dir or "run_out"
    report = validate_params(cfg.params, cfg.kind)
    if not report.passed:
        for c in report.failures():
            print(f"error: parameter check failed: {c.name}: {c.detail}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        sink = _execute_run(cfg, directory)
    except (QuadratizationError, SolverError) as exc:
        print(f"error: solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    final = sink.reports[-1]
    _say(args, f"run finished: {final.step} steps, t = {final.t:g}, outputs in {directory}")
    return EXIT_OK


def _sweep_points(cfg: RunConfig) -> list[dict[str, object]]:
    axes = [(key, values) for key, values in cfg.sweep]
    names = [key for key, _ in axes]
    combos = itertools.product(*[values for _, values in axes])
    return [dict(zip(names, combo)) for combo in combos]


def _point_label(assignment: dict[str, object]) -> str:
    def fmt(v: object) -> str:
        return v.value if hasattr(v, "value") else format(v, "g")

    return ",".join(f"{k}={fmt(v)}" for k, v in assignment.items())


def _run_point(base: RunConfig, assignment: dict[str, object], directory: str) -> tuple[str, str, list]:
    label = _point_label(assignment)
    point_cfg = config_mod.apply_point(base, assignment)
    report = validate_params(point_cfg.params, point_cfg.kind)
    if not report.passed:
        msgs = "; ".join(c.name for c in report.failures())
        return label, f"failed: invalid parameters ({msgs})", []
    try:
        sink = _execute_run(point_cfg, directory)
    except (QuadratizationError, SolverError) as exc:
        return label, f"failed: {exc}", []
    return label, "ok", sink.reports


def cmd_sweep(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not cfg.sweep:
        print("error: [sweep] section is empty; nothing to sweep", file=sys.stderr)
        return EXIT_CONFIG
    base_dir = cfg.out_dir or "sweep_out"
    os.makedirs(base_dir, exist_ok=True)
    points = _sweep_points(cfg)
    results: list[tuple[str, str, list]] = []
    labels = [_point_label(a) for a in points]
    dirs = [os.path.join(base_dir, label.replace(",", "_").replace("=", "-")) for label in labels]

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_run_point, cfg, a, d) for a, d in zip(points, dirs)
            ]
            results = [f.result() for f in futures]
    else:
        results = [_run_point(cfg, a, d) for a, d in zip(points, dirs)]

    summary_path = os.path.join(base_dir, "summary.csv")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(
            "point,status,final_t,E_total,E_bulk,E_surface,mass_total,mass_surface,"
            "mass_total_drift,mass_surface_drift,mass_bulk_raw_drift\n"
        )
        for label, status, reports in results:
            if not reports:
                fh.write(f"{label},{status},,,,,,,,,\n")
                continue
            first, last = reports[0], reports[-1]
            def rel(a: float, b: float) -> float:
                return abs(a - b) / max(abs(b), 1e-300)
            row = [
                label,
                status,
                output.fmt_float(last.t),
                output.fmt_float(last.e_total),
                output.fmt_float(last.e_bulk),
                output.fmt_float(last.e_surface),
                output.fmt_float(last.mass_total),
                output.fmt_float(last.mass_surface),
                output.fmt_float(rel(last.mass_total, first.mass_total)),
                output.fmt_float(rel(last.mass_surface, first.mass_surface)),
                output.fmt_float(rel(last.mass_bulk_raw, first.mass_bulk_raw)),
            ]
            fh.write(",".join(row) + "\n")
    n_failed = sum(1 for _, status, _ in results if status != "ok")
    _say(args, f"sweep finished: {len(results)} points, {n_failed} failed, summary in {summary_path}")
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    ok = True
    report = validate_params(cfg.params, cfg.kind)
    for c in report.checks:
        status = "PASS" if c.passed else ("ADVISORY" if c.advisory else "FAIL")
        _say(args, f"{status:8s} {c.name}" + (f" ({c.detail})" if c.detail and not c.passed else ""))
    ok &= report.passed
    if report.passed:
        spec = mobility.assemble_surface_mobility(cfg.params, cfg.kind)
        psd = mobility.check_onsager_psd(spec, cfg.grid, tol=1e-12)
        _say(args, f"{'PASS' if psd.passed else 'FAIL':8s} onsager_psd (min_eig = {psd.min_eig:.3e})")
        ok &= psd.passed
        cons = mobility.check_conservation_compat(spec, cfg.kind)
        if cons.conserving:
            _say(args, f"{'PASS':8s} mass_conservation_compat")
        elif not cons.expected_conserving:
            _say(args, f"{'ADVISORY':8s} mass_conservation_compat ({'; '.join(cons.issues)})")
        else:
            _say(args, f"{'FAIL':8s} mass_conservation_compat ({'; '.join(cons.issues)})")
            ok = False
    return EXIT_OK if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bulksurf",
        description="Structure-preserving bulk-surface phase-field simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="configuration file path")
        p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_run = sub.add_parser("run", help="execute one simulation")
    add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the Cartesian product of the [sweep] axes")
    add_common(p_sweep)
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent sweep points")
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("check", help="validate parameters and operator structure")
    add_common(p_check)
    p_check.set_defaults(func=cmd_check)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
