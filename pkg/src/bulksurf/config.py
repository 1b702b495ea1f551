"""Run configuration: flat INI-style text files, parsed strictly.

Sections are ``[grid]``, ``[physics]``, ``[scheme]``, ``[output]`` and
``[sweep]``.  Unknown sections or keys are rejected, numbers are plain
decimals, booleans are ``true``/``false``.  Rendering a parsed configuration
writes every resolved value back out, so parse/render round-trips are
lossless and every run can archive the exact configuration it used.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, fields, replace

from .core import EDGES, Grid, ModelKind, PhysicalParams
from .integrator import SchemeConfig


class ConfigError(ValueError):
    """Malformed configuration text or values."""


_GRID_KEYS = ("nx", "ny", "xmin", "xmax", "ymin", "ymax", "gamma_edge")
_PARAM_KEYS = tuple(f.name for f in fields(PhysicalParams))
_PHYSICS_KEYS = ("model",) + _PARAM_KEYS
_SCHEME_KEYS = ("order", "dt", "linear_solver", "solver_tol", "max_steps", "snapshot_times", "seed")
_OUTPUT_KEYS = ("dir", "report_interval")
_SECTIONS = ("grid", "physics", "scheme", "output", "sweep")

#: Keys a sweep axis may refer to (any physics key, including the model kind).
SWEEPABLE_KEYS = _PHYSICS_KEYS


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration for one run or sweep."""

    grid: Grid
    params: PhysicalParams
    kind: ModelKind
    scheme: SchemeConfig
    seed: int = 0
    out_dir: str | None = None
    report_interval: int = 100
    sweep: tuple[tuple[str, tuple[object, ...]], ...] = ()


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, ModelKind):
        return value.value
    return str(value)


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from exc


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` on anything
    unexpected (unknown sections/keys, bad values, missing requireds)."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable configuration: {exc}") from exc

    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")

    def section_items(name: str) -> dict[str, str]:
        return dict(cp.items(name)) if cp.has_section(name) else {}

    grid_raw = section_items("grid")
    for key in grid_raw:
        if key not in _GRID_KEYS:
            raise ConfigError(f"[grid] unknown key {key!r}")
    if "nx" not in grid_raw or "ny" not in grid_raw:
        raise ConfigError("[grid] requires nx and ny")
    gamma_edge = grid_raw.get("gamma_edge", "bottom")
    if gamma_edge not in EDGES:
        raise ConfigError(f"[grid] gamma_edge must be one of {EDGES}, got {gamma_edge!r}")
    try:
        grid = Grid(
            nx=_parse_int("grid", "nx", grid_raw["nx"]),
            ny=_parse_int("grid", "ny", grid_raw["ny"]),
            xmin=_parse_float("grid", "xmin", grid_raw.get("xmin", "-1")),
            xmax=_parse_float("grid", "xmax", grid_raw.get("xmax", "1")),
            ymin=_parse_float("grid", "ymin", grid_raw.get("ymin", "-1")),
            ymax=_parse_float("grid", "ymax", grid_raw.get("ymax", "1")),
            gamma_edge=gamma_edge,
        )
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from exc

    physics_raw = section_items("physics")
    for key in physics_raw:
        if key not in _PHYSICS_KEYS:
            raise ConfigError(f"[physics] unknown key {key!r}")
    kind_raw = physics_raw.pop("model", "A")
    try:
        kind = ModelKind(kind_raw.strip().upper())
    except ValueError as exc:
        raise ConfigError(f"[physics] model must be one of A, B, C, D; got {kind_raw!r}") from exc
    param_values = {k: _parse_float("physics", k, v) for k, v in physics_raw.items()}
    try:
        params = PhysicalParams(**param_values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[physics] {exc}") from exc

    scheme_raw = section_items("scheme")
    for key in scheme_raw:
        if key not in _SCHEME_KEYS:
            raise ConfigError(f"[scheme] unknown key {key!r}")
    seed = _parse_int("scheme", "seed", scheme_raw.get("seed", "0"))
    snapshot_times: tuple[float, ...] = ()
    if scheme_raw.get("snapshot_times", "").strip():
        snapshot_times = tuple(
            _parse_float("scheme", "snapshot_times", tok)
            for tok in scheme_raw["snapshot_times"].split(",")
            if tok.strip()
        )
    solver = scheme_raw.get("linear_solver", "iterative")
    try:
        scheme = SchemeConfig(
            order=_parse_int("scheme", "order", scheme_raw.get("order", "2")),
            dt=_parse_float("scheme", "dt", scheme_raw.get("dt", "1e-3")),
            linear_solver=solver,
            solver_tol=_parse_float("scheme", "solver_tol", scheme_raw.get("solver_tol", "1e-10")),
            max_steps=_parse_int("scheme", "max_steps", scheme_raw.get("max_steps", "1000")),
            snapshot_times=snapshot_times,
        )
    except ValueError as exc:
        raise ConfigError(f"[scheme] {exc}") from exc

    output_raw = section_items("output")
    for key in output_raw:
        if key not in _OUTPUT_KEYS:
            raise ConfigError(f"[output] unknown key {key!r}")
    out_dir = output_raw.get("dir") or None
    report_interval = _parse_int("output", "report_interval", output_raw.get("report_interval", "100"))
    if report_interval < 1:
        raise ConfigError("[output] report_interval must be >= 1")

    sweep_raw = section_items("sweep")
    sweep: list[tuple[str, tuple[object, ...]]] = []
    for key, raw in sweep_raw.items():
        if key not in SWEEPABLE_KEYS:
            raise ConfigError(f"[sweep] unknown axis {key!r} (must be a [physics] key)")
        tokens = [tok.strip() for tok in raw.split(",") if tok.strip()]
        if not tokens:
            raise ConfigError(f"[sweep] axis {key!r} has no values")
        if key == "model":
            values: tuple[object, ...] = tuple(ModelKind(tok.upper()) for tok in tokens)
        else:
            values = tuple(_parse_float("sweep", key, tok) for tok in tokens)
        sweep.append((key, values))

    return RunConfig(
        grid=grid,
        params=params,
        kind=kind,
        scheme=scheme,
        seed=seed,
        out_dir=out_dir,
        report_interval=report_interval,
        sweep=tuple(sweep),
    )


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def render_config(cfg: RunConfig) -> str:
    """Serialize every resolved value; ``parse_config(render_config(c)) == c``."""
    cp = configparser.ConfigParser(interpolation=None)
    cp["grid"] = {
        "nx": str(cfg.grid.nx),
        "ny": str(cfg.grid.ny),
        "xmin": _fmt(cfg.grid.xmin),
        "xmax": _fmt(cfg.grid.xmax),
        "ymin": _fmt(cfg.grid.ymin),
        "ymax": _fmt(cfg.grid.ymax),
        "gamma_edge": cfg.grid.gamma_edge,
    }
    physics: dict[str, str] = {"model": cfg.kind.value}
    for f in fields(PhysicalParams):
        physics[f.name] = _fmt(getattr(cfg.params, f.name))
    cp["physics"] = physics
    cp["scheme"] = {
        "order": str(cfg.scheme.order),
        "dt": _fmt(cfg.scheme.dt),
        "linear_solver": cfg.scheme.linear_solver,
        "solver_tol": _fmt(cfg.scheme.solver_tol),
        "max_steps": str(cfg.scheme.max_steps),
        "snapshot_times": ", ".join(_fmt(t) for t in cfg.scheme.snapshot_times),
        "seed": str(cfg.seed),
    }
    output = {"report_interval": str(cfg.report_interval)}
    if cfg.out_dir:
        output["dir"] = cfg.out_dir
    cp["output"] = output
    if cfg.sweep:
        cp["sweep"] = {key: ", ".join(_fmt(v) for v in values) for key, values in cfg.sweep}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def apply_point(cfg: RunConfig, assignment: dict[str, object]) -> RunConfig:
    """Configuration for one sweep point: physics keys (or ``model``)
    replaced by the assigned values, sweep axes dropped."""
    params = cfg.params
    kind = cfg.kind
    updates: dict[str, float] = {}
    for key, value in assignment.items():
        if key == "model":
            kind = value  # type: ignore[assignment]
        else:
            updates[key] = float(value)  # type: ignore[arg-type]
    if updates:
        params = replace(params, **updates)
    return replace(cfg, params=params, kind=kind, sweep=())
