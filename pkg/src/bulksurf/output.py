"""Bit-specified output formats: timeseries CSV, field snapshots, PGM images.

All floating-point values print with 17 significant digits, so identical runs
produce byte-identical files.  The phi snapshot CSV stores the raw array with
the file's first row being the bottom row of the domain; the PGM raster
follows image convention (top row first) with ``value = round(255 *
clamp(phi, 0, 1))``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import SimState
from .integrator import StepReport

TIMESERIES_HEADER = (
    "step,t,E_total,E_bulk,E_surface,E_quadratized,mass_total,mass_bulk_weighted,"
    "mass_bulk_raw,mass_surface,dissipation_residual,robin_residual"
)


def fmt_float(x: float) -> str:
    return format(x, ".17g")


def timeseries_row(r: StepReport) -> str:
    values = (
        r.t,
        r.e_total,
        r.e_bulk,
        r.e_surface,
        r.e_quad,
        r.mass_total,
        r.mass_bulk_weighted,
        r.mass_bulk_raw,
        r.mass_surface,
        r.dissipation_residual,
        r.robin_residual,
    )
    return f"{r.step}," + ",".join(fmt_float(v) for v in values)


def write_phi_csv(path: str, phi: np.ndarray) -> None:
    """ny rows of nx comma-separated values; file row 0 is the bottom row."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in phi:
            fh.write(",".join(fmt_float(v) for v in row) + "\n")


def write_psi_csv(path: str, psi: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(fmt_float(v) for v in psi) + "\n")


def write_phi_pgm(path: str, phi: np.ndarray) -> None:
    """Plain PGM (magic P2, maxval 255), raster top row first."""
    ny, nx = phi.shape
    levels = np.rint(255.0 * np.clip(phi, 0.0, 1.0)).astype(int)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"P2\n{nx} {ny}\n255\n")
        for row in levels[::-1]:
            fh.write(" ".join(str(v) for v in row) + "\n")


@dataclass
class RunDirSink:
    """Sink writing the pinned output formats into one run directory.

    Reports are buffered and written at close time: one CSV row for step 0,
    every ``report_interval``-th step and the final step.
    """

    directory: str
    report_interval: int = 100

    def __post_init__(self) -> None:
        os.makedirs(self.directory, exist_ok=True)
        self._reports: list[StepReport] = []

    def on_report(self, report: StepReport) -> None:
        self._reports.append(report)

    def on_snapshot(self, tag: str, state: SimState) -> None:
        write_phi_csv(os.path.join(self.directory, f"phi_t{tag}.csv"), state.phi)
        write_psi_csv(os.path.join(self.directory, f"psi_t{tag}.csv"), state.psi)
        write_phi_pgm(os.path.join(self.directory, f"phi_t{tag}.pgm"), state.phi)

    @property
    def reports(self) -> list[StepReport]:
        return self._reports

    def close(self) -> None:
        path = os.path.join(self.directory, "timeseries.csv")
        last = len(self._reports) - 1
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(TIMESERIES_HEADER + "\n")
            for i, rep in enumerate(self._reports):
                if i == 0 or i == last or rep.step % self.report_interval == 0:
                    fh.write(timeseries_row(rep) + "\n")
