"""Domain types, parameter sets and model-kind selection.

The simulator evolves a cell-centered bulk order parameter ``phi`` on a
rectangular staggered grid together with two independent fields living on one
designated boundary edge (the *dynamic edge*): the boundary trace ``phi_gamma``
of the bulk field and a surface order parameter ``psi``.  The remaining three
edges carry homogeneous Neumann conditions.  Everything here is an immutable
value object; the numerics live in :mod:`bulksurf.grid_ops`,
:mod:`bulksurf.energy`, :mod:`bulksurf.mobility` and
:mod:`bulksurf.integrator`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields

import numpy as np

EDGES = ("bottom", "top", "left", "right")

#: Mobility coefficients that must be nonnegative (they enter the symmetric,
#: dissipative part of the transport operators).
_NONNEGATIVE_MOBILITIES = (
    "mob_bulk",
    "mob_bulk_react",
    "mob_trace",
    "mob_normal",
    "mob_12_diff",
    "mob_22_diff",
    "mob_23_diff",
    "mob_12_react",
    "mob_22_react",
    "mob_23_react",
)


class ModelKind(enum.Enum):
    """The four surface-mobility variants.

    A: purely irreversible transport; B: adds reversible couplings
    (``mob_13_rev``, ``mob_23_diff``); C: adds bulk/surface reactive scalars
    to A; D: combines reversible couplings and reactive scalars.
    """

    A = "A"
    B = "B"
    C = "C"
    D = "D"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered rectangular grid with one dynamic edge.

    Cells are indexed ``field[j, i]`` with ``j`` the y index (row 0 at the
    bottom) and ``i`` the x index.  Surface fields live at the face centers of
    the dynamic edge, ordered by increasing coordinate along it.
    """

    nx: int
    ny: int
    xmin: float = -1.0
    xmax: float = 1.0
    ymin: float = -1.0
    ymax: float = 1.0
    gamma_edge: str = "bottom"

    def __post_init__(self) -> None:
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid must be at least 4x4, got {self.nx}x{self.ny}")
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("domain bounds must have positive extent")
        hx = (self.xmax - self.xmin) / self.nx
        hy = (self.ymax - self.ymin) / self.ny
        if not math.isclose(hx, hy, rel_tol=1e-12):
            raise ValueError(f"cells must be square: hx={hx!r}, hy={hy!r}")
        if self.gamma_edge not in EDGES:
            raise ValueError(f"gamma_edge must be one of {EDGES}, got {self.gamma_edge!r}")

    @property
    def h(self) -> float:
        """Uniform cell width."""
        return (self.xmax - self.xmin) / self.nx

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape ``(ny, nx)`` of bulk fields."""
        return (self.ny, self.nx)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_gamma(self) -> int:
        """Number of face centers on the dynamic edge."""
        return self.nx if self.gamma_edge in ("bottom", "top") else self.ny

    @property
    def gamma_length(self) -> float:
        return self.n_gamma * self.h

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates ``(x, y)`` of cell centers, each shaped ``(ny, nx)``."""
        x = self.xmin + (np.arange(self.nx) + 0.5) * self.h
        y = self.ymin + (np.arange(self.ny) + 0.5) * self.h
        return np.broadcast_to(x, self.shape).copy(), np.broadcast_to(y[:, None], self.shape).copy()


@dataclass(frozen=True)
class PhysicalParams:
    """Physical and numerical parameters of the coupled bulk-surface model.

    ``alpha`` is the Robin relaxation friction in ``alpha*f_m = beta*mu_s -
    mu_b`` and ``beta`` the bulk/surface carrying-capacity ratio set by the
    characteristic length.  ``chi_*`` are the logarithmic-potential interaction
    strengths and ``gamma_*`` the gradient-energy coefficients; by default they
    derive from the interface-width scale ``b`` as ``b**2/3`` (bulk) and
    ``b**2/6`` (surface).  Mobility coefficients follow the surface operator
    layout: ``mob_12_diff/mob_22_diff/mob_23_diff`` are surface-diffusion
    coefficients, ``mob_12_react/mob_22_react/mob_23_react`` reactive scalars
    (Models C/D), ``mob_13_rev`` the reversible scalar coupling (Models B/D),
    ``mob_trace``/``mob_normal`` the relaxation rates conjugate to the trace
    and normal-derivative channels, and ``mob_bulk``/``mob_bulk_react`` the
    bulk diffusive and reactive mobilities.
    """

    alpha: float = 1.0
    beta: float = 1.0
    chi_bulk: float = 4.0
    chi_surf: float = 5.0
    b: float = 0.02
    gamma_bulk: float | None = None
    gamma_surf: float | None = None
    mob_bulk: float = 5e-6
    mob_bulk_react: float = 0.0
    mob_trace: float = 1e-6
    mob_normal: float = 0.0
    mob_12_diff: float = 1e-6
    mob_22_diff: float = 1e-5
    mob_23_diff: float = 0.0
    mob_12_react: float = 0.0
    mob_22_react: float = 0.0
    mob_23_react: float = 0.0
    mob_13_rev: float = 0.0
    ieq_shift_bulk: float = 1.0
    ieq_shift_surf: float = 1.0
    log_reg_delta: float = 1e-6

    def __post_init__(self) -> None:
        if self.gamma_bulk is None:
            object.__setattr__(self, "gamma_bulk", self.b * self.b / 3.0)
        if self.gamma_surf is None:
            object.__setattr__(self, "gamma_surf", self.b * self.b / 6.0)


@dataclass(frozen=True)
class SimState:
    """Full discrete state of one simulation instant.

    ``phi`` is cell-centered ``(ny, nx)``; ``phi_gamma`` (the boundary trace,
    an independent unknown) and ``psi`` live on the dynamic edge's face
    centers.  ``q_bulk``/``q_surf`` are the quadratization auxiliaries
    ``sqrt(F + C0)`` used by the energy-stable schemes.
    """

    grid: Grid
    phi: np.ndarray
    phi_gamma: np.ndarray
    psi: np.ndarray
    q_bulk: np.ndarray
    q_surf: np.ndarray
    t: float = 0.0
    step: int = 0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.phi.shape != self.grid.shape:
            raise ValueError(f"phi shape {self.phi.shape} != grid shape {self.grid.shape}")
        if self.q_bulk.shape != self.grid.shape:
            raise ValueError("q_bulk shape mismatch")
        n = self.grid.n_gamma
        for name in ("phi_gamma", "psi", "q_surf"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    advisory: bool = False


@dataclass(frozen=True)
class ValidationReport:
    """Pass/fail record per parameter constraint; advisory entries never gate."""

    checks: tuple[CheckResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.advisory)

    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed and not c.advisory)

    def advisories(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if c.advisory and not c.passed)


def _gating_rules(kind: ModelKind) -> tuple[str, ...]:
    """Coefficients that must vanish under the given model kind."""
    reactive = ("mob_12_react", "mob_22_react", "mob_23_react", "mob_bulk_react")
    if kind is ModelKind.A:
        return ("mob_13_rev", "mob_23_diff") + reactive
    if kind is ModelKind.B:
        return reactive
    if kind is ModelKind.C:
        return ("mob_13_rev", "mob_23_diff", "mob_23_react")
    return ()


def validate_params(p: PhysicalParams, kind: ModelKind) -> ValidationReport:
    """Check positivity, model-kind gating and conservation compatibility.

    Pure: identical inputs give identical reports.  Callers decide whether to
    abort on failures; advisory entries (gamma override, reactive-model
    conservation) never fail the report.
    """
    checks: list[CheckResult] = []

    checks.append(
        CheckResult(
            "alpha_positive",
            p.alpha > 0.0,
            "alpha > 0 required: alpha = 0 states detailed force balance, not a dynamic condition",
        )
    )
    checks.append(CheckResult("beta_nonnegative", p.beta >= 0.0, f"beta = {p.beta!r}"))

    bad = [name for name in _NONNEGATIVE_MOBILITIES if getattr(p, name) < 0.0]
    checks.append(
        CheckResult(
            "mobilities_nonnegative",
            not bad,
            "negative symmetric mobilities: " + ", ".join(bad) if bad else "",
        )
    )

    checks.append(
        CheckResult(
            "gradient_coefficients_positive",
            p.gamma_bulk > 0.0 and p.gamma_surf > 0.0,
            f"gamma_bulk = {p.gamma_bulk!r}, gamma_surf = {p.gamma_surf!r}",
        )
    )
    checks.append(
        CheckResult(
            "ieq_shifts_positive",
            p.ieq_shift_bulk > 0.0 and p.ieq_shift_surf > 0.0,
            f"ieq_shift_bulk = {p.ieq_shift_bulk!r}, ieq_shift_surf = {p.ieq_shift_surf!r}",
        )
    )
    checks.append(
        CheckResult(
            "log_reg_delta_valid",
            0.0 < p.log_reg_delta < 0.25,
            f"log_reg_delta = {p.log_reg_delta!r}",
        )
    )

    gamma_consistent = math.isclose(p.gamma_bulk, p.b * p.b / 3.0, rel_tol=1e-12) and math.isclose(
        p.gamma_surf, p.b * p.b / 6.0, rel_tol=1e-12
    )
    checks.append(
        CheckResult(
            "gamma_matches_interface_width",
            gamma_consistent,
            f"override in effect: gamma_bulk={p.gamma_bulk!r} vs b^2/3={p.b**2 / 3.0!r}, "
            f"gamma_surf={p.gamma_surf!r} vs b^2/6={p.b**2 / 6.0!r}",
            advisory=True,
        )
    )

    offenders = [name for name in _gating_rules(kind) if getattr(p, name) != 0.0]
    checks.append(
        CheckResult(
            f"model_{kind.value}_gating",
            not offenders,
            "nonzero coefficients forbidden for Model "
            f"{kind.value}: " + ", ".join(offenders) if offenders else "",
        )
    )

    if kind in (ModelKind.A, ModelKind.B):
        checks.append(
            CheckResult(
                "single_species_conservation",
                getattr(p, "mob_bulk_react") == 0.0,
                "bulk reactive mobility must vanish for conserving models",
            )
        )
    else:
        reactive_on = [
            name
            for name in ("mob_bulk_react", "mob_12_react", "mob_22_react", "mob_23_react")
            if getattr(p, name) != 0.0
        ]
        checks.append(
            CheckResult(
                "single_species_conservation",
                not reactive_on,
                "reactive transport: single-species mass not conserved"
                + (" (" + ", ".join(reactive_on) + ")" if reactive_on else ""),
                advisory=True,
            )
        )

    return ValidationReport(tuple(checks))


def initial_condition(grid: Grid, params: PhysicalParams, seed: int) -> SimState:
    """Uniform mixture with small seeded noise: ``phi = 0.3 + 0.01*zeta``.

    ``zeta`` is i.i.d. uniform on [-1, 1] per cell from
    ``numpy.random.default_rng(seed)``; the trace and surface fields start
    from the adjacent-cell values (``psi = phi_gamma`` exactly) and the
    quadratization auxiliaries from their defining square roots.  Bit-exact
    deterministic in ``(grid, params, seed)``.
    """
    from . import grid_ops, integrator

    rng = np.random.default_rng(seed)
    zeta = rng.uniform(-1.0, 1.0, size=grid.shape)
    phi = 0.3 + 0.01 * zeta
    phi_gamma = grid_ops.gamma_trace(phi, grid).copy()
    psi = phi_gamma.copy()
    state = SimState(
        grid=grid,
        phi=phi,
        phi_gamma=phi_gamma,
        psi=psi,
        q_bulk=np.zeros(grid.shape),
        q_surf=np.zeros(grid.n_gamma),
        t=0.0,
        step=0,
        rng_seed=seed,
    )
    q_bulk, q_surf = integrator.quadratize(state, params)
    return SimState(
        grid=grid,
        phi=phi,
        phi_gamma=phi_gamma,
        psi=psi,
        q_bulk=q_bulk,
        q_surf=q_surf,
        t=0.0,
        step=0,
        rng_seed=seed,
    )


def params_as_dict(p: PhysicalParams) -> dict[str, float]:
    """Field-name to value mapping (resolved gammas included)."""
    return {f.name: getattr(p, f.name) for f in fields(p)}
