"""Surface mobility operators: assembly, positivity and conservation checks.

The dynamic-edge constitutive relation couples the flux vector
``U = (phi_t|_edge, psi_t, f_m, d_n phi_t)`` to the force vector
``Q = (mu_trace, mu_surf, mu_bulk|_edge, mu_normal)`` through ``U = -M Q``
with a 4x4 operator-valued mobility ``M``.  Each entry is a scalar plus a
surface-diffusion part ``c*u - d/ds(k du/ds)``; row 3 is always the Robin row
``(0, -beta/alpha, 1/alpha, 0)``, which encodes
``alpha*f_m = beta*mu_surf - mu_bulk``.

The symmetric part of ``M`` is the dissipative (irreversible) channel and must
be positive semidefinite; the antisymmetric part is reversible and drops out
of every quadratic form, hence contributes no dissipation.  Both statements
are checked numerically on the edge discretization here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from . import grid_ops
from .core import Grid, ModelKind, PhysicalParams, validate_params

#: Index layout of the flux/force vectors.
FLUX_NAMES = ("phi_t", "psi_t", "f_m", "dn_phi_t")
FORCE_NAMES = ("mu_trace", "mu_surf", "mu_bulk", "mu_normal")


@dataclass(frozen=True)
class OperatorEntry:
    """One mobility entry ``u -> scalar*u - d/ds(diff * du/ds)``.

    ``diff >= 0`` gives a positive-semidefinite surface-diffusion part with
    the same Neumann-closed stencil as :func:`grid_ops.surface_laplacian`, so
    its edge integral annihilates every field exactly.
    """

    scalar: float = 0.0
    diff: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.scalar == 0.0 and self.diff == 0.0

    def __add__(self, other: "OperatorEntry") -> "OperatorEntry":
        return OperatorEntry(self.scalar + other.scalar, self.diff + other.diff)

    def __neg__(self) -> "OperatorEntry":
        return OperatorEntry(-self.scalar, -self.diff)

    def scaled(self, factor: float) -> "OperatorEntry":
        return OperatorEntry(factor * self.scalar, factor * self.diff)

    def apply(self, u: np.ndarray, grid: Grid) -> np.ndarray:
        out = self.scalar * u
        if self.diff != 0.0:
            out = out - grid_ops.surface_laplacian(u, self.diff, grid)
        return out

    def matrix(self, grid: Grid) -> sps.csr_matrix:
        n = grid.n_gamma
        m = sps.identity(n, format="csr") * self.scalar
        if self.diff != 0.0:
            m = m + self.diff * grid_ops.neg_surface_laplacian_matrix(grid)
        return m.tocsr()


ZERO_ENTRY = OperatorEntry()


@dataclass(frozen=True)
class SurfaceMobility:
    """4x4 operator-valued surface mobility with its Robin parameters."""

    entries: tuple[tuple[OperatorEntry, ...], ...]
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if len(self.entries) != 4 or any(len(r) != 4 for r in self.entries):
            raise ValueError("entries must be a 4x4 grid of OperatorEntry")

    def entry(self, i: int, j: int) -> OperatorEntry:
        return self.entries[i][j]

    def symmetric_part(self) -> "SurfaceMobility":
        rows = tuple(
            tuple((self.entries[i][j] + self.entries[j][i]).scaled(0.5) for j in range(4))
            for i in range(4)
        )
        return SurfaceMobility(rows, self.alpha, self.beta)

    def antisymmetric_part(self) -> "SurfaceMobility":
        rows = tuple(
            tuple((self.entries[i][j] + (-self.entries[j][i])).scaled(0.5) for j in range(4))
            for i in range(4)
        )
        return SurfaceMobility(rows, self.alpha, self.beta)

    def robin_row_ok(self) -> bool:
        expected = (
            ZERO_ENTRY,
            OperatorEntry(-self.beta / self.alpha),
            OperatorEntry(1.0 / self.alpha),
            ZERO_ENTRY,
        )
        return self.entries[2] == expected


def assemble_surface_mobility(p: PhysicalParams, kind: ModelKind) -> SurfaceMobility:
    """Model-specific surface mobility operator.

    Model A couples the trace and surface channels through surface diffusion
    only; B adds the reversible scalar ``mob_13_rev`` and the reversible
    exchange diffusion ``mob_23_diff``; C augments A with reactive scalars;
    D is the reactive-reversible combination (whose exchange row deliberately
    breaks single-species conservation).  Raises ``ValueError`` on a
    model-kind gating violation.
    """
    report = validate_params(p, kind)
    gating = [c for c in report.checks if c.name.endswith("_gating") and not c.passed]
    if gating:
        raise ValueError(gating[0].detail)

    a, beta = p.alpha, p.beta
    robin = (ZERO_ENTRY, OperatorEntry(-beta / a), OperatorEntry(1.0 / a), ZERO_ENTRY)
    normal_row = (ZERO_ENTRY, ZERO_ENTRY, ZERO_ENTRY, OperatorEntry(p.mob_normal))

    e11 = OperatorEntry(p.mob_trace)
    if kind in (ModelKind.A, ModelKind.B):
        e12 = OperatorEntry(0.0, p.mob_12_diff)
        e22 = OperatorEntry(beta * beta / a, p.mob_22_diff)
        if kind is ModelKind.A:
            e13 = ZERO_ENTRY
            e23 = OperatorEntry(-beta / a)
        else:
            e13 = OperatorEntry(2.0 * p.mob_13_rev)
            e23 = OperatorEntry(-beta / a, 2.0 * p.mob_23_diff)
    elif kind is ModelKind.C:
        e12 = OperatorEntry(p.mob_12_react, p.mob_12_diff)
        e22 = OperatorEntry(beta * beta / a + p.mob_22_react, p.mob_22_diff)
        e13 = ZERO_ENTRY
        e23 = OperatorEntry(-beta / a)
    else:  # Model D
        e12 = OperatorEntry(p.mob_12_react, p.mob_12_diff)
        e22 = OperatorEntry(p.mob_22_react, p.mob_22_diff)
        e13 = OperatorEntry(2.0 * p.mob_13_rev)
        e23 = OperatorEntry(beta / a + 2.0 * p.mob_23_react, 2.0 * p.mob_23_diff)

    rows = (
        (e11, e12, e13, ZERO_ENTRY),
        (e12, e22, e23, ZERO_ENTRY),
        robin,
        normal_row,
    )
    return SurfaceMobility(rows, a, beta)


def operator_matrix(spec: SurfaceMobility, grid: Grid, blocks: int = 4) -> sps.csr_matrix:
    """Sparse realization over stacked edge degrees of freedom.

    Layout: ``blocks`` consecutive length-``n_gamma`` segments in flux/force
    order.  ``blocks=3`` drops the (decoupled) normal-derivative channel.
    """
    if blocks not in (3, 4):
        raise ValueError("blocks must be 3 or 4")
    grid_blocks = [[spec.entries[i][j].matrix(grid) for j in range(blocks)] for i in range(blocks)]
    m = sps.bmat(grid_blocks, format="csr")
    m.eliminate_zeros()
    return m


@dataclass(frozen=True)
class PsdCheck:
    passed: bool
    min_eig: float
    tol: float


def check_onsager_psd(spec: SurfaceMobility, grid: Grid, tol: float) -> PsdCheck:
    """Minimum eigenvalue of the discretized symmetric part on the edge.

    Passes iff ``min_eig >= -tol``; this is the positivity the second law
    requires of the dissipative channel, checked on the operator the stepper
    actually uses.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    m = operator_matrix(spec.symmetric_part(), grid)
    dense = m.toarray()
    dense = 0.5 * (dense + dense.T)  # discretization is symmetric; guard roundoff
    min_eig = float(np.linalg.eigvalsh(dense)[0])
    return PsdCheck(min_eig >= -tol, min_eig, tol)


@dataclass(frozen=True)
class ConservationCheck:
    conserving: bool
    expected_conserving: bool
    issues: tuple[str, ...]


def check_conservation_compat(spec: SurfaceMobility, kind: ModelKind) -> ConservationCheck:
    """Entry-tag audit of the single-species mass budget.

    With the bulk flux entering through the Robin row, the weighted budget
    ``beta * d/dt(bulk integral) + d/dt(edge integral)`` cancels exactly iff
    the exchange row has scalar parts ``(0, beta^2/alpha, -beta/alpha, 0)``
    on top of pure surface-diffusion parts (whose edge sums vanish
    identically).  Reactive scalars and a mistuned exchange row are reported
    as offending entries; for Models C/D that is the expected outcome.
    """
    a, beta = spec.alpha, spec.beta
    issues: list[str] = []

    def close(x: float, y: float) -> bool:
        return math.isclose(x, y, rel_tol=1e-12, abs_tol=0.0)

    if not spec.robin_row_ok():
        issues.append("row 3 is not the Robin row (0, -beta/alpha, 1/alpha, 0)")
    r = spec.entries[1]
    if r[0].scalar != 0.0:
        issues.append(f"entry (2,1) has reactive scalar {r[0].scalar!r}")
    if not close(r[1].scalar, beta * beta / a):
        issues.append(f"entry (2,2) scalar {r[1].scalar!r} != beta^2/alpha {beta * beta / a!r}")
    if not close(r[2].scalar, -beta / a):
        issues.append(f"entry (2,3) scalar {r[2].scalar!r} != -beta/alpha {-beta / a!r}")
    if not r[3].is_zero:
        issues.append("entry (2,4) must vanish")

    return ConservationCheck(
        conserving=not issues,
        expected_conserving=kind in (ModelKind.A, ModelKind.B),
        issues=tuple(issues),
    )


def antisymmetric_dissipation_check(
    spec: SurfaceMobility, grid: Grid, n_trials: int, seed: int = 0
) -> float:
    """Max ``|u . M_antisym u|`` over unit-norm random vectors.

    The reversible channel has an exactly antisymmetric discretization, so
    the result is roundoff-sized regardless of parameters.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    m = operator_matrix(spec.antisymmetric_part(), grid)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        u = rng.standard_normal(m.shape[0])
        u /= np.linalg.norm(u)
        worst = max(worst, abs(float(u @ (m @ u))))
    return worst
