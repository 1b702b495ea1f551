"""Free-energy densities, discrete total energies and chemical potentials.

The potential family is logarithmic (ideal mixing entropy plus a quadratic
interaction term), regularized to a C^2 function by second-order Taylor
extension below ``delta`` and above ``1 - delta`` so the energy-quadratized
schemes stay well defined for any argument.  The discrete energies use exactly
the staggered differences of :mod:`bulksurf.grid_ops`, which makes
``total_energy`` the exact Lyapunov function of the time stepper: its partial
derivatives are the chemical potentials times the quadrature weights,

* ``dE/dphi[j,i]     == h^2 * mu_bulk[j,i]``
* ``dE/dphi_gamma[k] == h * mu_trace[k]``
* ``dE/dpsi[k]       == h * mu_surf[k]``

General curved-boundary chemical potentials carry additional mean-curvature
and second-gradient terms; with a straight dynamic edge and first-gradient
energies those vanish identically, so only the surviving terms appear here.
The force conjugate to the normal-derivative flux channel (``mu_normal``) is
identically zero for this energy family and is reported as such.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import grid_ops
from .core import Grid, ModelKind, PhysicalParams, SimState


def _split_ranges(x: np.ndarray, delta: float):
    """Clip to the regular range and flag the two extension regions."""
    lo = x < delta
    hi = x > 1.0 - delta
    xc = np.clip(x, delta, 1.0 - delta)
    return xc, lo, hi


def flory_huggins(x, chi: float, delta: float = 1e-6):
    """Regularized ``x ln x + (1-x) ln(1-x) + chi x (1-x)``.

    Agrees bit-for-bit with the exact formula on ``[delta, 1-delta]``;
    outside, the value is the second-order Taylor extension at the nearer
    threshold, keeping the function C^2 and finite for every argument.
    """
    x = np.asarray(x, dtype=float)
    xc, lo, hi = _split_ranges(x, delta)
    f = xc * np.log(xc) + (1.0 - xc) * np.log(1.0 - xc) + chi * xc * (1.0 - xc)
    if lo.any() or hi.any():
        fp = np.log(xc) - np.log1p(-xc) + chi * (1.0 - 2.0 * xc)
        fpp = 1.0 / xc + 1.0 / (1.0 - xc) - 2.0 * chi
        t = x - xc
        f = f + np.where(lo | hi, fp * t + 0.5 * fpp * t * t, 0.0)
    return f if f.ndim else float(f)


def flory_huggins_deriv(x, chi: float, delta: float = 1e-6):
    """Derivative of :func:`flory_huggins`: ``ln(x/(1-x)) + chi(1-2x)`` inside
    the regular range, linear extension outside (exact derivative of the
    extended potential)."""
    x = np.asarray(x, dtype=float)
    xc, lo, hi = _split_ranges(x, delta)
    fp = np.log(xc) - np.log1p(-xc) + chi * (1.0 - 2.0 * xc)
    if lo.any() or hi.any():
        fpp = 1.0 / xc + 1.0 / (1.0 - xc) - 2.0 * chi
        fp = fp + np.where(lo | hi, fpp * (x - xc), 0.0)
    return fp if fp.ndim else float(fp)


def flory_huggins_curvature(x, chi: float, delta: float = 1e-6):
    """Second derivative of the regularized potential (constant outside the
    regular range)."""
    x = np.asarray(x, dtype=float)
    xc, _, _ = _split_ranges(x, delta)
    fpp = 1.0 / xc + 1.0 / (1.0 - xc) - 2.0 * chi
    return fpp if fpp.ndim else float(fpp)


def bulk_potential(phi, chi_bulk: float, delta: float = 1e-6):
    """Bulk mixing potential ``F_b``."""
    return flory_huggins(phi, chi_bulk, delta)


def bulk_potential_deriv(phi, chi_bulk: float, delta: float = 1e-6):
    """Bulk mixing potential derivative ``F_b'``."""
    return flory_huggins_deriv(phi, chi_bulk, delta)


def surface_potential(psi, chi_surf: float, delta: float = 1e-6):
    """Surface mixing potential ``F_s`` (same family, surface interaction)."""
    return flory_huggins(psi, chi_surf, delta)


def surface_potential_deriv(psi, chi_surf: float, delta: float = 1e-6):
    return flory_huggins_deriv(psi, chi_surf, delta)


class EnergyParts(NamedTuple):
    total: float
    bulk: float
    surface: float


def gradient_energies(
    phi: np.ndarray, phi_gamma: np.ndarray, psi: np.ndarray, grid: Grid, p: PhysicalParams
) -> tuple[float, float]:
    """Discrete gradient energies (bulk including the dynamic-edge half-cell
    term that pairs with the trace unknown, surface 1D)."""
    dx = np.diff(phi, axis=1)
    dy = np.diff(phi, axis=0)
    edge = grid_ops.gamma_trace(phi, grid)
    e_bulk = 0.5 * p.gamma_bulk * (np.sum(dx * dx) + np.sum(dy * dy))
    e_bulk += p.gamma_bulk * np.sum((edge - phi_gamma) ** 2)
    ds = np.diff(psi)
    e_surf = 0.5 * p.gamma_surf * np.sum(ds * ds) / grid.h
    return float(e_bulk), float(e_surf)


def total_energy(state: SimState, grid: Grid | None, p: PhysicalParams) -> EnergyParts:
    """Discrete free energy ``(total, bulk, surface)``.

    Bulk: ``sum_cells [gamma_bulk/2 |grad phi|^2 + F_b(phi)] h^2`` with the
    boundary gradient evaluated against the trace unknown over half cells;
    surface: ``sum_edge [gamma_surf/2 |grad_s psi|^2 + F_s(psi)] h``.  The
    coupling energy of this family is identically zero.
    """
    grid = _resolve_grid(state, grid)
    e_bulk_grad, e_surf_grad = gradient_energies(state.phi, state.phi_gamma, state.psi, grid, p)
    e_bulk = e_bulk_grad + grid.cell_area * float(
        np.sum(flory_huggins(state.phi, p.chi_bulk, p.log_reg_delta))
    )
    e_surf = e_surf_grad + grid.h * float(
        np.sum(flory_huggins(state.psi, p.chi_surf, p.log_reg_delta))
    )
    return EnergyParts(e_bulk + e_surf, e_bulk, e_surf)


@dataclass(frozen=True)
class ChemicalPotentials:
    """Variational forces: bulk field, surface field, trace coupling, the
    (vanishing) normal-derivative conjugate, and the Robin exchange flux."""

    mu_bulk: np.ndarray
    mu_surf: np.ndarray
    mu_trace: np.ndarray
    mu_normal: np.ndarray
    exchange_flux: np.ndarray


def chemical_potentials(
    state: SimState, grid: Grid | None, p: PhysicalParams, kind: ModelKind | None = None
) -> ChemicalPotentials:
    """Variational derivatives of :func:`total_energy` plus the Robin flux.

    ``mu_bulk = F_b'(phi) - gamma_bulk * lap(phi)`` (dynamic-edge ghost
    closure), ``mu_surf = F_s'(psi) - gamma_surf * lap_s(psi)``,
    ``mu_trace = gamma_bulk * dphi/dn`` on the edge, ``mu_normal = 0`` and
    ``exchange_flux = (beta*mu_surf - mu_bulk|_edge)/alpha`` with the edge
    value of ``mu_bulk`` taken in the adjacent cell (the value the discrete
    energy identity pairs with the flux).  ``kind`` is accepted for interface
    symmetry; the potentials do not depend on it.
    """
    del kind
    grid = _resolve_grid(state, grid)
    delta = p.log_reg_delta
    mu_bulk = flory_huggins_deriv(state.phi, p.chi_bulk, delta) - p.gamma_bulk * grid_ops.bulk_laplacian(
        state.phi, state.phi_gamma, grid
    )
    mu_surf = flory_huggins_deriv(state.psi, p.chi_surf, delta) - grid_ops.surface_laplacian(
        state.psi, p.gamma_surf, grid
    )
    _, normal = grid_ops.boundary_trace_and_normal(state.phi, state.phi_gamma, grid)
    mu_trace = p.gamma_bulk * normal
    mu_normal = np.zeros(grid.n_gamma)
    mu_bulk_edge = grid_ops.gamma_trace(mu_bulk, grid)
    exchange_flux = (p.beta * mu_surf - mu_bulk_edge) / p.alpha
    return ChemicalPotentials(mu_bulk, mu_surf, mu_trace, mu_normal, exchange_flux)


def variational_consistency_check(
    state: SimState,
    grid: Grid | None,
    p: PhysicalParams,
    eps: float,
    samples_per_class: int = 10,
    seed: int = 0,
) -> float:
    """Max mismatch between central differences of the energy and the
    chemical potentials times quadrature weights, over sampled degrees of
    freedom of each class (bulk cells, trace, surface)."""
    if not 1e-7 <= eps <= 1e-4:
        raise ValueError(f"eps must lie in [1e-7, 1e-4], got {eps!r}")
    grid = _resolve_grid(state, grid)
    rng = np.random.default_rng(seed)
    pots = chemical_potentials(state, grid, p)
    h = grid.h
    worst = 0.0

    def central_diff(**replace_field) -> float:
        (name, arr), = replace_field.items()
        s = SimState(
            grid=grid,
            phi=arr if name == "phi" else state.phi,
            phi_gamma=arr if name == "phi_gamma" else state.phi_gamma,
            psi=arr if name == "psi" else state.psi,
            q_bulk=state.q_bulk,
            q_surf=state.q_surf,
        )
        return total_energy(s, grid, p).total

    for _ in range(samples_per_class):
        j = rng.integers(grid.ny)
        i = rng.integers(grid.nx)
        up, dn = state.phi.copy(), state.phi.copy()
        up[j, i] += eps
        dn[j, i] -= eps
        fd = (central_diff(phi=up) - central_diff(phi=dn)) / (2.0 * eps)
        worst = max(worst, abs(fd - h * h * pots.mu_bulk[j, i]))

    for name, weight, mu in (
        ("phi_gamma", h, pots.mu_trace),
        ("psi", h, pots.mu_surf),
    ):
        base = getattr(state, name)
        for _ in range(samples_per_class):
            k = rng.integers(grid.n_gamma)
            up, dn = base.copy(), base.copy()
            up[k] += eps
            dn[k] -= eps
            fd = (central_diff(**{name: up}) - central_diff(**{name: dn})) / (2.0 * eps)
            worst = max(worst, abs(fd - weight * mu[k]))

    return worst


def _resolve_grid(state: SimState, grid: Grid | None) -> Grid:
    if grid is None:
        return state.grid
    if grid != state.grid:
        raise ValueError("explicit grid differs from state.grid")
    return grid
