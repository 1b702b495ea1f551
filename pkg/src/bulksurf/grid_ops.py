"""Staggered-grid discrete operators with dynamic-edge couplings.

Bulk fields are cell-centered; fluxes live on faces.  The three static edges
close with mirror ghosts (homogeneous Neumann), the dynamic edge closes either
with a prescribed outward flux (for divergence operators) or with the ghost
value ``2*phi_gamma - phi_adjacent`` tying the bulk stencil to the independent
trace unknown.  All operators keep the discrete summation-by-parts identities
exact, which is what the conservation and energy proofs of the time stepper
rest on:

* ``h^2 * sum(div_flux(mu, M, f)) == h * sum(f)`` for any ``mu, f``;
* ``h * sum(surface_laplacian(u, c)) == 0`` for any ``u``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sps

from .core import Grid


def _check_bulk(field: np.ndarray, grid: Grid, name: str = "field") -> None:
    if field.shape != grid.shape:
        raise ValueError(f"{name} has shape {field.shape}, expected {grid.shape}")


def _check_surface(field: np.ndarray, grid: Grid, name: str = "field") -> None:
    if field.shape != (grid.n_gamma,):
        raise ValueError(f"{name} has shape {field.shape}, expected ({grid.n_gamma},)")


@lru_cache(maxsize=None)
def gamma_cell_indices(grid: Grid) -> np.ndarray:
    """Flat (C-order) indices of the cells adjacent to the dynamic edge.

    Ordered along the edge by increasing coordinate, matching surface-field
    indexing.
    """
    nx, ny = grid.nx, grid.ny
    if grid.gamma_edge == "bottom":
        idx = np.arange(nx)
    elif grid.gamma_edge == "top":
        idx = (ny - 1) * nx + np.arange(nx)
    elif grid.gamma_edge == "left":
        idx = np.arange(ny) * nx
    else:  # right
        idx = np.arange(ny) * nx + (nx - 1)
    idx.setflags(write=False)
    return idx


def gamma_trace(field: np.ndarray, grid: Grid) -> np.ndarray:
    """Values of the cells adjacent to the dynamic edge (read-only view)."""
    _check_bulk(field, grid)
    if grid.gamma_edge == "bottom":
        return field[0, :]
    if grid.gamma_edge == "top":
        return field[-1, :]
    if grid.gamma_edge == "left":
        return field[:, 0]
    return field[:, -1]


def surface_coordinates(grid: Grid) -> np.ndarray:
    """Face-center coordinates along the dynamic edge."""
    n = grid.n_gamma
    origin = grid.xmin if grid.gamma_edge in ("bottom", "top") else grid.ymin
    return origin + (np.arange(n) + 0.5) * grid.h


def bulk_laplacian(phi: np.ndarray, phi_gamma: np.ndarray, grid: Grid) -> np.ndarray:
    """Five-point Laplacian with mirror ghosts and the dynamic-edge closure.

    On the dynamic edge the ghost value is ``2*phi_gamma - phi_adjacent`` so
    that the one-sided normal derivative seen by the stencil is
    ``2*(phi_gamma - phi_adjacent)/h``.
    """
    _check_bulk(phi, grid, "phi")
    _check_surface(phi_gamma, grid, "phi_gamma")
    p = np.pad(phi, 1, mode="edge")
    ghost = 2.0 * phi_gamma - gamma_trace(phi, grid)
    if grid.gamma_edge == "bottom":
        p[0, 1:-1] = ghost
    elif grid.gamma_edge == "top":
        p[-1, 1:-1] = ghost
    elif grid.gamma_edge == "left":
        p[1:-1, 0] = ghost
    else:
        p[1:-1, -1] = ghost
    lap = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * phi
    return lap / grid.h**2


def div_flux(mu: np.ndarray, mobility: float, boundary_flux: np.ndarray, grid: Grid) -> np.ndarray:
    """Divergence of ``mobility * grad(mu)`` with prescribed dynamic-edge flux.

    Interior faces carry ``mobility * (mu_R - mu_L)/h``; static-edge faces are
    zero-flux; the dynamic-edge faces carry the outward flux ``boundary_flux``.
    The discrete divergence theorem holds exactly:
    ``h^2 * sum(result) == h * sum(boundary_flux)``.
    """
    _check_bulk(mu, grid, "mu")
    _check_surface(boundary_flux, grid, "boundary_flux")
    h = grid.h
    out = np.zeros_like(mu)
    fx = (mobility / h) * np.diff(mu, axis=1)
    fy = (mobility / h) * np.diff(mu, axis=0)
    out[:, :-1] += fx / h
    out[:, 1:] -= fx / h
    out[:-1, :] += fy / h
    out[1:, :] -= fy / h
    out.ravel()[gamma_cell_indices(grid)] += boundary_flux / h
    return out


def surface_laplacian(u: np.ndarray, c: float, grid: Grid) -> np.ndarray:
    """1D operator ``d/ds (c du/ds)`` with mirror-ghost (Neumann) endpoints.

    Symmetric negative-semidefinite as a matrix; ``sum(result) == 0`` exactly.
    """
    _check_surface(u, grid, "u")
    d = np.diff(u)
    lap = np.zeros_like(u)
    lap[:-1] += d
    lap[1:] -= d
    return (c / grid.h**2) * lap


def boundary_trace_and_normal(
    phi: np.ndarray, phi_gamma: np.ndarray, grid: Grid
) -> tuple[np.ndarray, np.ndarray]:
    """Trace and outward normal derivative on the dynamic edge.

    The trace is the independent unknown itself; the normal derivative is the
    ghost-consistent one-sided difference ``2*(phi_gamma - phi_adjacent)/h``
    (outward sign convention).
    """
    _check_bulk(phi, grid, "phi")
    _check_surface(phi_gamma, grid, "phi_gamma")
    trace = phi_gamma.copy()
    normal = 2.0 * (phi_gamma - gamma_trace(phi, grid)) / grid.h
    return trace, normal


# ---------------------------------------------------------------------------
# Sparse matrix builders (cached per grid; treat results as read-only)
# ---------------------------------------------------------------------------


def _neg_laplacian_1d(n: int, h: float) -> sps.csr_matrix:
    """Negative 1D Laplacian with mirror-ghost endpoints; symmetric PSD."""
    main = np.full(n, 2.0)
    main[0] = main[-1] = 1.0
    off = np.full(n - 1, -1.0)
    return sps.diags([off, main, off], offsets=[-1, 0, 1], format="csr") / h**2


@lru_cache(maxsize=None)
def neg_surface_laplacian_matrix(grid: Grid) -> sps.csr_matrix:
    """Matrix of ``-d/ds(du/ds)`` on the dynamic edge (unit coefficient)."""
    return _neg_laplacian_1d(grid.n_gamma, grid.h)


@lru_cache(maxsize=None)
def neumann_neg_laplacian_matrix(grid: Grid) -> sps.csr_matrix:
    """Negative 2D Laplacian, mirror ghosts on all four edges; symmetric PSD."""
    kx = _neg_laplacian_1d(grid.nx, grid.h)
    ky = _neg_laplacian_1d(grid.ny, grid.h)
    ix = sps.identity(grid.nx, format="csr")
    iy = sps.identity(grid.ny, format="csr")
    return (sps.kron(iy, kx) + sps.kron(ky, ix)).tocsr()


@lru_cache(maxsize=None)
def trace_matrix(grid: Grid) -> sps.csr_matrix:
    """Selector mapping a flattened bulk field to its dynamic-edge trace row."""
    n = grid.n_gamma
    idx = gamma_cell_indices(grid)
    return sps.csr_matrix(
        (np.ones(n), (np.arange(n), idx)), shape=(n, grid.n_cells)
    )


@lru_cache(maxsize=None)
def ghost_neg_laplacian_blocks(grid: Grid) -> tuple[sps.csr_matrix, sps.csr_matrix]:
    """Blocks ``(A, B)`` with ``-lap(phi; phi_gamma) == A @ phi + B @ phi_gamma``.

    ``A`` is the all-Neumann negative Laplacian plus ``2/h^2`` on the diagonal
    of dynamic-edge cells; ``B`` couples those cells to the trace unknowns
    with ``-2/h^2``.
    """
    h2 = grid.h**2
    idx = gamma_cell_indices(grid)
    a = neumann_neg_laplacian_matrix(grid).tolil(copy=True)
    for k in idx:
        a[k, k] += 2.0 / h2
    b = sps.csr_matrix(
        (np.full(grid.n_gamma, -2.0 / h2), (idx, np.arange(grid.n_gamma))),
        shape=(grid.n_cells, grid.n_gamma),
    )
    return a.tocsr(), b
