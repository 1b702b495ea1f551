import numpy as np
import pytest

from bulksurf.core import Grid, PhysicalParams, SimState
from bulksurf.integrator import quadratize


@pytest.fixture
def paper_params() -> PhysicalParams:
    """Reference parameter set of the spinodal-decomposition scenario."""
    return PhysicalParams()


@pytest.fixture
def grid16() -> Grid:
    return Grid(nx=16, ny=16)


@pytest.fixture
def grid32() -> Grid:
    return Grid(nx=32, ny=32)


def make_state(grid: Grid, p: PhysicalParams, seed: int = 0, lo: float = 0.25, hi: float = 0.45) -> SimState:
    """Random in-range state with consistent trace and auxiliaries."""
    rng = np.random.default_rng(seed)
    phi = rng.uniform(lo, hi, size=grid.shape)
    from bulksurf import grid_ops

    phi_gamma = grid_ops.gamma_trace(phi, grid) + rng.uniform(-0.02, 0.02, size=grid.n_gamma)
    psi = rng.uniform(lo, hi, size=grid.n_gamma)
    state = SimState(
        grid=grid,
        phi=phi,
        phi_gamma=phi_gamma,
        psi=psi,
        q_bulk=np.zeros(grid.shape),
        q_surf=np.zeros(grid.n_gamma),
    )
    q_bulk, q_surf = quadratize(state, p)
    return SimState(
        grid=grid,
        phi=phi,
        phi_gamma=phi_gamma,
        psi=psi,
        q_bulk=q_bulk,
        q_surf=q_surf,
    )


def smooth_state(grid: Grid, p: PhysicalParams, amp: float = 0.05) -> SimState:
    """Smooth in-band state (single cosine bump around 0.35)."""
    x, y = grid.cell_centers()
    lx = grid.xmax - grid.xmin
    ly = grid.ymax - grid.ymin
    phi = 0.35 + amp * np.cos(np.pi * (x - grid.xmin) / lx) * np.cos(np.pi * (y - grid.ymin) / ly)
    from bulksurf import grid_ops

    phi_gamma = grid_ops.gamma_trace(phi, grid).copy()
    psi = phi_gamma.copy()
    state = SimState(
        grid=grid,
        phi=phi,
        phi_gamma=phi_gamma,
        psi=psi,
        q_bulk=np.zeros(grid.shape),
        q_surf=np.zeros(grid.n_gamma),
    )
    q_bulk, q_surf = quadratize(state, p)
    return SimState(
        grid=grid,
        phi=phi,
        phi_gamma=phi_gamma,
        psi=psi,
        q_bulk=q_bulk,
        q_surf=q_surf,
    )
