import numpy as np
import pytest

from bulksurf import grid_ops
from bulksurf.core import Grid

EDGES = ["bottom", "top", "left", "right"]


def brute_force_div(mu, mobility, boundary_flux, grid):
    """Independent face-by-face loop oracle for the flux divergence."""
    ny, nx = grid.shape
    h = grid.h
    out = np.zeros_like(mu)
    for j in range(ny):
        for i in range(nx):
            total = 0.0
            # x faces
            if i + 1 < nx:
                total += mobility * (mu[j, i + 1] - mu[j, i]) / h
            if i - 1 >= 0:
                total -= mobility * (mu[j, i] - mu[j, i - 1]) / h
            # y faces
            if j + 1 < ny:
                total += mobility * (mu[j + 1, i] - mu[j, i]) / h
            if j - 1 >= 0:
                total -= mobility * (mu[j, i] - mu[j - 1, i]) / h
            out[j, i] = total / h
    idx = grid_ops.gamma_cell_indices(grid)
    flat = out.ravel()
    flat[idx] += boundary_flux / h
    return flat.reshape(grid.shape)


class TestDivFlux:
    def test_constant_field_zero(self):
        g = Grid(nx=8, ny=8)
        mu = np.full(g.shape, 1.7)
        out = grid_ops.div_flux(mu, 2.0, np.zeros(g.n_gamma), g)
        assert np.max(np.abs(out)) == 0.0

    @pytest.mark.parametrize("edge", EDGES)
    def test_divergence_theorem(self, edge):
        g = Grid(nx=12, ny=12, gamma_edge=edge)
        rng = np.random.default_rng(0)
        mu = rng.standard_normal(g.shape)
        f = rng.standard_normal(g.n_gamma)
        out = grid_ops.div_flux(mu, 3.5, f, g)
        lhs = g.cell_area * np.sum(out)
        rhs = g.h * np.sum(f)
        # relative to the gross magnitude the telescoping sum cancels
        scale = g.cell_area * np.sum(np.abs(out)) + abs(rhs)
        assert abs(lhs - rhs) <= 1e-14 * scale

    def test_linear_field_against_loop_oracle(self):
        g = Grid(nx=4, ny=4)
        x, _ = g.cell_centers()
        out = grid_ops.div_flux(x, 1.0, np.zeros(g.n_gamma), g)
        expected = brute_force_div(x, 1.0, np.zeros(g.n_gamma), g)
        assert np.allclose(out, expected, atol=1e-14)
        # interior columns see a zero second difference; edge corrections cancel
        assert np.max(np.abs(out[:, 1:-1])) <= 1e-14
        assert abs(np.sum(out)) <= 1e-13

    @pytest.mark.parametrize("edge", EDGES)
    def test_random_against_loop_oracle(self, edge):
        g = Grid(nx=6, ny=6, gamma_edge=edge)
        rng = np.random.default_rng(1)
        mu = rng.standard_normal(g.shape)
        f = rng.standard_normal(g.n_gamma)
        assert np.allclose(
            grid_ops.div_flux(mu, 0.7, f, g), brute_force_div(mu, 0.7, f, g), atol=1e-13
        )

    def test_shape_mismatch(self):
        g = Grid(nx=8, ny=8)
        with pytest.raises(ValueError):
            grid_ops.div_flux(np.zeros((4, 4)), 1.0, np.zeros(8), g)
        with pytest.raises(ValueError):
            grid_ops.div_flux(np.zeros(g.shape), 1.0, np.zeros(3), g)


class TestSurfaceLaplacian:
    def test_constant_zero(self):
        g = Grid(nx=8, ny=8)
        out = grid_ops.surface_laplacian(np.full(8, 0.3), 2.0, g)
        assert np.max(np.abs(out)) == 0.0

    def test_zero_sum(self):
        g = Grid(nx=16, ny=16)
        u = np.random.default_rng(2).standard_normal(16)
        out = grid_ops.surface_laplacian(u, 1.3, g)
        assert abs(np.sum(out)) <= 1e-13 * max(1.0, np.max(np.abs(out)))

    def test_cosine_second_order(self):
        # lap cos(pi s / L) = -(pi/L)^2 cos(pi s / L); compare two resolutions.
        errs = []
        for n in (64, 128):
            g = Grid(nx=n, ny=n)
            s = grid_ops.surface_coordinates(g)
            length = g.gamma_length
            u = np.cos(np.pi * (s - g.xmin) / length)
            exact = -((np.pi / length) ** 2) * u
            out = grid_ops.surface_laplacian(u, 1.0, g)
            errs.append(np.max(np.abs(out - exact)))
        order = np.log2(errs[0] / errs[1])
        assert order > 1.9

    def test_symmetric_negative_semidefinite(self):
        g = Grid(nx=12, ny=12)
        rng = np.random.default_rng(3)
        u = rng.standard_normal(12)
        v = rng.standard_normal(12)
        lu = grid_ops.surface_laplacian(u, 1.0, g)
        lv = grid_ops.surface_laplacian(v, 1.0, g)
        assert np.dot(u, lv) == pytest.approx(np.dot(lu, v), abs=1e-13)
        assert np.dot(u, lu) <= 1e-14

    def test_linearity(self):
        g = Grid(nx=10, ny=10)
        rng = np.random.default_rng(4)
        u, v = rng.standard_normal(10), rng.standard_normal(10)
        left = grid_ops.surface_laplacian(2.0 * u - 3.0 * v, 1.5, g)
        right = 2.0 * grid_ops.surface_laplacian(u, 1.5, g) - 3.0 * grid_ops.surface_laplacian(
            v, 1.5, g
        )
        assert np.allclose(left, right, atol=1e-13)


class TestTraceAndNormal:
    def test_uniform_zero_normal(self):
        g = Grid(nx=8, ny=8)
        phi = np.full(g.shape, 0.4)
        trace, normal = grid_ops.boundary_trace_and_normal(phi, np.full(8, 0.4), g)
        assert np.array_equal(trace, np.full(8, 0.4))
        assert np.max(np.abs(normal)) == 0.0

    @pytest.mark.parametrize("edge", EDGES)
    def test_linear_profile_recovers_slope(self, edge):
        # phi affine in the outward-normal coordinate with slope m.
        g = Grid(nx=8, ny=8, gamma_edge=edge)
        m = 0.37
        x, y = g.cell_centers()
        nu = {
            "bottom": g.ymin - y,
            "top": y - g.ymax,
            "left": g.xmin - x,
            "right": x - g.xmax,
        }[edge]
        phi = 1.0 + m * nu
        phi_gamma = np.full(g.n_gamma, 1.0)  # nu = 0 on the edge
        _, normal = grid_ops.boundary_trace_and_normal(phi, phi_gamma, g)
        assert np.allclose(normal, m, atol=1e-14)

    def test_matching_trace_means_zero_normal(self):
        g = Grid(nx=8, ny=8)
        rng = np.random.default_rng(5)
        phi = rng.standard_normal(g.shape)
        phi_gamma = grid_ops.gamma_trace(phi, g).copy()
        _, normal = grid_ops.boundary_trace_and_normal(phi, phi_gamma, g)
        assert np.max(np.abs(normal)) == 0.0


class TestMatrixBuilders:
    @pytest.mark.parametrize("edge", EDGES)
    def test_ghost_laplacian_blocks_match_stencil(self, edge):
        g = Grid(nx=6, ny=6, gamma_edge=edge)
        rng = np.random.default_rng(6)
        phi = rng.standard_normal(g.shape)
        phi_gamma = rng.standard_normal(g.n_gamma)
        a, b = grid_ops.ghost_neg_laplacian_blocks(g)
        direct = grid_ops.bulk_laplacian(phi, phi_gamma, g)
        via_matrix = -(a @ phi.ravel() + b @ phi_gamma)
        assert np.allclose(via_matrix, direct.ravel(), atol=1e-12)

    def test_neumann_matrix_is_symmetric_psd(self):
        g = Grid(nx=8, ny=8)
        k = grid_ops.neumann_neg_laplacian_matrix(g)
        dense = k.toarray()
        assert np.allclose(dense, dense.T)
        assert np.linalg.eigvalsh(dense)[0] >= -1e-12

    def test_surface_matrix_matches_operator(self):
        g = Grid(nx=10, ny=10)
        u = np.random.default_rng(7).standard_normal(10)
        k = grid_ops.neg_surface_laplacian_matrix(g)
        assert np.allclose(-(k @ u), grid_ops.surface_laplacian(u, 1.0, g), atol=1e-13)

    @pytest.mark.parametrize("edge", EDGES)
    def test_trace_matrix(self, edge):
        g = Grid(nx=6, ny=6, gamma_edge=edge)
        phi = np.random.default_rng(8).standard_normal(g.shape)
        t = grid_ops.trace_matrix(g)
        assert np.array_equal(t @ phi.ravel(), grid_ops.gamma_trace(phi, g))
