import numpy as np
import pytest

from ibflow import mesh
from ibflow.errors import ConfigError


def fields_on(grid):
    xu, yu = np.meshgrid(grid.x_u(), grid.y_u(), indexing="ij")
    xv, yv = np.meshgrid(grid.x_v(), grid.y_v(), indexing="ij")
    return xu, yu, xv, yv


class TestGridSpec:
    def test_square_cells_enforced(self):
        with pytest.raises(ConfigError):
            mesh.GridSpec(32, 64, 1.0, 1.0)
        g = mesh.GridSpec(128, 64, 2.0, 1.0)
        assert g.h == pytest.approx(1.0 / 64)

    def test_power_of_two_enforced(self):
        with pytest.raises(ConfigError):
            mesh.GridSpec(30, 30)
        with pytest.raises(ConfigError):
            mesh.GridSpec(4, 4)

    def test_fluid_params_positive(self):
        with pytest.raises(ConfigError):
            mesh.FluidParams(rho=-1.0)
        with pytest.raises(ConfigError):
            mesh.FluidParams(mu=0.0)


class TestDivergence:
    def test_constant_field_is_divergence_free(self):
        g = mesh.GridSpec(16, 16)
        u = np.full((16, 16), 3.7)
        v = np.full((16, 17), -1.2)
        assert np.abs(mesh.divergence(u, v, g.h)).max() == 0.0

    def test_linear_field_exact(self):
        # u = x is not periodic, so the wrap column is excluded
        g = mesh.GridSpec(16, 16)
        xu, yu, xv, yv = fields_on(g)
        d = mesh.divergence(xu, -yv, g.h)
        assert np.abs(d[:-1, :]).max() < 1e-13

    def test_size_mismatch_raises(self):
        with pytest.raises(ValueError):
            mesh.divergence(np.zeros((8, 8)), np.zeros((8, 8)), 0.1)

    def test_analytic_divergence_free_rate(self):
        # u and v carry different wavenumbers so the discrete divergence is
        # a genuine O(h^2) residual rather than an exact cancellation
        errs = []
        for n in (16, 32, 64):
            g = mesh.GridSpec(n, n)
            xu, yu, xv, yv = fields_on(g)
            u = np.sin(2 * np.pi * xu) * np.cos(4 * np.pi * yu)
            v = -0.5 * np.cos(2 * np.pi * xv) * np.sin(4 * np.pi * yv)
            errs.append(np.abs(mesh.divergence(u, v, g.h)).max())
        rates = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(r > 1.8 for r in rates), (errs, rates)


class TestLaplacian:
    def test_constant_field(self):
        g = mesh.GridSpec(16, 16)
        assert np.abs(mesh.laplacian_u(np.full((16, 16), 2.5), g.h)[:, 2:-2]).max() == 0.0
        assert np.abs(mesh.laplacian_p(np.full((16, 16), 2.5), g.h)).max() == 0.0

    def test_quadratic_interior(self):
        g = mesh.GridSpec(32, 32)
        xu, yu, _, _ = fields_on(g)
        # second differences of a quadratic are exact away from boundaries
        f = (xu - 0.5) ** 2 + (yu - 0.5) ** 2
        lap = mesh.laplacian_u(f, g.h)
        interior = lap[8:24, 8:24]
        assert np.abs(interior - 4.0).max() < 1e-10

    def test_sinusoid_rate(self):
        errs = []
        for n in (16, 32, 64):
            g = mesh.GridSpec(n, n)
            xu, _, _, _ = fields_on(g)
            f = np.sin(2 * np.pi * xu)
            lap = mesh.laplacian_u(f, g.h)
            errs.append(np.abs(lap + (2 * np.pi) ** 2 * f)[:, n // 4 : -n // 4].max())
        rates = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(abs(r - 2.0) < 0.2 for r in rates), (errs, rates)

    def test_linearity(self):
        g = mesh.GridSpec(16, 16)
        rng = np.random.default_rng(7)
        f = rng.standard_normal((16, 16))
        assert np.allclose(
            mesh.laplacian_u(2.0 * f, g.h), 2.0 * mesh.laplacian_u(f, g.h)
        )

    def test_noslip_ghost_zeroes_wall_average(self):
        g = mesh.GridSpec(16, 16)
        rng = np.random.default_rng(3)
        u = rng.standard_normal((16, 16))
        # reflected ghost row must cancel the first interior row at the wall
        ghost_lo = -u[:, 0]
        assert np.abs(0.5 * (ghost_lo + u[:, 0])).max() == 0.0


class TestAdvect:
    def test_uniform_flow(self):
        g = mesh.GridSpec(16, 16)
        u = np.full((16, 16), 1.3)
        v = np.zeros((16, 17))
        au, av = mesh.advect(u, v, g.h)
        assert np.abs(au).max() == 0.0
        assert np.abs(av).max() == 0.0

    def test_shear_flow_no_self_advection(self):
        g = mesh.GridSpec(16, 16)
        y = g.y_u()
        u = np.tile(4.0 * y * (1 - y), (16, 1))
        v = np.zeros((16, 17))
        au, av = mesh.advect(u, v, g.h)
        assert np.abs(au).max() == 0.0
        assert np.abs(av).max() == 0.0

    def test_sinusoid_oracle(self):
        errs = []
        for n in (32, 64, 128):
            g = mesh.GridSpec(n, n)
            xu, _, _, _ = fields_on(g)
            u = np.sin(2 * np.pi * xu)
            v = np.zeros((n, n + 1))
            au, _ = mesh.advect(u, v, g.h)
            exact = np.pi * np.sin(4 * np.pi * xu)
            errs.append(np.abs(au - exact).max())
        rates = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(abs(r - 2.0) < 0.2 for r in rates), (errs, rates)

    def test_quadratic_scaling(self):
        g = mesh.GridSpec(16, 16)
        xu, _, _, _ = fields_on(g)
        u = np.sin(2 * np.pi * xu)
        v = np.zeros((16, 17))
        au1, _ = mesh.advect(u, v, g.h)
        au2, _ = mesh.advect(2.0 * u, v, g.h)
        assert np.allclose(au2, 4.0 * au1)
