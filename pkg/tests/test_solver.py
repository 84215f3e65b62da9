"""Linearization of the density and the isotropic projection."""

import numpy as np
import pytest
from scipy.sparse.linalg import lsqr

from helpers import identity_chart, random_mesh, random_unitary_symplectic, rotated_chart
from isomesh import (
    MaxIterExceeded,
    make_clifford,
    make_flat_plane,
    make_product_torus,
    circle,
    figure_eight,
    mu_jacobian,
    project_isotropic,
    sample_quad,
    symplectic_density,
)
from isomesh.density import QuadMesh, facet_liouville


def mu_of(values, chart, periods=None):
    return symplectic_density(QuadMesh(chart, values, periods)).values


class TestJacobian:
    def test_directional_derivative_order(self):
        rng = np.random.default_rng(0)
        ch = rotated_chart(6)
        mesh = random_mesh(ch, rng)
        delta = rng.standard_normal(mesh.values.shape)
        jac = mu_jacobian(mesh)
        mu0 = symplectic_density(mesh).values
        lin = jac @ delta.ravel()
        errs = []
        for h in (1e-2, 1e-3, 1e-4, 1e-5):
            err = np.abs(
                mu_of(mesh.values + h * delta, ch) - mu0 - h * lin
            ).max()
            errs.append(err)
        orders = [
            np.log(errs[i] / errs[i + 1]) / np.log(10.0) for i in range(2)
        ]
        assert min(orders) >= 1.9

    def test_constant_displacement_in_kernel(self):
        rng = np.random.default_rng(1)
        ch = identity_chart(6)
        mesh = random_mesh(ch, rng)
        jac = mu_jacobian(mesh)
        const = np.tile(rng.standard_normal(4), (ch.vertex_count, 1))
        assert np.abs(jac @ const.ravel()).max() <= 1e-12

    def test_row_sums_vanish(self):
        # Sum over facets of L(delta) is zero for every delta: the column
        # sums of the matrix vanish (differentiated telescoping identity).
        rng = np.random.default_rng(2)
        ch = rotated_chart(8)
        mesh = random_mesh(ch, rng)
        jac = mu_jacobian(mesh)
        colsums = np.asarray(np.ones(ch.vertex_count) @ jac).ravel()
        assert np.abs(colsums).max() <= 1e-10 * max(1.0, abs(jac).max())

    def test_row_sparsity(self):
        ch = rotated_chart(6)
        rng = np.random.default_rng(3)
        mesh = random_mesh(ch, rng)
        jac = mu_jacobian(mesh)
        row_nnz = np.diff(jac.indptr)
        assert row_nnz.max() <= 8 * 4  # 8n with n = 2


class TestProjectIsotropic:
    def test_flat_plane_fixed_point(self):
        mesh = sample_quad(make_flat_plane(), identity_chart(4))
        rho, rep = project_isotropic(mesh, tol=1e-10)
        assert rep.iterations == 0
        assert rep.correction_c0 == 0.0
        assert np.array_equal(rho.values, mesh.values)

    def test_sheared_isotropic_fixed_point(self):
        # Adding independent constants to the two vertex parity classes
        # keeps the mesh isotropic; the solver returns it unchanged.
        ch = identity_chart(8)
        mesh = sample_quad(make_flat_plane(), ch)
        kc, lc = ch.all_canonical()
        parity = ((kc + lc) % 2)[:, None]
        rng = np.random.default_rng(4)
        values = mesh.values + np.where(parity == 0, rng.standard_normal(4),
                                        rng.standard_normal(4))
        sheared = QuadMesh(ch, values, mesh.target_periods)
        assert np.abs(symplectic_density(sheared).values).max() <= 1e-12
        rho, rep = project_isotropic(sheared, tol=1e-10)
        assert rep.iterations == 0
        assert np.array_equal(rho.values, sheared.values)

    @pytest.mark.parametrize("n", [8, 16])
    def test_output_contract(self, n):
        spec = make_product_torus(figure_eight(), circle())
        tau = sample_quad(spec, rotated_chart(n))
        rho, rep = project_isotropic(tau, tol=1e-10)
        assert rep.converged
        assert rep.residual_c0 <= 1e-10
        # Re-verified independently on the output mesh.
        assert np.abs(symplectic_density(rho).values).max() <= 1e-10
        # Facet quadrilaterals pass the Liouville test at tol * N^-2.
        assert np.abs(facet_liouville(rho).values).max() <= 1e-10 / n**2 + 1e-15
        assert rep.correction_c0 > 0

    def test_equivariance_under_unitary_symplectic(self):
        spec = make_product_torus(figure_eight(), circle())
        tau = sample_quad(spec, rotated_chart(8))
        rng = np.random.default_rng(5)
        a = random_unitary_symplectic(2, rng)
        rho0, rep0 = project_isotropic(tau, tol=1e-10)
        mapped = QuadMesh(tau.chart, tau.values @ a.T, tau.target_periods)
        rho1, rep1 = project_isotropic(mapped, tol=1e-10)
        assert rep0.iterations == rep1.iterations
        assert np.abs(rho1.values - rho0.values @ a.T).max() <= 1e-10

    def test_min_norm_step(self):
        # The Gauss-Newton step is orthogonal to the kernel of the
        # linearization (dense SVD null space on a small chart).
        ch = rotated_chart(4)
        assert ch.vertex_count <= 64
        spec = make_product_torus(figure_eight(), circle())
        tau = sample_quad(spec, ch)
        jac = mu_jacobian(tau)
        mu = symplectic_density(tau).values
        rhs = -(mu - mu.mean())
        delta = lsqr(jac, rhs, atol=1e-12, btol=1e-12, iter_lim=10_000)[0]
        dense = jac.toarray()
        _, s, vt = np.linalg.svd(dense)
        null = vt[np.sum(s > 1e-10 * s[0]) :]
        assert null.shape[0] > 0
        overlap = np.abs(null @ delta).max()
        assert overlap <= 1e-8 * np.linalg.norm(delta)

    def test_max_iter_exceeded(self):
        rng = np.random.default_rng(6)
        mesh = random_mesh(identity_chart(4), rng)
        assert np.abs(symplectic_density(mesh).values).max() > 1e-10
        with pytest.raises(MaxIterExceeded):
            project_isotropic(mesh, tol=1e-10, max_iter=0)

    def test_random_mesh_converges_eventually(self):
        rng = np.random.default_rng(7)
        mesh = random_mesh(identity_chart(4), rng, scale=0.1)
        rho, rep = project_isotropic(mesh, tol=1e-10, max_iter=50)
        assert rep.converged
        assert np.abs(symplectic_density(rho).values).max() <= 1e-10

    def test_bad_tol(self):
        mesh = sample_quad(make_flat_plane(), identity_chart(4))
        with pytest.raises(ValueError):
            project_isotropic(mesh, tol=0.0)

    def test_clifford_trivially_converged(self):
        # Product-of-circles samples are already isotropic, so the projection
        # is the identity with zero iterations on any linear chart.
        tau = sample_quad(make_clifford(1.0, 1.0), rotated_chart(8))
        rho, rep = project_isotropic(tau, tol=1e-10)
        assert rep.iterations == 0
        assert rep.correction_c0 == 0.0
