"""Projection of near-isotropic quadrangular meshes onto the zero set of mu.

The density mu is quadratic in the mesh, so its exact linearization at tau is

    L(delta) = omega(U_delta, V_tau) + omega(U_tau, V_delta),

a sparse operator whose facet row touches exactly the four corner vertices
(8n nonzeros per row).  The projection is a Gauss-Newton iteration: each step
solves L(delta) = -mu for the minimum-Euclidean-norm delta with LSQR, which
works on the normal equations and therefore never leaves the row space of L
(the step is orthogonal to the null space, where the shear symmetries live).
The constraint rows sum to zero identically -- boundary Liouville integrals
cancel pairwise on the closed torus -- so the residual is projected onto mean
zero before solving, defensively.

Full Newton steps are taken; if the sup norm of the residual fails to
decrease, the step is halved up to ten times.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsqr

from .density import QuadMesh, _diagonal_fields, symplectic_density
from .symplectic import apply_j


class MaxIterExceeded(RuntimeError):
    """Residual above tolerance after the iteration budget."""


class LinearSolveFailure(RuntimeError):
    """Inner least-squares solve stagnated; retry with a rotated chart isometry."""


@dataclass
class SolveReport:
    iterations: int
    residual_c0: float
    correction_c0: float
    converged: bool


def mu_jacobian(mesh: QuadMesh) -> sp.csr_matrix:
    """Sparse linearization of mu at the mesh, (F, 2n F) in flattened vertex order.

    Acting on a displacement delta (flattened (F, 2n)), the row of facet f is
    omega(U_delta, V_tau)(f) + omega(U_tau, V_delta)(f).  Column sums vanish
    identically (differentiated telescoping identity).
    """
    chart = mesh.chart
    nfacets = chart.vertex_count
    dim = mesh.dim
    kc, lc = chart.all_canonical()
    offs = [
        chart.offset_of_raw(kc + dk, lc + dl)
        for dk, dl in ((0, 0), (1, 0), (1, 1), (0, 1))
    ]
    u, v = _diagonal_fields(mesh)
    s = chart.N / np.sqrt(2.0)
    ju = apply_j(u)
    jv = apply_j(v)
    # d mu / d x_{corner}: gradient wrt U is -J V, wrt V is J U.
    blocks = [s * jv, -s * ju, -s * jv, s * ju]
    rows = np.repeat(np.arange(nfacets), dim)
    data = []
    cols = []
    row_idx = []
    for corner, block in enumerate(blocks):
        base = offs[corner][:, None] * dim + np.arange(dim)[None, :]
        cols.append(base.ravel())
        data.append(block.ravel())
        row_idx.append(rows)
    mat = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(row_idx), np.concatenate(cols))),
        shape=(nfacets, nfacets * dim),
    )
    return mat.tocsr()


def project_isotropic(
    tau0: QuadMesh,
    tol: float = 1e-10,
    max_iter: int = 50,
    inner_tol: float = 1e-12,
    max_halvings: int = 10,
) -> tuple[QuadMesh, SolveReport]:
    """Project a quadrangular mesh onto the isotropic meshes, min-norm steps.

    Returns the projected mesh rho with max_f |mu(rho)(f)| <= tol and a
    report with the iteration count and the sup-norm correction
    ||rho - tau0||.  An already isotropic mesh is returned unchanged with
    zero iterations.  Raises MaxIterExceeded if the residual stays above tol
    for max_iter Gauss-Newton steps and LinearSolveFailure when the inner
    solver or the damping safeguard stagnates.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    chart = tau0.chart
    dim = tau0.dim
    values = tau0.values.copy()
    periods = tau0.target_periods.copy()
    mesh = QuadMesh(chart, values, periods)
    mu = symplectic_density(mesh).values
    res = float(np.abs(mu).max())
    iterations = 0
    nfacets = chart.vertex_count
    iter_lim = max(1000, 4 * nfacets)
    while res > tol:
        if iterations >= max_iter:
            raise MaxIterExceeded(
                f"residual {res:.3e} > tol {tol:.3e} after {iterations} iterations"
            )
        jac = mu_jacobian(mesh)
        rhs = -(mu - mu.mean())
        result = lsqr(jac, rhs, atol=inner_tol, btol=inner_tol, iter_lim=iter_lim)
        delta, istop = result[0], result[1]
        if istop not in (0, 1, 2, 4, 5):
            raise LinearSolveFailure(f"lsqr stopped with istop={istop}")
        delta = delta.reshape(nfacets, dim)
        step = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            trial_values = values + step * delta
            trial = QuadMesh(chart, trial_values, periods)
            trial_mu = symplectic_density(trial).values
            trial_res = float(np.abs(trial_mu).max())
            if trial_res < res:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise LinearSolveFailure(
                f"no residual decrease after {max_halvings} halvings "
                f"(residual {res:.3e})"
            )
        values, mesh, mu, res = trial_values, trial, trial_mu, trial_res
        iterations += 1
    correction = float(np.linalg.norm(values - tau0.values, axis=1).max())
    report = SolveReport(
        iterations=iterations,
        residual_c0=res,
        correction_c0=correction,
        converged=True,
    )
    return QuadMesh(chart, values, periods), report
