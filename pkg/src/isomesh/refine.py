"""Completion of isotropic quadrangular meshes into triangular meshes.

Each quadrangulation facet is refined into four triangles by inserting a
vertex z_kl at the facet center.  The mesh value at z_kl is an apex point
P for the quadrilateral (A0 A1 A2 A3): either the plain barycenter, or the
*optimal apex*, the point closest to the barycenter G such that every
triangle (P, A_i, A_{i+1}) spans an isotropic plane.  The isotropy of
triangle i is the single linear equation

    omega(A_{i+1} - A_i, P) + omega(A_i, A_{i+1}) = 0,

and the four equations (whose rows sum to zero, the edges closing up) are
solvable exactly when the quadrilateral itself is isotropic.  The affine
solution space has codimension equal to the dimension of the quadrilateral's
affine span, so the minimum-distance apex is computed as G plus the
minimum-norm least-squares solution in the shifted variable, via SVD with a
relative singular value cutoff, which covers flat and degenerate
quadrilaterals uniformly.
"""

from dataclasses import dataclass

import numpy as np

from .density import QuadMesh, corner_value_table
from .lattice import Chart
from .symplectic import apply_j, liouville_polygon, omega

_SVD_CUTOFF = 1e-10
_RESIDUAL_TOL = 1e-10


class NotIsotropic(ValueError):
    """Quadrilateral fails the isotropy compatibility condition."""

    def __init__(self, message, facet=None):
        super().__init__(message)
        self.facet = facet


@dataclass
class TriMesh:
    """Values on the triangulated quadrangulation: corners plus facet apexes.

    corner_values has one row per canonical quadrangulation vertex and
    apex_values one row per canonical facet; the induced triangulation has
    4 |det M| triangles.
    """

    chart: Chart
    corner_values: np.ndarray
    apex_values: np.ndarray
    target_periods: np.ndarray | None = None

    def __post_init__(self):
        self.corner_values = np.asarray(self.corner_values, dtype=float)
        self.apex_values = np.asarray(self.apex_values, dtype=float)
        f = self.chart.vertex_count
        if self.corner_values.shape[0] != f or self.apex_values.shape[0] != f:
            raise ValueError("corner and apex tables must each have |det M| rows")
        if self.corner_values.shape != self.apex_values.shape:
            raise ValueError("corner and apex tables must have matching shapes")
        if self.target_periods is None:
            self.target_periods = np.zeros((2, self.corner_values.shape[1]))
        else:
            self.target_periods = np.asarray(self.target_periods, dtype=float)

    @property
    def dim(self) -> int:
        return self.corner_values.shape[1]

    @property
    def triangle_count(self) -> int:
        return 4 * self.chart.vertex_count

    def corner_table(self):
        return corner_value_table(self.chart, self.corner_values, self.target_periods)


def barycentric_apexes(mesh: QuadMesh) -> TriMesh:
    """Triangular mesh with each apex at the barycenter of its quadrilateral."""
    quads = mesh.corner_table()
    return TriMesh(
        chart=mesh.chart,
        corner_values=mesh.values.copy(),
        apex_values=quads.mean(axis=1),
        target_periods=mesh.target_periods.copy(),
    )


def apex_constraints(quads):
    """Constraint rows and right-hand side of the isotropic-apex system.

    ``quads`` has shape (..., 4, 2n).  Row i of the returned (..., 4, 2n)
    matrix represents P -> omega(A_{i+1} - A_i, P) = <P, J(A_{i+1} - A_i)>;
    the right-hand side is -omega(A_i, A_{i+1}).  Rows sum to zero, and the
    right-hand sides sum to -2x the Liouville integral of the quadrilateral,
    which is the solvability obstruction.
    """
    quads = np.asarray(quads, dtype=float)
    nxt = np.roll(quads, -1, axis=-2)
    rows = apply_j(nxt - quads)
    rhs = -omega(quads, nxt)
    return rows, rhs


def _edge_scale(quads):
    edges = np.roll(quads, -1, axis=-2) - quads
    return np.linalg.norm(edges, axis=-1).max(axis=-1)


def _optimal_apexes(quads, iso_tol, facet_labels=None):
    """Batched optimal apexes for (..., 4, 2n) quadrilaterals."""
    quads = np.asarray(quads, dtype=float)
    liou = np.atleast_1d(liouville_polygon(quads))
    flat = quads.reshape(-1, 4, quads.shape[-1])
    bad = np.nonzero(np.abs(liou.ravel()) > iso_tol)[0]
    if bad.size:
        i = int(bad[0])
        label = facet_labels[i] if facet_labels is not None else i
        raise NotIsotropic(
            f"facet {label}: |liouville| = {abs(liou.ravel()[i]):.3e} exceeds "
            f"iso_tol = {iso_tol:.3e}",
            facet=label,
        )
    g = flat.mean(axis=1)
    rows, rhs = apex_constraints(flat)
    shifted = rhs - np.einsum("fij,fj->fi", rows, g)
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    keep = s > _SVD_CUTOFF * s[:, :1]
    sinv = np.where(keep, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    coeff = sinv * np.einsum("fij,fi->fj", u, shifted)
    q = np.einsum("fij,fi->fj", vt, coeff)
    apex = g + q
    resid = np.abs(np.einsum("fij,fj->fi", rows, apex) - rhs).max(axis=1)
    scale = _edge_scale(flat)
    limit = _RESIDUAL_TOL * scale + 1e-14 * (1.0 + np.abs(rhs).max(axis=1))
    bad = np.nonzero(resid > limit)[0]
    if bad.size:
        i = int(bad[0])
        label = facet_labels[i] if facet_labels is not None else i
        raise NotIsotropic(
            f"facet {label}: apex system inconsistent, residual "
            f"{resid[i]:.3e} > {limit[i]:.3e}",
            facet=label,
        )
    return apex.reshape(quads.shape[:-2] + (quads.shape[-1],))


def optimal_apex(a0, a1, a2, a3, iso_tol: float = 1e-9) -> np.ndarray:
    """Apex closest to the barycenter making all four pyramid faces isotropic.

    Requires the quadrilateral to be isotropic within ``iso_tol`` (Liouville
    integral of the boundary); a planar isotropic parallelogram returns its
    barycenter exactly, a fully degenerate quadrilateral returns the repeated
    point.
    """
    quad = np.stack(
        [np.asarray(p, dtype=float) for p in (a0, a1, a2, a3)], axis=0
    )
    return _optimal_apexes(quad[None], iso_tol)[0]


def quad_dimension(a0, a1, a2, a3, rank_tol: float = 1e-10) -> int:
    """Dimension of the affine span of the quadrilateral (0 to 3).

    Numerical rank of the three edge vectors from A0; singular values below
    rank_tol times the largest count as zero.  For isotropic quadrilaterals
    this equals the codimension of the isotropic-apex solution space.
    """
    pts = np.stack([np.asarray(p, dtype=float) for p in (a0, a1, a2, a3)])
    edges = pts[1:] - pts[0]
    s = np.linalg.svd(edges, compute_uv=False)
    if s[0] <= 0.0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def apex_refine(mesh: QuadMesh, iso_tol: float | None = None) -> TriMesh:
    """Optimal-apex triangular refinement of an isotropic quadrangular mesh.

    ``iso_tol`` bounds the per-facet Liouville integral; the default
    10 * 1e-10 * N^2 matches a solver residual tolerance of 1e-10 on the
    density (the Liouville integral is N^{-2} mu).  Raises NotIsotropic with
    the offending facet index when a quadrilateral fails the compatibility
    condition.
    """
    if iso_tol is None:
        iso_tol = 10.0 * 1e-10 * mesh.chart.N**2
    quads = mesh.corner_table()
    kc, lc = mesh.chart.all_canonical()
    labels = [(int(k), int(l)) for k, l in zip(kc, lc)]
    apexes = _optimal_apexes(quads, iso_tol, facet_labels=labels)
    return TriMesh(
        chart=mesh.chart,
        corner_values=mesh.values.copy(),
        apex_values=apexes,
        target_periods=mesh.target_periods.copy(),
    )
