"""Discrete symplectic geometry on quadrangular meshes.

A quadrangular mesh assigns a point of R^{2n} to every vertex of the quotient
quadrangulation.  Each facet f_kl carries the quadrilateral

    A0 = tau(v_kl), A1 = tau(v_{k+1,l}), A2 = tau(v_{k+1,l+1}), A3 = tau(v_{k,l+1})

whose renormalized diagonals are

    U(f) = (N/sqrt(2)) (A2 - A0),      V(f) = (N/sqrt(2)) (A3 - A1).

The symplectic density is the per-facet scalar mu(f) = omega(U(f), V(f)).
The Liouville integral around the facet quadrilateral equals N^{-2} mu(f)
(N^{-2} is the Euclidean facet area), so a mesh is isotropic exactly when
mu vanishes on every facet.

Weak norms are built from finite differences along the diagonal translations
T_u (k,l) -> (k+1,l+1) and T_v (k,l) -> (k-1,l+1) only.  These span an
index-2 sublattice of the grid, so the weak norms are deliberately blind to
the axis directions e1, e2.
"""

from dataclasses import dataclass, field

import numpy as np

from .lattice import CellIndex, Chart
from .symplectic import liouville_polygon, omega  # noqa: F401  (re-export)

_CORNER_STEPS = ((0, 0), (1, 0), (1, 1), (0, 1))


def _corrected_lookup(chart, values, periods, k, l):
    """Mesh values at raw indices, shifted by the target periods across wraps.

    values[o] stores the canonical representative; a raw index displaced by
    M (q1, q2) picks up the target translation q1 u_1 + q2 u_2 where u_i is
    the target period attached to gamma_i.  Periodic meshes have u_i = 0 and
    the lookup is plain coset resolution.
    """
    x, y, q1, q2 = chart.canonical_with_shift(k, l)
    out = values[chart.offset_xy(x, y)]
    if periods is not None and periods.any():
        out = out + q1[..., None] * periods[0] + q2[..., None] * periods[1]
    return out


def corner_value_table(chart, values, periods=None):
    """(F, 4, d) table of facet corner values A0..A3 in canonical facet order."""
    kc, lc = chart.all_canonical()
    cols = [
        _corrected_lookup(chart, values, periods, kc + dk, lc + dl)
        for dk, dl in _CORNER_STEPS
    ]
    return np.stack(cols, axis=1)


@dataclass
class QuadMesh:
    """R^{2n} value per canonical vertex of the quotient quadrangulation.

    ``target_periods`` (2, 2n) holds the target translation gained per period
    gamma_i; zero for genuinely periodic meshes.  Lookups at arbitrary raw
    indices resolve through the canonical coset representative plus that
    translation, so the stored table always has exactly |det M| rows.
    """

    chart: Chart
    values: np.ndarray
    target_periods: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        f = self.chart.vertex_count
        if self.values.ndim != 2 or self.values.shape[0] != f:
            raise ValueError(f"expected {f} vertex values, got {self.values.shape}")
        if self.values.shape[1] % 2 != 0:
            raise ValueError("target dimension must be even")
        if self.target_periods is None:
            self.target_periods = np.zeros((2, self.values.shape[1]))
        else:
            self.target_periods = np.asarray(self.target_periods, dtype=float)
            if self.target_periods.shape != (2, self.values.shape[1]):
                raise ValueError("target_periods must have shape (2, 2n)")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def values_at(self, k, l):
        """Values at raw vertex indices (arrays broadcast)."""
        return _corrected_lookup(
            self.chart, self.values, self.target_periods, k, l
        )

    def corner_table(self):
        return corner_value_table(self.chart, self.values, self.target_periods)


@dataclass
class FacetField:
    """Scalar or vector value per canonical facet of the quadrangulation."""

    chart: Chart
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        f = self.chart.vertex_count
        if self.values.shape[0] != f:
            raise ValueError(f"expected {f} facet values, got {self.values.shape}")

    def values_at(self, k, l):
        return self.values[self.chart.offset_of_raw(k, l)]


def _diagonal_fields(mesh: QuadMesh):
    """Renormalized diagonal fields U, V as (F, 2n) arrays."""
    quads = mesh.corner_table()
    s = mesh.chart.N / np.sqrt(2.0)
    u = s * (quads[:, 2] - quads[:, 0])
    v = s * (quads[:, 3] - quads[:, 1])
    return u, v


def diagonals(mesh: QuadMesh, f: CellIndex):
    """Renormalized diagonals (U, V) of the quadrilateral along facet f."""
    k, l = int(f[0]), int(f[1])
    s = mesh.chart.N / np.sqrt(2.0)
    u = s * (mesh.values_at(k + 1, l + 1) - mesh.values_at(k, l))
    v = s * (mesh.values_at(k, l + 1) - mesh.values_at(k + 1, l))
    return u, v


def symplectic_density(mesh: QuadMesh) -> FacetField:
    """Per-facet density mu(f) = omega(U(f), V(f)); zero iff the mesh is isotropic."""
    u, v = _diagonal_fields(mesh)
    return FacetField(mesh.chart, omega(u, v))


def facet_liouville(mesh: QuadMesh) -> FacetField:
    """Liouville integral around every facet quadrilateral (= N^{-2} mu)."""
    quads = mesh.corner_table()
    return FacetField(mesh.chart, liouville_polygon(quads))


_DIAG_STEPS = {"u": (1, 1), "v": (-1, 1)}


def finite_difference(f: FacetField, direction: str) -> FacetField:
    """Diagonal finite difference (N/sqrt 2)(phi(T f) - phi(f)) of a facet field."""
    try:
        dk, dl = _DIAG_STEPS[direction]
    except KeyError:
        raise ValueError(f"direction must be 'u' or 'v', got {direction!r}") from None
    chart = f.chart
    kc, lc = chart.all_canonical()
    shifted = f.values[chart.offset_of_raw(kc + dk, lc + dl)]
    s = chart.N / np.sqrt(2.0)
    return FacetField(chart, s * (shifted - f.values))


def diagonal_parity_classes(chart: Chart):
    """Facet offsets grouped by diagonal reachability.

    The diagonal translations span the even-coordinate-sum sublattice, so
    facets split into two parity classes of k+l when both columns of M have
    even coordinate sums (parity then descends to the quotient); otherwise
    the diagonal translations act transitively and there is a single class.
    """
    m = chart.m_matrix
    kc, lc = chart.all_canonical()
    if (int(m[0, 0] + m[1, 0]) % 2 == 0) and (int(m[0, 1] + m[1, 1]) % 2 == 0):
        par = (kc + lc) % 2
        return [np.nonzero(par == 0)[0], np.nonzero(par == 1)[0]]
    return [np.arange(chart.vertex_count)]


def _magnitudes(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        return np.abs(values)
    return np.linalg.norm(values, axis=-1)


def _facet_distance_table(chart: Chart) -> np.ndarray:
    """Quotient distance between facet centers, indexed by the canonical
    representative of the index difference (center offsets cancel)."""
    kc, lc = chart.all_canonical()
    return chart.torus_distance(kc, lc)


def _holder_seminorm(f: FacetField, alpha, exact_pair_limit, sample_pairs, seed):
    chart = f.chart
    nfacets = chart.vertex_count
    kc, lc = chart.all_canonical()
    table = _facet_distance_table(chart)
    vals = f.values
    best = 0.0
    for cls in diagonal_parity_classes(chart):
        if cls.size < 2:
            continue
        if nfacets <= exact_pair_limit:
            for a in range(cls.size - 1):
                i = cls[a]
                rest = cls[a + 1 :]
                off = chart.offset_of_raw(kc[i] - kc[rest], lc[i] - lc[rest])
                d = table[off]
                gap = _magnitudes(vals[i] - vals[rest])
                ratio = gap / d**alpha
                if ratio.size:
                    best = max(best, float(ratio.max()))
        else:
            rng = np.random.default_rng(seed)
            i = cls[rng.integers(0, cls.size, size=sample_pairs)]
            j = cls[rng.integers(0, cls.size, size=sample_pairs)]
            keep = i != j
            i, j = i[keep], j[keep]
            off = chart.offset_of_raw(kc[i] - kc[j], lc[i] - lc[j])
            d = table[off]
            gap = _magnitudes(vals[i] - vals[j])
            ratio = gap / d**alpha
            if ratio.size:
                best = max(best, float(ratio.max()))
    return best


def weak_norm(
    f: FacetField,
    kind: str,
    alpha: float = 0.5,
    exact_pair_limit: int = 4096,
    sample_pairs: int = 100_000,
    seed: int = 0,
) -> float:
    """Weak discrete norms of a facet field.

    kind = "C0":          max |phi|.
    kind = "C1_w":        C0 plus the larger C0 norm of the two diagonal
                          finite-difference fields.
    kind = "C0alpha_w":   C0 plus the Hoelder quotient sup |phi(f1)-phi(f2)| /
                          d(f1,f2)^alpha over pairs of facets in the same
                          diagonal parity class, with d the flat quotient
                          distance of the facet centers.  Exact double loop up
                          to ``exact_pair_limit`` facets, seeded random pairs
                          beyond that.
    """
    mags = _magnitudes(f.values)
    c0 = float(mags.max())
    if kind == "C0":
        return c0
    if kind == "C1_w":
        du = finite_difference(f, "u")
        dv = finite_difference(f, "v")
        return c0 + max(
            float(_magnitudes(du.values).max()), float(_magnitudes(dv.values).max())
        )
    if kind == "C0alpha_w":
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        return c0 + _holder_seminorm(f, alpha, exact_pair_limit, sample_pairs, seed)
    raise ValueError(f"unknown norm kind {kind!r}")
