"""Piecewise linear maps from triangular meshes, their certification and export.

Each quadrangulation facet contributes four chart triangles

    (v_kl, v_{k+1,l}, z_kl), (v_{k+1,l}, v_{k+1,l+1}, z_kl),
    (v_{k+1,l+1}, v_{k,l+1}, z_kl), (v_{k,l+1}, v_kl, z_kl),

and the PL map is the affine interpolant of the stored values on each of
them.  The source metric is the flat chart metric (positions A_N (k/N, l/N)),
the target metric Euclidean.  Per-triangle pullbacks of the symplectic form
are constant, so PL isotropy is the finite list of residuals
|omega(B - A, C - A)| over triangles, which equals exactly twice the
Liouville integral around the triangle boundary.

Topology checks are tolerance-based floating point: immersion = nondegenerate
differentials plus pairwise star separation beyond shared simplices;
embedding = no two non-adjacent triangle images within tol * scale, candidate
pairs pruned with a bounding volume hierarchy over axis-aligned boxes in
R^{2n}, exact pair distances by convex minimization over barycentric
coordinates.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .density import _corrected_lookup, corner_value_table
from .immersion import ImmersionSpec
from .refine import TriMesh
from .symplectic import liouville_polygon, omega

_CORNER_STEPS = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.int64)


@dataclass
class PLMap:
    """Triangular mesh with evaluation tables for the induced PL map."""

    tri: TriMesh
    tri_values: np.ndarray = field(init=False, repr=False)
    tri_source: np.ndarray = field(init=False, repr=False)
    tri_vertex_ids: np.ndarray = field(init=False, repr=False)
    differentials: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        tri = self.tri
        chart = tri.chart
        nfacets = chart.vertex_count
        kc, lc = chart.all_canonical()
        corners = tri.corner_table()  # (F, 4, d)
        apexes = tri.apex_values  # (F, d)
        dim = tri.dim

        vals = np.empty((nfacets, 4, 3, dim))
        for s in range(4):
            vals[:, s, 0] = corners[:, s]
            vals[:, s, 1] = corners[:, (s + 1) % 4]
            vals[:, s, 2] = apexes
        self.tri_values = vals.reshape(4 * nfacets, 3, dim)

        csrc = np.empty((nfacets, 4, 2))
        for j, (dk, dl) in enumerate(_CORNER_STEPS):
            csrc[:, j] = chart.position(kc + dk, lc + dl)
        asrc = chart.facet_center(kc, lc)
        src = np.empty((nfacets, 4, 3, 2))
        for s in range(4):
            src[:, s, 0] = csrc[:, s]
            src[:, s, 1] = csrc[:, (s + 1) % 4]
            src[:, s, 2] = asrc
        self.tri_source = src.reshape(4 * nfacets, 3, 2)

        cids = np.empty((nfacets, 4), dtype=np.int64)
        for j, (dk, dl) in enumerate(_CORNER_STEPS):
            cids[:, j] = chart.offset_of_raw(kc + dk, lc + dl)
        aid = nfacets + np.arange(nfacets)
        vids = np.empty((nfacets, 4, 3), dtype=np.int64)
        for s in range(4):
            vids[:, s, 0] = cids[:, s]
            vids[:, s, 1] = cids[:, (s + 1) % 4]
            vids[:, s, 2] = aid
        self.tri_vertex_ids = vids.reshape(4 * nfacets, 3)

        e = np.stack(
            [
                self.tri_source[:, 1] - self.tri_source[:, 0],
                self.tri_source[:, 2] - self.tri_source[:, 0],
            ],
            axis=-1,
        )  # (T, 2, 2)
        w = np.stack(
            [
                self.tri_values[:, 1] - self.tri_values[:, 0],
                self.tri_values[:, 2] - self.tri_values[:, 0],
            ],
            axis=-1,
        )  # (T, d, 2)
        det = e[:, 0, 0] * e[:, 1, 1] - e[:, 0, 1] * e[:, 1, 0]
        inv = np.empty_like(e)
        inv[:, 0, 0] = e[:, 1, 1]
        inv[:, 0, 1] = -e[:, 0, 1]
        inv[:, 1, 0] = -e[:, 1, 0]
        inv[:, 1, 1] = e[:, 0, 0]
        inv /= det[:, None, None]
        self.differentials = np.einsum("tdj,tjk->tdk", w, inv)

    @property
    def chart(self):
        return self.tri.chart

    @property
    def triangle_count(self) -> int:
        return self.tri_values.shape[0]

    @property
    def dim(self) -> int:
        return self.tri.dim

    def triangle_source_centers(self) -> np.ndarray:
        return self.tri_source.mean(axis=1)

    def edge_scale(self) -> float:
        """Max image edge length, the geometric scale for tolerance tests."""
        edges = np.roll(self.tri_values, -1, axis=1) - self.tri_values
        return float(np.linalg.norm(edges, axis=-1).max())


def build_pl(tri: TriMesh) -> PLMap:
    """PL map whose restriction to each chart triangle interpolates the mesh."""
    return PLMap(tri)


# Local geometry of the four sub-triangles of the unit square facet:
# corners (0,0),(1,0),(1,1),(0,1) and center (1/2,1/2).
_LOCAL_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
_LOCAL_EDGE_INV = np.empty((4, 2, 2))
for _s in range(4):
    _c0 = _LOCAL_CORNERS[_s]
    _c1 = _LOCAL_CORNERS[(_s + 1) % 4]
    _mat = np.stack([_c1 - _c0, np.array([0.5, 0.5]) - _c0], axis=-1)
    _LOCAL_EDGE_INV[_s] = np.linalg.inv(_mat)


def eval_pl(plm: PLMap, p) -> np.ndarray:
    """Evaluate the PL map at plane points (..., 2).

    Point location: the facet is the floor of N A_N^{-1} p, the sub-triangle
    follows from sign tests against the two facet diagonals; values at raw
    facet indices resolve through the canonical representative (plus target
    periods for quasi-periodic meshes), so evaluation is Gamma-equivariant.
    """
    tri = plm.tri
    chart = plm.chart
    p = np.asarray(p, dtype=float)
    scalar_input = p.ndim == 1
    pts = np.atleast_2d(p)
    xi = chart.N * np.einsum(
        "ij,...j->...i", np.linalg.inv(chart.a_matrix), pts
    )
    k = np.floor(xi[..., 0]).astype(np.int64)
    l = np.floor(xi[..., 1]).astype(np.int64)
    u = xi[..., 0] - k
    v = xi[..., 1] - l
    d1 = v - u
    d2 = u + v - 1.0
    sub = np.where(
        d1 <= 0.0, np.where(d2 <= 0.0, 0, 1), np.where(d2 <= 0.0, 3, 2)
    )
    corners = corner_value_table(chart, tri.corner_values, tri.target_periods)
    off = chart.offset_of_raw(k, l)
    _, _, q1, q2 = chart.canonical_with_shift(k, l)
    shift = (
        q1[..., None] * tri.target_periods[0] + q2[..., None] * tri.target_periods[1]
    )
    v0 = corners[off, sub] + shift
    v1 = corners[off, (sub + 1) % 4] + shift
    v2 = tri.apex_values[off] + shift
    local = np.stack([u, v], axis=-1) - _LOCAL_CORNERS[sub]
    lam = np.einsum("...ij,...j->...i", _LOCAL_EDGE_INV[sub], local)
    out = (
        v0
        + lam[..., 0:1] * (v1 - v0)
        + lam[..., 1:2] * (v2 - v0)
    )
    return out[0] if scalar_input else out


def facet_differential(plm: PLMap, triangle) -> np.ndarray:
    """Constant differential of the affine piece, w.r.t. flat chart coordinates."""
    return plm.differentials[triangle]


def _triangle_grid(oversample: int) -> np.ndarray:
    """Barycentric sample weights, an oversample^2 grid folded into the triangle."""
    step = (np.arange(oversample) + 0.5) / oversample
    a, b = np.meshgrid(step, step, indexing="ij")
    a = a.ravel()
    b = b.ravel()
    flip = a + b > 1.0
    a = np.where(flip, 1.0 - a, a)
    b = np.where(flip, 1.0 - b, b)
    return np.stack([1.0 - a - b, a, b], axis=-1)  # (m^2, 3)


def _sample_points(plm: PLMap, oversample: int):
    lam = _triangle_grid(oversample)
    pts = np.einsum("gk,tkx->tgx", lam, plm.tri_source)
    vals = np.einsum("gk,tkd->tgd", lam, plm.tri_values)
    return pts, vals


def distance_c0(plm: PLMap, spec: ImmersionSpec, oversample: int = 4) -> float:
    """Sup distance max_p ||ell(p) - ell_N(p)|| over per-triangle sample grids."""
    if oversample < 1:
        raise ValueError("oversample must be at least 1")
    pts, vals = _sample_points(plm, oversample)
    smooth = spec.eval(pts)
    return float(np.linalg.norm(smooth - vals, axis=-1).max())


def distance_c1(plm: PLMap, spec: ImmersionSpec, oversample: int = 4) -> float:
    """C1 distance: distance_c0 plus the sup operator norm of d ell - d ell_N."""
    if oversample < 1:
        raise ValueError("oversample must be at least 1")
    pts, vals = _sample_points(plm, oversample)
    smooth, deriv = spec.jet(pts)
    c0 = float(np.linalg.norm(smooth - vals, axis=-1).max())
    diff = deriv - plm.differentials[:, None, :, :]
    sv = np.linalg.svd(diff, compute_uv=False)
    return c0 + float(sv[..., 0].max())


def pl_isotropy_residual(plm: PLMap) -> np.ndarray:
    """Per-triangle |omega(B - A, C - A)|; all zero iff the PL map is isotropic."""
    a = plm.tri_values[:, 0]
    b = plm.tri_values[:, 1]
    c = plm.tri_values[:, 2]
    return np.abs(omega(b - a, c - a))


def triangle_liouville(plm: PLMap) -> np.ndarray:
    """Liouville integral around every triangle boundary (= residual / 2)."""
    return liouville_polygon(plm.tri_values)


# -- batched segment/segment distance ----------------------------------------


def _seg_seg_distance(p0, p1, q0, q1):
    """Min distance between segments [p0,p1] and [q0,q1], batched, any dim.

    Degenerate segments (coincident endpoints) reduce to points.
    """
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.einsum("...i,...i->...", d1, d1)
    e = np.einsum("...i,...i->...", d2, d2)
    f = np.einsum("...i,...i->...", d2, r)
    c = np.einsum("...i,...i->...", d1, r)
    b = np.einsum("...i,...i->...", d1, d2)
    denom = a * e - b * b
    safe_denom = np.where(denom > 0.0, denom, 1.0)
    s = np.where(denom > 0.0, np.clip((b * f - c * e) / safe_denom, 0.0, 1.0), 0.0)
    safe_e = np.where(e > 0.0, e, 1.0)
    t = np.where(e > 0.0, (b * s + f) / safe_e, 0.0)
    t = np.clip(t, 0.0, 1.0)
    safe_a = np.where(a > 0.0, a, 1.0)
    s = np.where(a > 0.0, np.clip((b * t - c) / safe_a, 0.0, 1.0), 0.0)
    closest1 = p0 + s[..., None] * d1
    closest2 = q0 + t[..., None] * d2
    return np.linalg.norm(closest1 - closest2, axis=-1)


# -- triangle/triangle distance ----------------------------------------------

_TRI_FEATURES = (
    (0,),
    (1,),
    (2,),
    (0, 1),
    (1, 2),
    (2, 0),
    (0, 1, 2),
)


def _affine_candidate(pset, qset, feas_tol=1e-9):
    """Distance between affine hulls of the point sets if the minimizer is
    feasible (inside both simplices); None otherwise."""
    cols = [pset[j] - pset[0] for j in range(1, pset.shape[0])]
    cols += [-(qset[j] - qset[0]) for j in range(1, qset.shape[0])]
    rhs = qset[0] - pset[0]
    if not cols:
        return float(np.linalg.norm(rhs))
    mat = np.stack(cols, axis=-1)
    sol, _, _, _ = np.linalg.lstsq(mat, rhs, rcond=None)
    np_free = pset.shape[0] - 1
    lam = sol[:np_free]
    nu = sol[np_free:]
    for coeffs in (lam, nu):
        if coeffs.size and (
            coeffs.min() < -feas_tol or coeffs.sum() > 1.0 + feas_tol
        ):
            return None
    return float(np.linalg.norm(mat @ sol - rhs))


def _tri_tri_distance(p, q) -> float:
    """Exact min distance between two triangles in R^d (0 when they intersect).

    Minimum over all pairs of faces of the unconstrained affine minimizer when
    it is feasible; vertex-vertex pairs are always feasible, so the minimum is
    taken over a nonempty set covering every face combination of the convex
    program.
    """
    best = np.inf
    for fp in _TRI_FEATURES:
        for fq in _TRI_FEATURES:
            cand = _affine_candidate(p[list(fp)], q[list(fq)])
            if cand is not None and cand < best:
                best = cand
    return best


# -- bounding volume hierarchy -----------------------------------------------


class _Bvh:
    """Median-split BVH over axis-aligned boxes in R^d."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray, leaf_size: int = 8):
        self.lo = lo
        self.hi = hi
        n = lo.shape[0]
        self.node_lo = []
        self.node_hi = []
        self.node_left = []
        self.node_right = []
        self.node_items = []
        order = np.arange(n)
        centers = 0.5 * (lo + hi)
        self._build(order, centers, leaf_size)
        self.node_lo = np.array(self.node_lo)
        self.node_hi = np.array(self.node_hi)

    def _build(self, items, centers, leaf_size) -> int:
        idx = len(self.node_left)
        self.node_lo.append(self.lo[items].min(axis=0))
        self.node_hi.append(self.hi[items].max(axis=0))
        self.node_left.append(-1)
        self.node_right.append(-1)
        self.node_items.append(None)
        if items.size <= leaf_size:
            self.node_items[idx] = items
            return idx
        c = centers[items]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        half = items.size // 2
        part = items[np.argpartition(c[:, axis], half)]
        left = self._build(part[:half], centers, leaf_size)
        right = self._build(part[half:], centers, leaf_size)
        self.node_left[idx] = left
        self.node_right[idx] = right
        return idx

    def _box_gap(self, i: int, j: int) -> float:
        gap = np.maximum(
            0.0,
            np.maximum(
                self.node_lo[i] - self.node_hi[j], self.node_lo[j] - self.node_hi[i]
            ),
        )
        return float(np.linalg.norm(gap))

    def close_pairs(self, threshold: float):
        """All item pairs (i < j) whose boxes come within ``threshold``."""
        pairs = []
        stack = [(0, 0)]
        while stack:
            na, nb = stack.pop()
            if self._box_gap(na, nb) > threshold:
                continue
            items_a = self.node_items[na]
            items_b = self.node_items[nb]
            if items_a is not None and items_b is not None:
                if na == nb:
                    combos = itertools.combinations(items_a, 2)
                else:
                    combos = itertools.product(items_a, items_b)
                for i, j in combos:
                    i, j = (i, j) if i < j else (j, i)
                    gap = np.maximum(
                        0.0,
                        np.maximum(
                            self.lo[i] - self.hi[j], self.lo[j] - self.hi[i]
                        ),
                    )
                    if float(np.linalg.norm(gap)) <= threshold:
                        pairs.append((int(i), int(j)))
            elif items_a is not None:
                stack.append((na, self.node_left[nb]))
                stack.append((na, self.node_right[nb]))
            elif items_b is not None:
                stack.append((self.node_left[na], nb))
                stack.append((self.node_right[na], nb))
            else:
                if na == nb:
                    stack.append((self.node_left[na], self.node_left[na]))
                    stack.append((self.node_right[na], self.node_right[na]))
                    stack.append((self.node_left[na], self.node_right[na]))
                else:
                    stack.append((self.node_left[na], self.node_left[nb]))
                    stack.append((self.node_left[na], self.node_right[nb]))
                    stack.append((self.node_right[na], self.node_left[nb]))
                    stack.append((self.node_right[na], self.node_right[nb]))
        return sorted(set(pairs))


def _box_close_pairs_brute(lo, hi, threshold):
    """Reference all-pairs box query (for BVH order-independence checks)."""
    n = lo.shape[0]
    pairs = []
    for i in range(n - 1):
        gap = np.maximum(0.0, np.maximum(lo[i] - hi[i + 1 :], lo[i + 1 :] - hi[i]))
        close = np.nonzero(np.linalg.norm(gap, axis=-1) <= threshold)[0]
        pairs.extend((i, int(i + 1 + j)) for j in close)
    return pairs


# -- verdicts -----------------------------------------------------------------


@dataclass
class CheckResult:
    passed: bool
    witnesses: list


# Star of a quadrangulation vertex: the 8 incident triangles, described in a
# local frame where the vertex sits at index offset (0, 0).  Each entry is
# (facet offset, sub-triangle, symbolic vertex ids); apex ids are per facet.
_STAR_FACETS = {"A": (-1, -1), "B": (0, -1), "C": (-1, 0), "D": (0, 0)}
_STAR_TRIS = (
    ("D", 0, ((0, 0), (1, 0), "zD")),
    ("D", 3, ((0, 1), (0, 0), "zD")),
    ("C", 0, ((-1, 0), (0, 0), "zC")),
    ("C", 1, ((0, 0), (0, 1), "zC")),
    ("A", 1, ((0, -1), (0, 0), "zA")),
    ("A", 2, ((0, 0), (-1, 0), "zA")),
    ("B", 2, ((1, 0), (0, 0), "zB")),
    ("B", 3, ((0, 0), (0, -1), "zB")),
)


def _pair_features(ids_a, ids_b):
    """Slots of the non-shared closed faces of two triangles given vertex ids."""
    shared = set(ids_a) & set(ids_b)
    fa = [s for s in range(3) if ids_a[s] not in shared]
    fb = [s for s in range(3) if ids_b[s] not in shared]
    return fa, fb


_STAR_PAIRS = []
for _i, _j in itertools.combinations(range(len(_STAR_TRIS)), 2):
    _fa, _fb = _pair_features(_STAR_TRIS[_i][2], _STAR_TRIS[_j][2])
    _STAR_PAIRS.append((_i, _j, _fa, _fb))

_APEX_TRIS = tuple((s, ((s, "c"), ((s + 1) % 4, "c"), "z")) for s in range(4))
_APEX_PAIRS = []
for _i, _j in itertools.combinations(range(4), 2):
    _fa, _fb = _pair_features(_APEX_TRIS[_i][1], _APEX_TRIS[_j][1])
    _APEX_PAIRS.append((_i, _j, _fa, _fb))


def _segment_of(values, slots):
    """Closed face spanned by the given slots as a (possibly degenerate) segment."""
    p0 = values[:, slots[0]]
    p1 = values[:, slots[-1]]
    return p0, p1


def _star_values(plm: PLMap):
    """(F, 8, 3, d) local star triangle values and (F, 8) global triangle ids."""
    tri = plm.tri
    chart = plm.chart
    nfacets = chart.vertex_count
    xc, yc = chart.all_canonical()
    per = tri.target_periods
    dim = tri.dim
    facet_vals = {}
    facet_apex = {}
    facet_off = {}
    for name, (ox, oy) in _STAR_FACETS.items():
        k = xc + ox
        l = yc + oy
        cv = np.empty((nfacets, 4, dim))
        for j, (dk, dl) in enumerate(_CORNER_STEPS):
            cv[:, j] = _corrected_lookup(chart, tri.corner_values, per, k + dk, l + dl)
        x, y, q1, q2 = chart.canonical_with_shift(k, l)
        off = chart.offset_xy(x, y)
        shift = q1[:, None] * per[0] + q2[:, None] * per[1]
        facet_vals[name] = cv
        facet_apex[name] = tri.apex_values[off] + shift
        facet_off[name] = off
    star = np.empty((nfacets, 8, 3, dim))
    tri_ids = np.empty((nfacets, 8), dtype=np.int64)
    for t, (fname, sub, ids) in enumerate(_STAR_TRIS):
        cv = facet_vals[fname]
        star[:, t, 0] = cv[:, sub]
        star[:, t, 1] = cv[:, (sub + 1) % 4]
        star[:, t, 2] = facet_apex[fname]
        tri_ids[:, t] = facet_off[fname] * 4 + sub
    return star, tri_ids


def check_immersion(plm: PLMap, tol: float = 1e-6) -> CheckResult:
    """Local injectivity verdict for the PL map.

    Passes iff (a) every triangle differential has two singular values above
    tol times the largest differential singular value, and (b) around every
    vertex (quadrangulation vertices and apexes) the star triangles stay
    separated beyond their shared simplices: the non-shared closed faces of
    each pair keep distance above tol times the max image edge length.
    Witnesses identify offending triangles / vertex stars.
    """
    witnesses = []
    sv = np.linalg.svd(plm.differentials, compute_uv=False)
    scale_d = float(sv[:, 0].max())
    degen = np.nonzero(sv[:, 1] <= tol * scale_d)[0]
    witnesses.extend(("degenerate_triangle", int(t)) for t in degen)

    scale_g = plm.edge_scale()
    threshold = tol * scale_g

    star, tri_ids = _star_values(plm)
    for i, j, fa, fb in _STAR_PAIRS:
        p0, p1 = _segment_of(star[:, i], fa)
        q0, q1 = _segment_of(star[:, j], fb)
        dist = _seg_seg_distance(p0, p1, q0, q1)
        bad = np.nonzero(dist < threshold)[0]
        for v in bad:
            witnesses.append(
                (
                    "vertex_star",
                    int(v),
                    int(tri_ids[v, i]),
                    int(tri_ids[v, j]),
                    float(dist[v]),
                )
            )

    nfacets = plm.chart.vertex_count
    corners = plm.tri_values.reshape(nfacets, 4, 3, plm.dim)
    for i, j, fa, fb in _APEX_PAIRS:
        p0, p1 = _segment_of(corners[:, i], fa)
        q0, q1 = _segment_of(corners[:, j], fb)
        dist = _seg_seg_distance(p0, p1, q0, q1)
        bad = np.nonzero(dist < threshold)[0]
        for f in bad:
            witnesses.append(
                ("apex_star", int(f), int(f * 4 + i), int(f * 4 + j), float(dist[f]))
            )
    return CheckResult(passed=not witnesses, witnesses=witnesses)


def check_embedding(plm: PLMap, tol: float = 1e-6) -> CheckResult:
    """Global injectivity verdict (requires a map that passes check_immersion).

    Fails when two non-adjacent triangle images come within tol times the max
    edge length (exact convex distance), or when an adjacent pair overlaps
    beyond the shared simplex (non-shared closed faces within the same
    threshold).  Witnesses are (triangle, triangle, distance) tuples.
    """
    scale_g = plm.edge_scale()
    threshold = tol * scale_g
    lo = plm.tri_values.min(axis=1)
    hi = plm.tri_values.max(axis=1)
    bvh = _Bvh(lo, hi)
    vids = plm.tri_vertex_ids
    witnesses = []
    for i, j in bvh.close_pairs(threshold):
        shared = set(vids[i]) & set(vids[j])
        if shared:
            fa = [s for s in range(3) if vids[i][s] not in shared]
            fb = [s for s in range(3) if vids[j][s] not in shared]
            if not fa or not fb:
                continue
            p0, p1 = plm.tri_values[i][fa[0]], plm.tri_values[i][fa[-1]]
            q0, q1 = plm.tri_values[j][fb[0]], plm.tri_values[j][fb[-1]]
            dist = float(_seg_seg_distance(p0, p1, q0, q1))
        else:
            dist = _tri_tri_distance(plm.tri_values[i], plm.tri_values[j])
        if dist < threshold:
            witnesses.append((int(i), int(j), dist))
    return CheckResult(passed=not witnesses, witnesses=witnesses)


# -- export -------------------------------------------------------------------


def export_mesh(plm: PLMap, path, projection=None) -> None:
    """Write the full-dimensional triangle mesh in the symmesh text format.

    Header ``symmesh <2n> <num_vertices> <num_faces>``, vertex lines
    ``v <2n floats>`` (17 significant digits, bit-faithful round trip), face
    lines ``f <i> <j> <k>`` 1-based.  Vertices are the canonical corners
    followed by the facet apexes.  With ``projection`` (three coordinate
    indices) an additional standard ``v x y z`` / ``f i j k`` file is written
    next to it at ``<path>.obj``.
    """
    tri = plm.tri
    chart = plm.chart
    nfacets = chart.vertex_count
    verts = np.vstack([tri.corner_values, tri.apex_values])
    kc, lc = chart.all_canonical()
    cids = np.stack(
        [chart.offset_of_raw(kc + dk, lc + dl) for dk, dl in _CORNER_STEPS], axis=1
    )
    faces = np.empty((4 * nfacets, 3), dtype=np.int64)
    for s in range(4):
        faces[s::4, 0] = cids[:, s]
        faces[s::4, 1] = cids[:, (s + 1) % 4]
        faces[s::4, 2] = nfacets + np.arange(nfacets)

    lines = [f"symmesh {verts.shape[1]} {verts.shape[0]} {faces.shape[0]}"]
    for row in verts:
        lines.append("v " + " ".join(f"{x:.17g}" for x in row))
    for a, b, c in faces + 1:
        lines.append(f"f {a} {b} {c}")
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")

    if projection is not None:
        proj = tuple(int(i) for i in projection)
        if len(proj) != 3 or any(i < 0 or i >= verts.shape[1] for i in proj):
            raise ValueError("projection must pick 3 valid coordinate indices")
        plines = []
        for row in verts[:, proj]:
            plines.append("v " + " ".join(f"{x:.17g}" for x in row))
        for a, b, c in faces + 1:
            plines.append(f"f {a} {b} {c}")
        with open(f"{path}.obj", "w") as handle:
            handle.write("\n".join(plines) + "\n")


def load_mesh(path):
    """Parse a symmesh file (or plain v/f triangle file) back into arrays.

    Returns (dim, vertices, faces) with 0-based face indices; validates the
    header counts and face index ranges.
    """
    verts = []
    faces = []
    dim = None
    counts = None
    with open(path) as handle:
        for line in handle:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "symmesh":
                dim = int(parts[1])
                counts = (int(parts[2]), int(parts[3]))
            elif parts[0] == "v":
                verts.append([float(x) for x in parts[1:]])
            elif parts[0] == "f":
                faces.append([int(x) - 1 for x in parts[1:]])
    verts = np.array(verts)
    faces = np.array(faces, dtype=np.int64)
    if dim is None:
        dim = verts.shape[1] if verts.size else 0
    if verts.size and verts.shape[1] != dim:
        raise ValueError("vertex line width disagrees with header")
    if counts is not None and (verts.shape[0], faces.shape[0]) != counts:
        raise ValueError("header counts disagree with records")
    if faces.size and (faces.min() < 0 or faces.max() >= verts.shape[0]):
        raise ValueError("face indices out of range")
    return dim, verts, faces
