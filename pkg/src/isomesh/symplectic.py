"""Linear symplectic algebra on R^{2n}.

Coordinates are ordered (x1, y1, ..., xn, yn).  The ambient structures are
the Euclidean inner product g, the complex structure J(x_j, y_j) = (-y_j, x_j),
the symplectic form

    omega(a, b) = sum_j (a_{x_j} b_{y_j} - a_{y_j} b_{x_j}) = g(Ja, b),

and the Liouville primitive lambda = sum_j x_j dy_j with d(lambda) = omega.
The integral of lambda along a straight segment [A, B] is
(1/2) sum_j (A_{x_j} + B_{x_j})(B_{y_j} - A_{y_j}); summed around a closed
polygon the mixed terms telescope and the integral collapses to half the
cyclic sum of omega(A_i, A_{i+1}).
"""

import numpy as np


def apply_j(w: np.ndarray) -> np.ndarray:
    """Apply the standard complex structure J along the last axis."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    out[..., 0::2] = -w[..., 1::2]
    out[..., 1::2] = w[..., 0::2]
    return out


def omega(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Standard symplectic form on R^{2n}, broadcasting over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a[..., 0::2] * b[..., 1::2] - a[..., 1::2] * b[..., 0::2], axis=-1)


def liouville_polygon(points) -> np.ndarray:
    """Integral of the Liouville form along a closed polygon.

    ``points`` has shape (..., m, 2n) with m >= 3 vertices per polygon; the
    closing edge from the last vertex back to the first is implied.  Returns
    (1/2) sum_i omega(A_i, A_{i+1}) (cyclic), which is the exact line integral
    of lambda along the piecewise straight boundary.  The polygon bounds an
    isotropic surface exactly when this vanishes.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim < 2 or pts.shape[-2] < 3:
        raise ValueError("a polygon needs at least 3 points")
    nxt = np.roll(pts, -1, axis=-2)
    return 0.5 * omega(pts, nxt).sum(axis=-1)
