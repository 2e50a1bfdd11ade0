"""Poincare ball primitives at the origin.

All functions act on the last axis, so a single point of shape ``(d,)`` and a
batch of shape ``(N, d)`` go through the same code. Curvature ``c`` is the
positive magnitude of the negative curvature ``-c``; the ball has radius
``1/sqrt(c)``.
"""

import numpy as np

from .errors import BoundaryError, InvalidInputError, UndefinedAngleError

BOUNDARY_EPS = 1e-5

# below this value of sqrt(c)*norm the closed forms lose digits; use series
_SERIES_CUTOFF = 1e-4


def _check_curvature(c):
    c = float(c)
    if not np.isfinite(c) or c <= 0:
        raise InvalidInputError(f"curvature must be a positive finite number, got {c}")
    return c


def _as_finite(x, what="input"):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{what} contains non-finite entries")
    return x


def _norm(x):
    # scale by the largest entry so tiny vectors do not underflow to norm 0
    big = np.max(np.abs(x), axis=-1, keepdims=True)
    safe = np.where(big == 0, 1.0, big)
    return big * np.linalg.norm(x / safe, axis=-1, keepdims=True)


def ball_radius(c):
    return 1.0 / np.sqrt(_check_curvature(c))


def max_norm(c):
    """Largest Euclidean norm a point may keep after projection."""
    return (1.0 - BOUNDARY_EPS) / np.sqrt(_check_curvature(c))


def in_ball(x, c):
    x = np.asarray(x, dtype=np.float64)
    return c * np.sum(x * x, axis=-1) < 1.0


def project_to_ball(x, c):
    """Pull points with norm >= (1 - eps)/sqrt(c) back onto that sphere.

    Interior points are returned unchanged (bit for bit).
    """
    c = _check_curvature(c)
    x = _as_finite(x)
    limit = max_norm(c)
    norm = _norm(x)
    clamp = norm >= limit
    if not np.any(clamp):
        return x
    return np.where(clamp, x * (limit / np.where(clamp, norm, 1.0)), x)


def _project_vjp(y, grad, c):
    """VJP of :func:`project_to_ball` evaluated at its input ``y``."""
    limit = max_norm(c)
    norm = _norm(y)
    clamp = norm >= limit
    if not np.any(clamp):
        return grad
    safe = np.where(clamp, norm, 1.0)
    unit = y / safe
    radial = np.sum(unit * grad, axis=-1, keepdims=True)
    return np.where(clamp, (limit / safe) * (grad - radial * unit), grad)


def _tanh_ratio(u):
    """tanh(u)/u and its derivative divided by u, safe at u = 0."""
    small = u < _SERIES_CUTOFF
    us = np.where(small, 1.0, u)
    t = np.tanh(us)
    ratio = np.where(small, 1.0 - u**2 / 3.0 + 2.0 * u**4 / 15.0, t / us)
    dratio = np.where(
        small,
        -2.0 / 3.0 + 8.0 * u**2 / 15.0,
        (us * (1.0 - t * t) - t) / us**3,
    )
    return ratio, dratio


def _artanh_ratio(u):
    """artanh(u)/u and its derivative divided by u, safe at u = 0."""
    small = u < _SERIES_CUTOFF
    us = np.where(small, 0.5, u)
    a = np.arctanh(us)
    ratio = np.where(small, 1.0 + u**2 / 3.0 + u**4 / 5.0, a / us)
    dratio = np.where(
        small,
        2.0 / 3.0 + 4.0 * u**2 / 5.0,
        (us / (1.0 - us * us) - a) / us**3,
    )
    return ratio, dratio


def exp_map_origin(v, c):
    """Map tangent vectors at the origin onto the ball.

    ``exp_0(v) = tanh(sqrt(c)|v|) / sqrt(c) * v/|v|``, followed by boundary
    projection. ``exp_0(0) = 0``.
    """
    c = _check_curvature(c)
    v = _as_finite(v)
    sc = np.sqrt(c)
    ratio, _ = _tanh_ratio(sc * _norm(v))
    return project_to_ball(ratio * v, c)


def exp_map_origin_vjp(v, grad, c):
    """Pull ``grad`` (w.r.t. the output of :func:`exp_map_origin`) back to ``v``."""
    c = _check_curvature(c)
    v = np.asarray(v, dtype=np.float64)
    sc = np.sqrt(c)
    ratio, dratio = _tanh_ratio(sc * _norm(v))
    grad = _project_vjp(ratio * v, np.asarray(grad, dtype=np.float64), c)
    # x = g(|v|) v with g(r) = tanh(sc r)/(sc r); dg/dr / r = c * dratio
    return ratio * grad + c * dratio * np.sum(v * grad, axis=-1, keepdims=True) * v


def log_map_origin(x, c):
    """Map ball points back to the tangent space at the origin.

    Raises :class:`BoundaryError` for points on or outside the boundary.
    """
    c = _check_curvature(c)
    x = _as_finite(x)
    sc = np.sqrt(c)
    u = sc * _norm(x)
    if np.any(u >= 1.0):
        raise BoundaryError("point lies on or outside the Poincare ball boundary")
    ratio, _ = _artanh_ratio(u)
    return ratio * x


def log_map_origin_vjp(x, grad, c):
    c = _check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    sc = np.sqrt(c)
    ratio, dratio = _artanh_ratio(sc * _norm(x))
    return ratio * grad + c * dratio * np.sum(x * grad, axis=-1, keepdims=True) * x


def _mobius_from_image(x, mx, c):
    """Shared tail of the Mobius matvec given ``x`` and its linear image ``mx``."""
    sc = np.sqrt(c)
    xn = _norm(x)
    mxn = _norm(mx)
    degenerate = (xn == 0) | (mxn == 0)
    xs = np.where(degenerate, 1.0, xn)
    mxs = np.where(degenerate, 1.0, mxn)
    u = sc * xn
    if np.any(u >= 1.0):
        raise BoundaryError("point lies on or outside the Poincare ball boundary")
    scale = np.tanh(mxs / xs * np.arctanh(u)) / sc
    out = np.where(degenerate, 0.0, scale * mx / mxs)
    return project_to_ball(out, c)


def mobius_matvec(m, x, c):
    """Mobius matrix-vector product ``m (x)_c x`` for a dense ``(d, d)`` matrix.

    Returns the origin wherever ``x = 0`` or ``m @ x = 0``.
    """
    c = _check_curvature(c)
    m = _as_finite(m, "matrix")
    x = _as_finite(x)
    return _mobius_from_image(x, x @ m.T, c)


def angle_at_origin(x, y):
    """Angle in radians at the origin between ``x`` and ``y`` (broadcasts).

    Equals ``arccos(<x, y> / (|x| |y|))`` but is evaluated as
    ``2 atan2(|x^ - y^|, |x^ + y^|)`` on the unit vectors, which keeps full
    precision near 0 and pi where arccos of a rounded cosine does not.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xn = _norm(x)
    yn = _norm(y)
    if np.any(xn == 0) or np.any(yn == 0):
        raise UndefinedAngleError("angle at the origin is undefined for the zero vector")
    xu, yu = x / xn, y / yn
    angle = 2.0 * np.arctan2(np.linalg.norm(xu - yu, axis=-1), np.linalg.norm(xu + yu, axis=-1))
    return np.clip(angle, 0.0, np.pi)


def hyperbolic_radius(x, c):
    """Geodesic distance from the origin, ``2/sqrt(c) * artanh(sqrt(c)|x|)``."""
    c = _check_curvature(c)
    x = np.asarray(x, dtype=np.float64)
    sc = np.sqrt(c)
    u = sc * np.linalg.norm(x, axis=-1)
    if np.any(u >= 1.0):
        raise BoundaryError("point lies on or outside the Poincare ball boundary")
    return 2.0 / sc * np.arctanh(u)
