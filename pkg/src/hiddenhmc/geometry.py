"""Poincaré-ball and Lorentz-model geometry in double precision.

All functions act on the last axis, so a ``(..., n)`` array is treated as a
batch of n-dimensional points. Label embeddings are stored elsewhere as an
``(n, L)`` matrix; pass ``theta.T`` to operate on its columns.
"""

import numpy as np

from .errors import DomainError, InvalidInputError

#: floor applied to ``arcosh`` arguments (as ``arg - 1``) inside derivatives
ACOSH_EPS = 1e-12
#: ball points are clamped to this norm before entering distance denominators
MAX_NORM = 1.0 - 1e-7


def _as_finite(x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return x


def _lift_time(x):
    # sqrt(1 + |x|^2) without overflow for very long vectors
    r = np.hypot.reduce(x, axis=-1, keepdims=True)
    big = r > 1.0
    inv = np.divide(1.0, r, out=np.zeros_like(r), where=big)
    small = np.minimum(r, 1.0)
    return np.where(big, r * np.sqrt(1.0 + inv * inv), np.sqrt(1.0 + small * small)), r


def project_to_ball(x):
    """Map Euclidean vectors into the open unit ball.

    Computes ``x / (1 + sqrt(1 + |x|^2))``, which equals the Lorentz lift
    followed by the hyperboloid-to-ball map. Outputs whose norm rounds to 1
    are pulled back to the largest representable norm below 1.
    """
    x = _as_finite(x)
    q, r = _lift_time(x)
    p = x / (1.0 + q)
    norm = r / (1.0 + q)
    cap = 1.0 - 4 * np.finfo(np.float64).eps
    return np.where(norm >= cap, p * (cap / np.maximum(norm, cap)), p)


def lorentz_lift(x):
    """Lift ``x`` onto the upper hyperboloid sheet as ``[sqrt(1+|x|^2), x]``."""
    x = _as_finite(x)
    x0, _ = _lift_time(x)
    return np.concatenate([x0, x], axis=-1)


def lorentz_to_poincare(p):
    """Map hyperboloid points ``(x0, x1..xn)`` to ``(x1..xn) / (x0 + 1)``."""
    p = _as_finite(p, "p")
    if p.shape[-1] < 2:
        raise InvalidInputError("Lorentz points need at least two coordinates")
    x0 = p[..., :1]
    if np.any(x0 <= -1.0):
        raise InvalidInputError("time coordinate must exceed -1")
    return p[..., 1:] / (x0 + 1.0)


def minkowski_inner(a, b):
    """Minkowski inner product ``-a0*b0 + sum_i ai*bi`` along the last axis."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[-1] != b.shape[-1]:
        raise InvalidInputError(
            f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    prod = a * b
    return np.sum(prod[..., 1:], axis=-1) - prod[..., 0]


def _ball_terms(u, v):
    u = _as_finite(u, "u")
    v = _as_finite(v, "v")
    if u.shape[-1] != v.shape[-1]:
        raise InvalidInputError(
            f"dimension mismatch: {u.shape[-1]} vs {v.shape[-1]}")
    uu = np.sum(u * u, axis=-1)
    vv = np.sum(v * v, axis=-1)
    if np.any(uu >= 1.0) or np.any(vv >= 1.0):
        raise DomainError("points must lie strictly inside the unit ball")
    # norm guard: keeps the denominators away from underflow near the boundary
    alpha = 1.0 - np.minimum(uu, MAX_NORM ** 2)
    beta = 1.0 - np.minimum(vv, MAX_NORM ** 2)
    diff = u - v
    dd = np.sum(diff * diff, axis=-1)
    # t = arg - 1, formed directly to avoid cancellation near coincidence
    t = 2.0 * dd / (alpha * beta)
    return u, v, alpha, beta, dd, t


def poincare_distance(u, v):
    """Geodesic distance in the Poincaré ball.

    ``arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))``, evaluated as
    ``log1p(t + sqrt(t (t + 2)))`` with ``t`` the excess over one, which is
    exactly zero for coincident points and accurate for nearby ones.
    """
    _, _, _, _, _, t = _ball_terms(u, v)
    return np.log1p(t + np.sqrt(t * (t + 2.0)))


def poincare_distance_grad(u, v):
    """Analytic gradients of :func:`poincare_distance`.

    Returns
    -------
    grad_u, grad_v : ndarray
        Partial derivatives with the same shape as the (broadcast) inputs.
    degenerate : ndarray of bool
        True where ``u`` and ``v`` coincide within the arcosh floor; the
        gradients there are set to zero.
    """
    u, v, alpha, beta, dd, t = _ball_terms(u, v)
    degenerate = t <= ACOSH_EPS
    t_safe = np.maximum(t, ACOSH_EPS)
    # d'(t) = 1 / sqrt(t (t + 2)); chain through t(u, v)
    coef = 4.0 / (alpha * beta * np.sqrt(t_safe * (t_safe + 2.0)))
    coef = np.where(degenerate, 0.0, coef)[..., None]
    grad_u = coef * (((dd + alpha) / alpha)[..., None] * u - v)
    grad_v = coef * (((dd + beta) / beta)[..., None] * v - u)
    return grad_u, grad_v, degenerate


def projection_pullback(x, g):
    """Apply the transposed Jacobian of :func:`project_to_ball` at ``x`` to ``g``.

    With ``q = sqrt(1 + |x|^2)`` and ``s = 1 + q`` the Jacobian is the
    symmetric matrix ``I / s - x x^T / (s^2 q)``.
    """
    x = _as_finite(x)
    g = np.asarray(g, dtype=np.float64)
    if x.shape != g.shape:
        raise InvalidInputError(f"shape mismatch: {x.shape} vs {g.shape}")
    q = np.sqrt(1.0 + np.sum(x * x, axis=-1, keepdims=True))
    s = 1.0 + q
    xg = np.sum(x * g, axis=-1, keepdims=True)
    return g / s - x * xg / (s * s * q)
