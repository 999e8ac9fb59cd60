"""Label co-occurrence statistics and the co-occurrence ranking losses.

For every ordered pair ``(l, l')`` of labels that co-occur at least once, the
loss asks ``l'`` to be nearer to ``l`` than every label ``z`` that co-occurs
with ``l`` strictly less often, through the log-softmax term

    d(l, l') + log sum_{z in N(l, l') + {l'}} exp(-d(l, z)).

``theta`` is always the ``(n, L)`` embedding matrix with one column per label.
"""

import numpy as np

from . import geometry
from .errors import InvalidInputError

METRICS = ("hyperbolic", "euclidean")


def count_cooccurrence(labels):
    """Symmetric ``(L, L)`` count of documents on which two labels are both active.

    ``labels`` is an ``(m, L)`` binary matrix or a :class:`~hiddenhmc.data.Dataset`.
    The diagonal is zeroed.
    """
    y = np.asarray(getattr(labels, "labels", labels), dtype=np.int64)
    if y.ndim != 2:
        raise InvalidInputError("labels must be an (m, L) matrix")
    counts = y.T @ y
    np.fill_diagonal(counts, 0)
    return counts


def neighbor_set(cooc, l, lp):
    """Labels ``z != l`` with ``C(l, z) < C(l, l')``."""
    if l == lp:
        raise InvalidInputError("neighbor set needs two distinct labels")
    row = np.asarray(cooc)[l]
    return {int(z) for z in np.flatnonzero(row < row[lp]) if z != l}


def candidate_mask(cooc):
    """Boolean tensors describing every softmax term of the loss.

    Returns
    -------
    pairs : (L, L) bool
        ``pairs[l, l']`` is true for contributing ordered pairs.
    cand : (L, L, L) bool
        ``cand[l, l', z]`` is true when ``z`` is in the denominator of the
        ``(l, l')`` term, i.e. ``z in N(l, l')`` or ``z == l'``.
    """
    c = np.asarray(cooc)
    L = c.shape[0]
    if c.shape != (L, L):
        raise InvalidInputError("co-occurrence matrix must be square")
    pairs = c > 0
    np.fill_diagonal(pairs, False)
    cand = c[:, None, :] < c[:, :, None]
    idx = np.arange(L)
    cand[idx, :, idx] = False
    cand[:, idx, idx] = True
    cand &= pairs[:, :, None]
    return pairs, cand


def _softmax_terms(dist, cand):
    neg = np.where(cand, -dist[:, None, :], -np.inf)
    top = np.max(neg, axis=2, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    ex = np.exp(neg - top)
    z = ex.sum(axis=2, keepdims=True)
    z = np.where(z > 0, z, 1.0)
    return ex / z, (np.log(z) + top)[..., 0]


def _ranking_loss(dist, pairs, cand):
    """Loss and its gradient with respect to the distance matrix."""
    prob, lse = _softmax_terms(dist, cand)
    loss = np.sum(np.where(pairs, dist + lse, 0.0))
    grad_d = pairs.astype(np.float64) - prob.sum(axis=1)
    return float(loss), grad_d


def pair_probabilities(theta, cooc, metric="hyperbolic"):
    """Softmax probabilities ``P[l, l', z]`` over each pair's candidate set."""
    _, cand = candidate_mask(cooc)
    prob, _ = _softmax_terms(embedding_distance_matrix(theta, metric), cand)
    return prob


def embedding_distance_matrix(theta, metric="hyperbolic"):
    """Pairwise label distances, ``(L, L)``, symmetric with zero diagonal."""
    if metric not in METRICS:
        raise InvalidInputError(f"unknown metric {metric!r}")
    pts = geometry._as_finite(theta, "theta").T
    if metric == "hyperbolic":
        ball = geometry.project_to_ball(pts)
        dist = geometry.poincare_distance(ball[:, None, :], ball[None, :, :])
    else:
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    return dist


def cooc_loss_hyperbolic(theta, cooc, mask=None):
    """Co-occurrence ranking loss on geodesic distances of projected columns.

    Returns ``(loss, grad)`` with ``grad`` shaped like ``theta``. ``mask`` may
    pass a precomputed :func:`candidate_mask` result.
    """
    pairs, cand = candidate_mask(cooc) if mask is None else mask
    x = geometry._as_finite(theta, "theta").T
    ball = geometry.project_to_ball(x)
    dist = embedding_distance_matrix(theta, "hyperbolic")
    loss, grad_d = _ranking_loss(dist, pairs, cand)
    # d(b_l, b_z) enters both as row l and as row z of the distance matrix
    sym = grad_d + grad_d.T
    gu, _, _ = geometry.poincare_distance_grad(ball[:, None, :], ball[None, :, :])
    grad_ball = np.einsum("lz,lzk->lk", sym, gu)
    grad = geometry.projection_pullback(x, grad_ball)
    return loss, grad.T


def cooc_loss_euclidean(theta, cooc, mask=None):
    """Same ranking loss with plain Euclidean distances between raw columns."""
    pairs, cand = candidate_mask(cooc) if mask is None else mask
    x = geometry._as_finite(theta, "theta").T
    diff = x[:, None, :] - x[None, :, :]
    norm = np.sqrt(np.sum(diff * diff, axis=-1))
    loss, grad_d = _ranking_loss(norm, pairs, cand)
    sym = grad_d + grad_d.T
    unit = diff / np.where(norm > 0, norm, 1.0)[..., None]
    grad = np.einsum("lz,lzk->lk", sym, unit)
    return loss, grad.T


def cooc_loss(theta, cooc, metric="hyperbolic", mask=None):
    if metric == "hyperbolic":
        return cooc_loss_hyperbolic(theta, cooc, mask)
    if metric == "euclidean":
        return cooc_loss_euclidean(theta, cooc, mask)
    raise InvalidInputError(f"unknown metric {metric!r}")
