"""Document encoder, label alignment scores and the binary cross-entropy term.

The encoder is a ReLU multilayer perceptron with a linear output layer. A
label's score for a document is ``sigmoid(f(D) . theta[:, l])``, using the raw
Euclidean column rather than its ball projection.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .errors import InvalidInputError

#: scores are clamped into [SCORE_EPS, 1 - SCORE_EPS] before taking logs
SCORE_EPS = 1e-12


@dataclass
class EncoderParams:
    """Weights ``W_k`` of shape ``(fan_in, fan_out)`` and matching biases."""

    weights: list
    biases: list

    @property
    def sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def arrays(self):
        return list(self.weights) + list(self.biases)

    def copy(self):
        return EncoderParams([w.copy() for w in self.weights],
                             [b.copy() for b in self.biases])


def init_encoder(sizes, rng):
    """He-initialised MLP for layer widths ``sizes = [d, h1, ..., n]``."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return EncoderParams(weights, biases)


def _dropout_mask(shape, rate, rng):
    if rate <= 0.0:
        return None
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def encode_forward(params, features, train_mode=False, dropout_rate=0.0, rng=None):
    """Batched forward pass; returns ``(output, cache)`` for :func:`encode_backward`."""
    h = np.asarray(features, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != params.weights[0].shape[0]:
        raise InvalidInputError(
            f"feature dim {h.shape[-1]} does not match encoder input "
            f"{params.weights[0].shape[0]}")
    acts = [h]
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w + b
        if k < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    mask = _dropout_mask(h.shape, dropout_rate, rng) if train_mode else None
    out = h if mask is None else h * mask
    return out, (acts, mask)


def encode(params, features, train_mode=False, dropout_rate=0.0, rng=None):
    """Document representations, ``(m, n)`` for ``(m, d)`` features.

    A single 1-D feature vector returns a 1-D representation. In training
    mode inverted dropout with ``dropout_rate`` is applied to the output.
    """
    x = np.asarray(features, dtype=np.float64)
    out, _ = encode_forward(params, np.atleast_2d(x), train_mode, dropout_rate, rng)
    return out[0] if x.ndim == 1 else out


def encode_backward(params, cache, grad_out):
    """Gradients ``(dW list, db list)`` given the gradient w.r.t. the output."""
    acts, mask = cache
    g = grad_out if mask is None else grad_out * mask
    dws, dbs = [], []
    for k in range(len(params.weights) - 1, -1, -1):
        if k < len(params.weights) - 1:
            g = g * (acts[k + 1] > 0.0)
        dws.append(acts[k].T @ g)
        dbs.append(g.sum(axis=0))
        if k > 0:
            g = g @ params.weights[k].T
    return dws[::-1], dbs[::-1]


def label_dropout_mask(num_labels, rate, rng):
    """Inverted dropout over whole label columns; ``None`` when inactive."""
    return _dropout_mask((num_labels,), rate, rng)


def alignment_logits(doc_repr, theta, label_mask=None):
    doc_repr = np.asarray(doc_repr, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if doc_repr.shape[-1] != theta.shape[0]:
        raise InvalidInputError(
            f"representation dim {doc_repr.shape[-1]} does not match "
            f"embedding dim {theta.shape[0]}")
    logits = doc_repr @ theta
    return logits if label_mask is None else logits * label_mask


def alignment(doc_repr, theta, label_dropout_rate=0.0, train_mode=False, rng=None):
    """Scores ``sigmoid(doc_repr @ theta)`` in the open interval (0, 1)."""
    mask = None
    if train_mode:
        mask = label_dropout_mask(np.shape(theta)[1], label_dropout_rate, rng)
    return expit(alignment_logits(doc_repr, theta, mask))


def bce_with_logits(logits, truth):
    """Summed binary cross-entropy from logits and its gradient ``sigmoid(z) - y``."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(truth, dtype=np.float64)
    if z.shape != y.shape:
        raise InvalidInputError(f"shape mismatch: {z.shape} vs {y.shape}")
    loss = -np.sum(y * log_expit(z) + (1.0 - y) * log_expit(-z))
    return float(loss), expit(z) - y


def bce_loss(scores, truth):
    """Summed binary cross-entropy of probabilities against 0/1 targets.

    Returns ``(loss, grad)`` where ``grad = scores - truth`` is the derivative
    with respect to the underlying logits.
    """
    p = np.asarray(scores, dtype=np.float64)
    y = np.asarray(truth, dtype=np.float64)
    if p.shape != y.shape:
        raise InvalidInputError(f"shape mismatch: {p.shape} vs {y.shape}")
    pc = np.clip(p, SCORE_EPS, 1.0 - SCORE_EPS)
    loss = -np.sum(y * np.log(pc) + (1.0 - y) * np.log1p(-pc))
    return float(loss), p - y


def predict(scores):
    """Labels whose score strictly exceeds 0.5, as a uint8 array."""
    return (np.asarray(scores) > 0.5).astype(np.uint8)


def l1_gradients(params, theta, features, truth, *, doc_dropout=0.0,
                 label_dropout=0.0, train_mode=False, rng=None):
    """Binary cross-entropy summed over a batch, with gradients.

    Returns ``(loss, (dW list, db list), dtheta)``.
    """
    truth = np.asarray(truth)
    out, cache = encode_forward(params, features, train_mode, doc_dropout, rng)
    mask = None
    if train_mode:
        mask = label_dropout_mask(np.shape(theta)[1], label_dropout, rng)
    logits = alignment_logits(out, theta, mask)
    if truth.shape != logits.shape:
        raise InvalidInputError(
            f"truth shape {truth.shape} does not match scores {logits.shape}")
    loss, g = bce_with_logits(logits, truth)
    if mask is not None:
        g = g * mask
    dtheta = out.T @ g
    dws, dbs = encode_backward(params, cache, g @ np.asarray(theta).T)
    return loss, (dws, dbs), dtheta
