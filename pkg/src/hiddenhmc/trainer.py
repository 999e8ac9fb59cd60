"""Training procedures for the four variants and checkpoint I/O.

Variants
--------
flt  identity label matrix (never updated), encoder trained on the BCE term.
cas  label embeddings fitted to the co-occurrence loss alone, then frozen
     while the encoder is trained on the BCE term.
jnt  encoder and label embeddings trained together on
     ``BCE + lam * hyperbolic co-occurrence loss``.
euc  as jnt with the Euclidean co-occurrence loss.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import encoder as enc
from . import labelspace
from .errors import CheckpointVersionError, InvalidInputError, TrainingError
from .evalmetrics import f1_scores

log = logging.getLogger(__name__)

VARIANTS = ("flt", "cas", "jnt", "euc")
CHECKPOINT_FORMAT = "HIDDEN-CKPT-1"
L2_SCHEDULES = ("every_batch", "first_batch")


@dataclass
class TrainConfig:
    variant: str = "jnt"
    lam: float = 0.1
    epochs: int = 30
    learning_rate: float = 1e-3
    batch_size: int = 64
    doc_dropout: float = 0.1
    label_dropout: float = 0.6
    embed_dim: int = 16
    hidden: tuple = (64, 64)
    validation_fraction: float = 0.1
    seed: int = 0
    theta_init_half_width: float = 1e-3
    # every_batch: lam / batches_per_epoch on each batch; first_batch: lam once per epoch
    l2_schedule: str = "every_batch"
    # cas stage-1 full-batch Adam steps; None means one per epoch
    stage1_steps: int = None
    standardize: bool = True
    # "uniform" or "identity"; identity forces embed_dim to the label count
    theta_init: str = "uniform"
    train_theta: bool = True

    def validate(self):
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"unknown variant {self.variant!r}; pick one of {VARIANTS}")
        if self.lam < 0:
            raise InvalidInputError("lam must be non-negative")
        for name in ("doc_dropout", "label_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1)")
        if not 0.0 < self.validation_fraction < 1.0:
            raise InvalidInputError("validation_fraction must lie in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1 or self.embed_dim < 1:
            raise InvalidInputError("epochs, batch_size and embed_dim must be positive")
        if self.l2_schedule not in L2_SCHEDULES:
            raise InvalidInputError(f"l2_schedule must be one of {L2_SCHEDULES}")
        if self.theta_init not in ("uniform", "identity"):
            raise InvalidInputError("theta_init must be 'uniform' or 'identity'")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise InvalidInputError(f"unknown config fields: {unknown}")
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(**d)


@dataclass
class TrainedModel:
    params: enc.EncoderParams
    theta: np.ndarray
    variant: str
    config: TrainConfig
    history: list = field(default_factory=list)
    best_epoch: int = 0
    feature_mean: np.ndarray = None
    feature_scale: np.ndarray = None
    stage1_history: list = field(default_factory=list)
    initial_objective: float = None

    @property
    def metric(self):
        return "euclidean" if self.variant == "euc" else "hyperbolic"

    def transform(self, features):
        x = np.asarray(features, dtype=np.float64)
        if self.feature_mean is None:
            return x
        return (x - self.feature_mean) / self.feature_scale

    def scores(self, features):
        """Alignment scores in (0, 1); dropout is never applied here."""
        out = enc.encode(self.params, self.transform(features))
        return enc.alignment(out, self.theta)

    def predict(self, features):
        return enc.predict(self.scores(features))

    def label_distances(self):
        return labelspace.embedding_distance_matrix(self.theta, self.metric)


class Adam:
    """Adam over a fixed list of arrays, updated in place."""

    def __init__(self, arrays, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays, grads):
        if len(arrays) != len(self.m):
            raise InvalidInputError("parameter list does not match optimizer state")
        for k, g in enumerate(grads):
            if not np.all(np.isfinite(g)):
                raise TrainingError(
                    f"non-finite gradient in parameter block {k} at step {self.t + 1}")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            if a.shape != g.shape:
                raise InvalidInputError(f"gradient shape {g.shape} != parameter {a.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            a -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def adam_step(state, arrays, grads):
    """Functional wrapper around :meth:`Adam.step`; returns the state."""
    state.step(arrays, grads)
    return state


def joint_objective(params, theta, features, truth, cooc, lam, metric="hyperbolic"):
    """``BCE + lam * co-occurrence loss`` with dropout disabled.

    Returns ``(value, (dW list, db list), dtheta)``.
    """
    if lam < 0:
        raise InvalidInputError("lam must be non-negative")
    l1, (dws, dbs), dtheta = enc.l1_gradients(params, theta, features, truth)
    if lam == 0:
        return l1, (dws, dbs), dtheta
    l2, g2 = labelspace.cooc_loss(theta, cooc, metric)
    return l1 + lam * l2, (dws, dbs), dtheta + lam * g2


def split_validation(dataset, fraction, seed):
    """Deterministic random split into ``(train, validation)`` slices."""
    if not 0.0 < fraction < 1.0:
        raise InvalidInputError("fraction must lie in (0, 1)")
    m = len(dataset)
    if m < 2:
        raise InvalidInputError("need at least two documents to split")
    n_val = min(max(int(round(fraction * m)), 1), m - 1)
    perm = np.random.default_rng(seed).permutation(m)
    return dataset.take(np.sort(perm[n_val:])), dataset.take(np.sort(perm[:n_val]))


def _streams(seed):
    # independent streams so variants consume identical randomness where they overlap
    split, encoder, theta, shuffle, dropout = np.random.SeedSequence(seed).spawn(5)
    return (int(split.generate_state(1)[0]), np.random.default_rng(encoder),
            np.random.default_rng(theta), np.random.default_rng(shuffle),
            np.random.default_rng(dropout))


def _prepare(dataset, config):
    config.validate()
    if len(dataset) < 2:
        raise InvalidInputError("training set needs at least two documents")
    if config.standardize:
        mean = dataset.features.mean(axis=0)
        scale = dataset.features.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
    else:
        mean = scale = None
    return mean, scale


def _init_theta(config, num_labels, rng):
    if config.theta_init == "identity":
        return np.eye(num_labels)
    w = config.theta_init_half_width
    return rng.uniform(-w, w, size=(config.embed_dim, num_labels))


def _fit(dataset, config, theta, *, train_theta, lam, metric):
    """Mini-batch Adam on ``BCE + lam * L2`` with validation-based selection."""
    mean, scale = _prepare(dataset, config)
    split_seed, enc_rng, _, shuffle_rng, drop_rng = _streams(config.seed)
    train, val = split_validation(dataset, config.validation_fraction, split_seed)
    x_tr = train.features if mean is None else (train.features - mean) / scale
    x_val = val.features if mean is None else (val.features - mean) / scale
    y_tr = train.labels.astype(np.float64)

    sizes = [dataset.feature_dim, *config.hidden, theta.shape[0]]
    params = enc.init_encoder(sizes, enc_rng)
    theta = np.array(theta, dtype=np.float64)
    arrays = params.arrays() + ([theta] if train_theta else [])
    opt = Adam(arrays, lr=config.learning_rate)

    use_l2 = lam > 0 and train_theta
    cooc = labelspace.count_cooccurrence(train.labels)
    mask = labelspace.candidate_mask(cooc) if use_l2 else None
    m = len(train)
    n_batches = -(-m // config.batch_size)
    l2_weight = lam / n_batches if config.l2_schedule == "every_batch" else lam

    def objective():
        value, _, _ = enc.l1_gradients(params, theta, x_tr, y_tr)
        if use_l2:
            value += lam * labelspace.cooc_loss(theta, cooc, metric, mask)[0]
        return value

    model = TrainedModel(params, theta, config.variant, config,
                         feature_mean=mean, feature_scale=scale)
    model.initial_objective = objective()
    best = (-1.0, None)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(m)
        for b in range(n_batches):
            idx = order[b * config.batch_size:(b + 1) * config.batch_size]
            _, (dws, dbs), dtheta = enc.l1_gradients(
                params, theta, x_tr[idx], y_tr[idx], doc_dropout=config.doc_dropout,
                label_dropout=config.label_dropout, train_mode=True, rng=drop_rng)
            if use_l2 and (config.l2_schedule == "every_batch" or b == 0):
                _, g2 = labelspace.cooc_loss(theta, cooc, metric, mask)
                dtheta = dtheta + l2_weight * g2
            opt.step(arrays, dws + dbs + ([dtheta] if train_theta else []))

        pred = enc.predict(enc.alignment(enc.encode(params, x_val), theta))
        report = f1_scores(pred, val.labels)
        train_obj = objective()
        model.history.append({"epoch": epoch, "objective": train_obj,
                              "val_micro_f1": report.micro_f1,
                              "val_macro_f1": report.macro_f1})
        log.debug("%s epoch %d objective %.4f val micro %.4f", config.variant,
                  epoch, train_obj, report.micro_f1)
        if report.micro_f1 > best[0]:
            best = (report.micro_f1, (epoch, params.copy(), theta.copy()))

    model.best_epoch, model.params, model.theta = best[1]
    return model


def fit_cooccurrence(theta, cooc, *, steps, lr, metric="hyperbolic"):
    """Full-batch Adam on the co-occurrence loss alone.

    Returns ``(theta, losses)`` with ``steps + 1`` loss values, before each
    step and after the last.
    """
    theta = np.array(theta, dtype=np.float64)
    mask = labelspace.candidate_mask(cooc)
    opt = Adam([theta], lr=lr)
    losses = []
    for _ in range(steps):
        loss, grad = labelspace.cooc_loss(theta, cooc, metric, mask)
        losses.append(loss)
        opt.step([theta], [grad])
    losses.append(labelspace.cooc_loss(theta, cooc, metric, mask)[0])
    return theta, losses


def train_flat(dataset, config):
    if config.variant != "flt":
        raise InvalidInputError("train_flat expects variant 'flt'")
    theta = np.eye(dataset.num_labels)
    return _fit(dataset, config, theta, train_theta=False, lam=0.0, metric="hyperbolic")


def train_cascaded(dataset, config):
    if config.variant != "cas":
        raise InvalidInputError("train_cascaded expects variant 'cas'")
    config.validate()
    split_seed, _, theta_rng, _, _ = _streams(config.seed)
    train, _ = split_validation(dataset, config.validation_fraction, split_seed)
    cooc = labelspace.count_cooccurrence(train.labels)
    theta0 = _init_theta(config, dataset.num_labels, theta_rng)
    steps = config.epochs if config.stage1_steps is None else config.stage1_steps
    theta, losses = fit_cooccurrence(theta0, cooc, steps=steps, lr=config.learning_rate)
    model = _fit(dataset, config, theta, train_theta=False, lam=0.0, metric="hyperbolic")
    model.stage1_history = losses
    return model


def train_joint(dataset, config):
    if config.variant not in ("jnt", "euc"):
        raise InvalidInputError("train_joint expects variant 'jnt' or 'euc'")
    config.validate()
    _, _, theta_rng, _, _ = _streams(config.seed)
    theta = _init_theta(config, dataset.num_labels, theta_rng)
    metric = "euclidean" if config.variant == "euc" else "hyperbolic"
    return _fit(dataset, config, theta, train_theta=config.train_theta,
                lam=config.lam, metric=metric)


def train(dataset, config):
    """Dispatch on ``config.variant``."""
    config.validate()
    return {"flt": train_flat, "cas": train_cascaded,
            "jnt": train_joint, "euc": train_joint}[config.variant](dataset, config)


def _arr(a):
    return None if a is None else np.asarray(a).tolist()


def save_checkpoint(path, model):
    doc = {
        "format": CHECKPOINT_FORMAT,
        "variant": model.variant,
        "config": asdict(model.config),
        "encoder": {"weights": [_arr(w) for w in model.params.weights],
                    "biases": [_arr(b) for b in model.params.biases]},
        "theta": _arr(model.theta),
        "feature_mean": _arr(model.feature_mean),
        "feature_scale": _arr(model.feature_scale),
        "best_epoch": model.best_epoch,
        "initial_objective": model.initial_objective,
        "history": model.history,
        "stage1_history": model.stage1_history,
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path):
    doc = json.loads(Path(path).read_text())
    found = doc.get("format")
    if found != CHECKPOINT_FORMAT:
        raise CheckpointVersionError(
            f"checkpoint format {found!r} is not supported (expected {CHECKPOINT_FORMAT!r})")

    def arr(a):
        return None if a is None else np.array(a, dtype=np.float64)

    params = enc.EncoderParams([arr(w) for w in doc["encoder"]["weights"]],
                               [arr(b) for b in doc["encoder"]["biases"]])
    return TrainedModel(
        params, arr(doc["theta"]), doc["variant"], TrainConfig.from_dict(doc["config"]),
        history=doc["history"], best_epoch=doc["best_epoch"],
        feature_mean=arr(doc["feature_mean"]), feature_scale=arr(doc["feature_scale"]),
        stage1_history=doc["stage1_history"], initial_objective=doc["initial_objective"])
