"""Synthetic benchmark: 16 Gaussians on a 4x4 grid under a hidden hierarchy.

Labels 0-15 are the grid cells (cell ``(i, j)`` is label ``4 i + j``),
labels 16-19 the 2x2 quadrants and label 20 the root, so every clean sample
carries exactly three labels.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .data import Dataset, Hierarchy
from .errors import InvalidInputError

GRID = 4
NUM_LEAVES = GRID * GRID
NUM_QUADRANTS = 4
NUM_LABELS = NUM_LEAVES + NUM_QUADRANTS + 1
ROOT = NUM_LABELS - 1


@dataclass
class GaussianGridSpec:
    grid_side: int = GRID
    spacing: float = 1.0
    sigma: float = 0.1
    total_samples: int = 20000
    train_fraction: float = 0.6
    seed: int = 0

    def validate(self):
        if self.grid_side != GRID:
            raise InvalidInputError("only the 4x4 grid is supported")
        if not 0.0 < self.sigma < self.spacing / 4:
            raise InvalidInputError("sigma must lie in (0, spacing / 4)")
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidInputError("train_fraction must lie in (0, 1)")
        if self.total_samples < 2:
            raise InvalidInputError("need at least two samples")


def quadrant_of(leaf):
    i, j = divmod(int(leaf), GRID)
    return NUM_LEAVES + 2 * (i // 2) + (j // 2)


def grid_hierarchy():
    edges = [(ROOT, NUM_LEAVES + q) for q in range(NUM_QUADRANTS)]
    edges += [(quadrant_of(leaf), leaf) for leaf in range(NUM_LEAVES)]
    names = {leaf: f"cell_{leaf // GRID}_{leaf % GRID}" for leaf in range(NUM_LEAVES)}
    names.update({NUM_LEAVES + q: f"quadrant_{q}" for q in range(NUM_QUADRANTS)})
    names[ROOT] = "root"
    return Hierarchy(NUM_LABELS, edges, names)


def generate(spec=None):
    """Draw the grid mixture and split it into ``(train, test, hierarchy)``."""
    spec = spec or GaussianGridSpec()
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    m = spec.total_samples
    leaves = rng.integers(NUM_LEAVES, size=m)
    centers = np.stack(np.divmod(leaves, GRID), axis=1) * spec.spacing
    features = centers + rng.normal(0.0, spec.sigma, size=(m, 2))

    labels = np.zeros((m, NUM_LABELS), dtype=np.uint8)
    rows = np.arange(m)
    labels[rows, leaves] = 1
    labels[rows, [quadrant_of(l) for l in leaves]] = 1
    labels[:, ROOT] = 1

    ids = [f"s{i:06d}" for i in range(m)]
    data = Dataset(features, labels, ids)
    perm = rng.permutation(m)
    n_train = int(round(spec.train_fraction * m))
    return data.take(np.sort(perm[:n_train])), data.take(np.sort(perm[n_train:])), grid_hierarchy()


def drop_labels(dataset, prob, rng):
    """Per document, with probability ``prob`` remove one uniformly chosen active label.

    Documents with at most one active label are never modified.
    """
    if not 0.0 <= prob <= 1.0:
        raise InvalidInputError("prob must lie in [0, 1]")
    labels = dataset.labels.copy()
    hit = rng.random(len(dataset)) < prob
    for i in np.flatnonzero(hit):
        active = np.flatnonzero(labels[i])
        if active.size > 1:
            labels[i, active[rng.integers(active.size)]] = 0
    return Dataset(dataset.features.copy(), labels, list(dataset.ids))


def subsample(dataset, fraction, seed):
    """Uniform random subset of ``round(fraction * size)`` documents, original order kept."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidInputError("fraction must lie in (0, 1]")
    size = int(round(fraction * len(dataset)))
    if size == 0:
        raise InvalidInputError("subsample would be empty")
    rng = np.random.default_rng(seed)
    return dataset.take(np.sort(rng.choice(len(dataset), size=size, replace=False)))


def hops_matrix(hierarchy):
    """Shortest-path hop counts in the undirected hierarchy graph."""
    L = hierarchy.num_labels
    if hierarchy.edges:
        parents, children = np.array(hierarchy.edges).T
    else:
        parents = children = np.array([], dtype=int)
    graph = csr_matrix((np.ones(len(parents)), (parents, children)), shape=(L, L))
    dist = shortest_path(graph, directed=False, unweighted=True)
    if not np.all(np.isfinite(dist)):
        pairs = [(int(a), int(b)) for a, b in np.argwhere(~np.isfinite(dist)) if a < b]
        raise InvalidInputError(f"hierarchy is disconnected; unreachable pairs: {pairs}")
    return dist.astype(np.int64)
