"""Core containers and their on-disk formats.

Datasets are JSON Lines: a header ``{"meta": {"num_labels": L, "feature_dim": d}}``
followed by one ``{"id": str, "features": [...], "labels": [...]}`` record per
document. Hierarchies are plain-text edge lists with one ``parent child`` pair
of integer ids per line, plus an optional JSON sidecar mapping ids to names.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError


@dataclass
class Dataset:
    """Dense features paired with binary label vectors.

    Attributes
    ----------
    features : (m, d) float64 array
    labels : (m, L) uint8 array of 0/1 entries
    ids : list of m document ids
    """

    features: np.ndarray
    labels: np.ndarray
    ids: list = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.features.ndim != 2 or self.labels.ndim != 2:
            raise InvalidInputError("features and labels must be 2-D")
        if self.features.shape[0] != self.labels.shape[0]:
            raise InvalidInputError(
                f"features has {self.features.shape[0]} rows but labels has "
                f"{self.labels.shape[0]}")
        if np.any(self.labels > 1):
            raise InvalidInputError("labels must be binary")
        if self.ids is None:
            self.ids = [str(i) for i in range(len(self))]
        elif len(self.ids) != len(self):
            raise InvalidInputError("ids length does not match dataset size")

    def __len__(self):
        return self.features.shape[0]

    @property
    def num_labels(self):
        return self.labels.shape[1]

    @property
    def feature_dim(self):
        return self.features.shape[1]

    def take(self, index):
        """Return the sub-dataset selected by an integer index array."""
        index = np.asarray(index, dtype=np.intp)
        return Dataset(self.features[index], self.labels[index],
                       [self.ids[i] for i in index])


@dataclass
class Hierarchy:
    """Ground-truth label graph, used only for evaluation."""

    num_labels: int
    edges: list
    names: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = [(int(p), int(c)) for p, c in self.edges]
        bad = sorted({i for e in self.edges for i in e
                      if not 0 <= i < self.num_labels})
        if bad:
            raise InvalidInputError(f"unknown label ids in hierarchy: {bad}")


def write_dataset(path, dataset):
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        meta = {"num_labels": dataset.num_labels,
                "feature_dim": dataset.feature_dim}
        fh.write(json.dumps({"meta": meta}) + "\n")
        for doc_id, x, y in zip(dataset.ids, dataset.features, dataset.labels):
            rec = {"id": doc_id, "features": x.tolist(),
                   "labels": np.flatnonzero(y).tolist()}
            fh.write(json.dumps(rec) + "\n")


def read_dataset(path):
    """Parse and validate a JSON Lines dataset file.

    Errors cite the 1-based line number of the offending record.
    """
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InvalidInputError(f"{path}: empty file")
    try:
        meta = json.loads(lines[0])["meta"]
        num_labels = int(meta["num_labels"])
        feature_dim = int(meta["feature_dim"])
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidInputError(f"{path}:1: bad header ({exc})") from None

    ids, feats, labels, seen = [], [], [], set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            doc_id = str(rec["id"])
            x = [float(v) for v in rec["features"]]
            y = [int(v) for v in rec["labels"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise InvalidInputError(f"{path}:{lineno}: malformed record ({exc})") from None
        if len(x) != feature_dim:
            raise InvalidInputError(
                f"{path}:{lineno}: ragged features, expected {feature_dim} "
                f"values, got {len(x)}")
        bad = [v for v in y if not 0 <= v < num_labels]
        if bad:
            raise InvalidInputError(
                f"{path}:{lineno}: label ids {bad} out of range for "
                f"num_labels={num_labels}")
        if doc_id in seen:
            raise InvalidInputError(f"{path}:{lineno}: duplicate doc id {doc_id!r}")
        seen.add(doc_id)
        row = np.zeros(num_labels, dtype=np.uint8)
        row[y] = 1
        ids.append(doc_id)
        feats.append(x)
        labels.append(row)

    features = np.array(feats, dtype=np.float64).reshape(len(ids), feature_dim)
    label_mat = np.array(labels, dtype=np.uint8).reshape(len(ids), num_labels)
    return Dataset(features, label_mat, ids)


def write_hierarchy(path, hierarchy):
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for parent, child in hierarchy.edges:
            fh.write(f"{parent} {child}\n")
    if hierarchy.names:
        sidecar = path.with_suffix(".names.json")
        names = {str(k): v for k, v in sorted(hierarchy.names.items())}
        sidecar.write_text(json.dumps(
            {"num_labels": hierarchy.num_labels, "names": names}, indent=1))


def read_hierarchy(path, num_labels=None):
    """Read an edge list; ``num_labels`` defaults to the sidecar or max id + 1."""
    path = Path(path)
    edges = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split()
            try:
                parent, child = int(parts[0]), int(parts[1])
            except (ValueError, IndexError):
                raise InvalidInputError(
                    f"{path}:{lineno}: expected 'parent_id child_id'") from None
            edges.append((parent, child))
    names = {}
    sidecar = path.with_suffix(".names.json")
    if sidecar.exists():
        side = json.loads(sidecar.read_text())
        names = {int(k): v for k, v in side.get("names", {}).items()}
        if num_labels is None:
            num_labels = side.get("num_labels")
    if num_labels is None:
        num_labels = 1 + max((max(e) for e in edges), default=-1)
    return Hierarchy(int(num_labels), edges, names)


def ingest_external(path):
    """Load a pre-featurized corpus in the JSON Lines format of :func:`read_dataset`."""
    return read_dataset(path)
