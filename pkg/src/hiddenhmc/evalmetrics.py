"""Classification and embedding-quality metrics.

Embedding metrics compare each query label's distance ordering of the other
labels with hop counts in a ground-truth hierarchy. Relevance of a label is
``1 / hops``; within equal distances, labels are ordered by ascending id.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidInputError

DEFAULT_KS = (1, 3, 5, 10)


@dataclass
class F1Report:
    micro_f1: float
    macro_f1: float
    per_class: list = field(default_factory=list)


@dataclass
class RankingReport:
    ndcg_at_k: dict
    spearman: float
    degenerate_queries: list = field(default_factory=list)


def _prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def f1_scores(pred, truth):
    """Micro and macro F1 over binary ``(m, L)`` prediction and truth matrices.

    Classes that are absent from both predictions and truth are left out of
    the macro average (their ``per_class`` entry is ``None``). When nothing
    is predicted or true at all, both scores are 1.
    """
    pred = np.asarray(pred).astype(bool)
    truth = np.asarray(truth).astype(bool)
    if pred.shape != truth.shape:
        raise InvalidInputError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    pred = pred.reshape(-1, pred.shape[-1])
    truth = truth.reshape(-1, truth.shape[-1])
    tp = np.sum(pred & truth, axis=0)
    fp = np.sum(pred & ~truth, axis=0)
    fn = np.sum(~pred & truth, axis=0)

    per_class, f1s = [], []
    for t, p, n in zip(tp, fp, fn):
        if t + p + n == 0:
            per_class.append(None)
            continue
        prf = _prf(int(t), int(p), int(n))
        per_class.append(prf)
        f1s.append(prf[2])
    macro = float(np.mean(f1s)) if f1s else 1.0

    TP, FP, FN = int(tp.sum()), int(fp.sum()), int(fn.sum())
    micro = _prf(TP, FP, FN)[2] if TP + FP + FN else 1.0
    return F1Report(micro, macro, per_class)


def embedding_ranking(distances, query):
    """Other labels grouped by ascending distance from ``query``.

    Returns a list of tie groups, each a list of label ids in ascending order.
    """
    row = np.asarray(distances, dtype=np.float64)[query]
    others = [j for j in range(len(row)) if j != query]
    groups = {}
    for j in others:
        groups.setdefault(row[j], []).append(j)
    return [groups[d] for d in sorted(groups)]


def _ranked_order(distances, query):
    return [j for group in embedding_ranking(distances, query) for j in group]


def graded_relevance(hops, query):
    """Relevance ``1 / hops(query, l)`` for every label; the query itself gets 0."""
    row = np.asarray(hops, dtype=np.float64)[query]
    off = np.arange(len(row)) != query
    if np.any(row[off] <= 0):
        bad = np.flatnonzero(off & (row <= 0)).tolist()
        raise InvalidInputError(f"zero hops from label {query} to {bad}")
    rel = np.zeros_like(row)
    rel[off] = 1.0 / row[off]
    return rel


def dcg_at_k(relevances, k):
    """``sum_{i<=k} rel_i / log2(i + 1)`` over the first ``k`` ranked entries."""
    if k < 1:
        raise InvalidInputError("k must be at least 1")
    rel = np.asarray(relevances, dtype=np.float64)[:k]
    # fsum is correctly rounded, so the value never drops as k grows
    return math.fsum(rel / np.log2(np.arange(2, rel.size + 2)))


def query_ndcg(distances, hops, query, k):
    """NDCG@k for a single query label; ``nan`` when the ideal DCG is zero
    but the ranked DCG is not (cannot happen with hop-based relevance)."""
    rel = graded_relevance(hops, query)
    order = _ranked_order(distances, query)
    ranked = rel[order]
    dcg = dcg_at_k(ranked, k)
    ideal = dcg_at_k(np.sort(ranked)[::-1], k)
    if ideal == 0.0:
        return 1.0 if dcg == 0.0 else float("nan")
    return dcg / ideal


def ndcg_at_k(distances, hops, k):
    """NDCG@k averaged over all query labels."""
    L = np.shape(distances)[0]
    return float(np.mean([query_ndcg(distances, hops, q, k) for q in range(L)]))


def spearman_per_query(distances, hops):
    """Per-query rank correlation between distances and hop counts.

    Returns ``(values, degenerate)``; queries with zero rank variance on
    either side get value 0 and ``degenerate=True``.
    """
    d = np.asarray(distances, dtype=np.float64)
    h = np.asarray(hops, dtype=np.float64)
    L = d.shape[0]
    if L < 3:
        raise InvalidInputError("rank correlation needs at least 3 labels")
    if d.shape != (L, L) or h.shape != (L, L):
        raise InvalidInputError("distances and hops must both be (L, L)")
    values = np.zeros(L)
    degenerate = np.zeros(L, dtype=bool)
    for q in range(L):
        off = np.arange(L) != q
        rp = rankdata(d[q, off])
        rh = rankdata(h[q, off])
        rp -= rp.mean()
        rh -= rh.mean()
        denom = np.sqrt(np.sum(rp * rp) * np.sum(rh * rh))
        if denom == 0.0:
            degenerate[q] = True
            continue
        values[q] = np.sum(rp * rh) / denom
    return values, degenerate


def spearman(distances, hops):
    """Mean per-query Spearman correlation, in [-1, 1]."""
    values, degenerate = spearman_per_query(distances, hops)
    if degenerate.any():
        warnings.warn(f"{int(degenerate.sum())} queries had zero rank variance",
                      RuntimeWarning, stacklevel=2)
    return float(values.mean())


def ranking_report(distances, hops, ks=DEFAULT_KS):
    L = np.shape(distances)[0]
    ndcg = {int(k): ndcg_at_k(distances, hops, min(int(k), L - 1)) for k in ks}
    values, degenerate = spearman_per_query(distances, hops)
    return RankingReport(ndcg, float(values.mean()), np.flatnonzero(degenerate).tolist())
