"""Independent reference implementations used by the test-suite.

Nothing here imports the code under test except for data containers.
"""

import itertools
import math
from collections import deque

import numpy as np


def central_diff(f, x, h=1e-6):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        fp = f(x)
        x[idx] = old - h
        fm = f(x)
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(b), np.linalg.norm(a), 1e-8)
    return float(np.linalg.norm(a - b) / scale)


def poincare_dist_ref(u, v):
    """Eq.-style arcosh formula, evaluated naively with math.acosh."""
    uu = sum(a * a for a in u)
    vv = sum(a * a for a in v)
    dd = sum((a - b) ** 2 for a, b in zip(u, v))
    return math.acosh(1 + 2 * dd / ((1 - uu) * (1 - vv)))


def cooc_loss_ref(theta, cooc, metric="hyperbolic"):
    """Loop-based co-occurrence ranking loss."""
    theta = np.asarray(theta, dtype=np.float64)
    L = theta.shape[1]
    pts = [theta[:, l] for l in range(L)]
    if metric == "hyperbolic":
        pts = [p / (1 + math.sqrt(1 + float(p @ p))) for p in pts]

        def dist(a, b):
            if np.array_equal(a, b):
                return 0.0
            return poincare_dist_ref(a, b)
    else:
        def dist(a, b):
            return float(np.linalg.norm(a - b))
    total = 0.0
    for l in range(L):
        for lp in range(L):
            if lp == l or cooc[l][lp] <= 0:
                continue
            cands = [z for z in range(L) if z != l and cooc[l][z] < cooc[l][lp]] + [lp]
            num = math.exp(-dist(pts[l], pts[lp]))
            den = sum(math.exp(-dist(pts[l], pts[z])) for z in cands)
            total -= math.log(num / den)
    return total


def f1_ref(pred, truth):
    """Cell-by-cell micro/macro F1 with the same absent-class convention."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    m, L = truth.shape
    TP = FP = FN = 0
    f1s = []
    for l in range(L):
        tp = fp = fn = 0
        for i in range(m):
            p, t = int(pred[i, l]), int(truth[i, l])
            tp += p and t
            fp += p and not t
            fn += t and not p
        TP, FP, FN = TP + tp, FP + fp, FN + fn
        if tp + fp + fn == 0:
            continue
        f1s.append(2 * tp / (2 * tp + fp + fn))
    micro = 2 * TP / (2 * TP + FP + FN) if TP + FP + FN else 1.0
    macro = sum(f1s) / len(f1s) if f1s else 1.0
    return micro, macro


def ndcg_ref(distances, hops, k):
    """Stable sort by (distance, id), relevance 1/hops, ideal = sorted relevances."""
    L = len(distances)
    scores = []
    for q in range(L):
        others = sorted((j for j in range(L) if j != q), key=lambda j: (distances[q][j], j))
        rels = [1.0 / hops[q][j] for j in others]
        dcg = sum(r / math.log2(i + 2) for i, r in enumerate(rels[:k]))
        ideal = sorted(rels, reverse=True)
        idcg = sum(r / math.log2(i + 2) for i, r in enumerate(ideal[:k]))
        scores.append(dcg / idcg)
    return sum(scores) / L


def average_ranks(values):
    """1-based ranks with ties replaced by the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for t in range(i, j + 1):
            ranks[order[t]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    if va == 0 or vb == 0:
        return 0.0
    return cov / math.sqrt(va * vb)


def spearman_ref(distances, hops):
    L = len(distances)
    vals = []
    for q in range(L):
        others = [j for j in range(L) if j != q]
        vals.append(pearson(average_ranks([distances[q][j] for j in others]),
                            average_ranks([hops[q][j] for j in others])))
    return sum(vals) / L


def bfs_hops(num_nodes, edges):
    adj = {i: set() for i in range(num_nodes)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    out = np.full((num_nodes, num_nodes), -1, dtype=np.int64)
    for s in range(num_nodes):
        out[s, s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if out[s, w] < 0:
                    out[s, w] = out[s, u] + 1
                    queue.append(w)
    return out


def sort_with_grouping(row, query):
    """Tie groups by exact distance equality, via itertools.groupby."""
    others = sorted((j for j in range(len(row)) if j != query), key=lambda j: (row[j], j))
    return [list(g) for _, g in itertools.groupby(others, key=lambda j: row[j])]
