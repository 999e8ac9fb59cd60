"""
Fitting label embeddings from co-occurrence alone
=================================================

The ranking loss only sees how often labels appear together. Here it is
minimized directly, and the resulting ball points are compared with the
grid hierarchy by hop distance.
"""

import numpy as np

from hiddenhmc import evalmetrics as em
from hiddenhmc import geometry as geo
from hiddenhmc import labelspace, synthdata
from hiddenhmc.trainer import fit_cooccurrence

train_set, _, hierarchy = synthdata.generate(synthdata.GaussianGridSpec(total_samples=2000))
cooc = labelspace.count_cooccurrence(train_set)
print("root co-occurs with quadrant 16:", cooc[20, 16], " leaf 0 with leaf 1:", cooc[0, 1])

theta0 = np.random.default_rng(0).uniform(-1e-3, 1e-3, size=(2, train_set.num_labels))
hops = synthdata.hops_matrix(hierarchy)

for steps in (0, 200, 2000):
    theta, losses = fit_cooccurrence(theta0, cooc, steps=steps, lr=0.01)
    d = labelspace.embedding_distance_matrix(theta)
    rr = em.ranking_report(d, hops, ks=(1, 3))
    print(f"{steps:5d} steps: loss {losses[-1]:8.2f}  spearman {rr.spearman:.3f}  "
          f"ndcg@1 {rr.ndcg_at_k[1]:.3f}  ndcg@3 {rr.ndcg_at_k[3]:.3f}")

# in two dimensions the points can be read off directly: root near the centre,
# quadrants around it, leaves further out
radius = np.linalg.norm(geo.project_to_ball(theta.T), axis=1)
print("mean radius  root %.3f  quadrants %.3f  leaves %.3f"
      % (radius[20], radius[16:20].mean(), radius[:16].mean()))
