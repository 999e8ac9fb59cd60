"""
Hyperbolic label geometry in a few lines
========================================

Unconstrained vectors are mapped into the Poincare ball, and distances
there grow quickly near the boundary.
"""

import numpy as np

from hiddenhmc import geometry as geo

# a handful of Euclidean vectors of growing length
x = np.array([[0.0, 0.0], [0.5, 0.0], [3.0, 4.0], [30.0, 40.0]])
p = geo.project_to_ball(x)
print("ball points\n", p.round(5))
print("norms", np.linalg.norm(p, axis=1).round(5))

# the same map goes through the hyperboloid
lifted = geo.lorentz_lift(x)
print("<x, x>_L =", geo.minkowski_inner(lifted, lifted))
print("max |proj - via hyperboloid| =", np.abs(geo.lorentz_to_poincare(lifted) - p).max())

# equal Euclidean steps cost more and more hyperbolic distance
radii = np.linspace(0, 0.95, 6)
pts = np.stack([radii, np.zeros_like(radii)], axis=1)
steps = geo.poincare_distance(pts[:-1], pts[1:])
for r0, r1, d in zip(radii, radii[1:], steps):
    print(f"{r0:.2f} -> {r1:.2f}: {d:.3f}")

# analytic gradient of the distance, compared with a central difference
u, v = p[1], p[2]
gu, _, _ = geo.poincare_distance_grad(u, v)
h = 1e-6
fd = np.array([(geo.poincare_distance(u + h * e, v) - geo.poincare_distance(u - h * e, v)) / (2 * h)
               for e in np.eye(2)])
print("grad_u", gu, "finite diff", fd)
