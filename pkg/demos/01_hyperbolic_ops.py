"""Tour of the Poincare-ball toolbox.

Shows the basic operations the rest of the package is built on: projecting
into the open unit ball, Mobius addition, the exponential/logarithmic maps
at the origin, and geodesic distances. Everything here is plain numpy.
"""

import numpy as np

from hypershape import manifold as mf

rng = np.random.default_rng(0)
c = 1.0  # curvature magnitude; carried by each BallTensor

# --- points live strictly inside the unit ball -----------------------------
raw = rng.standard_normal((4, 3)) * 2.0
x = mf.project(raw, c)
print("norms after projection:", np.linalg.norm(x.values, axis=-1))

# --- Mobius addition is the ball's group operation -------------------------
y = mf.project(rng.standard_normal((4, 3)) * 0.3, c)
s = mf.mobius_add(x, y)
print("Mobius sum stays in the ball:",
      np.linalg.norm(s.values, axis=-1).max() < 1.0)

# adding a point to its own negation returns (numerically) the origin
neg_x = mf.BallTensor(-x.values, c)
print("x (-x) ~ 0:", np.abs(mf.mobius_add(x, neg_x).values).max())

# --- exp0 / log0 are inverse maps through the origin -----------------------
v = mf.TangentTensor(rng.standard_normal((5, 3)), c)
back = mf.log0(mf.exp0(v))
print("log0(exp0(v)) max error:", np.abs(back.values - v.values).max())

# --- distances -------------------------------------------------------------
# dist0 measures how "deep" a point sits: points near the boundary are
# exponentially far from the origin, which is what lets nested structure
# spread out without crowding.
shallow = mf.project(np.array([[0.1, 0.0, 0.0]]), c)
deep = mf.project(np.array([[0.95, 0.0, 0.0]]), c)
print("dist0 shallow:", mf.dist0(shallow)[0])
print("dist0 deep:   ", mf.dist0(deep)[0])

# the general two-point distance agrees with dist0 against the origin
origin = mf.project(np.zeros((1, 3)), c)
print("dist(0, p) == dist0(p):",
      np.allclose(mf.dist(origin, deep), mf.dist0(deep)))

# --- Mobius matrix-vector product ------------------------------------------
# a linear map applied in the tangent-space sense but expressed on the ball;
# with the identity matrix it is a no-op.
same = mf.mobius_matvec(np.eye(3), deep)
print("identity matvec is identity:", np.allclose(same.values, deep.values))
