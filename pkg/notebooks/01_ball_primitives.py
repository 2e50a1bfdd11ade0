"""Walk through the origin maps of the Poincare ball.

Run: python3 notebooks/01_ball_primitives.py
"""

import numpy as np

from hyro import ball

c = 0.1
print(f"ball radius at c={c}: {ball.ball_radius(c):.4f}")

# exp squashes long tangent vectors toward the boundary; log undoes it
for length in (0.1, 1.0, 5.0, 20.0):
    v = np.array([length, 0.0])
    x = ball.exp_map_origin(v, c)
    print(f"|v|={length:5.1f}  |exp(v)|={np.linalg.norm(x):.6f}  "
          f"radius={ball.hyperbolic_radius(x, c):8.4f}  log(exp(v))={ball.log_map_origin(x, c)[0]:.6f}")

# far enough out the point is clamped at (1 - 1e-5)/sqrt(c), so log no longer inverts exp
v = np.array([100.0, 0.0])
print("clamped:", ball.exp_map_origin(v, c)[0], "limit:", ball.max_norm(c))

# a Mobius matvec is exp . M . log
m = np.array([[2.0, 0.0], [0.0, 0.5]])
x = ball.exp_map_origin(np.array([1.0, 1.0]), c)
print("mobius:", ball.mobius_matvec(m, x, c))
print("factored:", ball.exp_map_origin(m @ ball.log_map_origin(x, c), c))
