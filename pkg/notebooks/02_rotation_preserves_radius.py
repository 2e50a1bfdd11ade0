"""Block rotations move angles and leave hyperbolic radii alone.

Run: python3 notebooks/02_rotation_preserves_radius.py
"""

import numpy as np

from hyro import ball
from hyro.pipeline import HyroParams, hyro_trace
from hyro.rotation import BlockOrthogonal, cayley_flops

rng = np.random.default_rng(0)
c, dim, n = 0.05, 16, 4

rot = BlockOrthogonal(dim, n, rng.uniform(-1, 1, size=(dim // n, n, n)))
r = rot.dense()
print("max |R^T R - I|:", np.abs(r.T @ r - np.eye(dim)).max())

x = ball.exp_map_origin(rng.normal(size=(5, dim)), c)
y = rot.apply(x)
print("radius before:", np.round(ball.hyperbolic_radius(x, c), 6))
print("radius after: ", np.round(ball.hyperbolic_radius(y, c), 6))

anchor = ball.exp_map_origin(rng.normal(size=dim), c)
print("angle to anchor before:", np.round(ball.angle_at_origin(x, anchor), 4))
print("angle to anchor after: ", np.round(ball.angle_at_origin(y, anchor), 4))

# with scaling switched on, only S changes the radius
params = HyroParams(c, rot, HyroParams.identity(dim, n).scaling)
params.scaling.blocks = 1.5 * params.scaling.blocks
trace = hyro_trace(params, rng.normal(size=(3, dim)))
print("radius after S:", np.round(ball.hyperbolic_radius(trace.q, c), 6))
print("radius after R:", np.round(ball.hyperbolic_radius(trace.v, c), 6))

# solve cost of the Cayley blocks at d = 512
for block in (512, 256, 128, 64):
    print(f"n={block:4d}  K*n^3 = {cayley_flops(512, block):,}")
