"""Randomized property checks behind ``hyro verify``.

Each check returns ``(passed, detail)`` where ``detail`` is the worst observed
deviation. Sizes are chosen so the whole suite runs in a few seconds.
"""

import numpy as np

from . import ball, cost
from .pipeline import HyroParams, hyro_forward, hyro_trace
from .rotation import BlockOrthogonal, cayley_block
from .scaling import BlockScaling, scale_point

CURVATURES = (0.01, 0.05, 0.1, 1.0)


def _interior(rng, shape, c, max_tangent=3.0):
    v = rng.normal(size=shape)
    v *= rng.uniform(0.05, max_tangent, size=shape[:-1] + (1,)) / np.linalg.norm(v, axis=-1, keepdims=True)
    return ball.exp_map_origin(v, c)


def _rel(a, b):
    scale = np.maximum(np.linalg.norm(b, axis=-1), 1e-300)
    return float(np.max(np.linalg.norm(a - b, axis=-1) / scale))


def check_round_trip(rng):
    worst = 0.0
    for c in CURVATURES:
        v = rng.normal(size=(2000, 6))
        v *= rng.uniform(0, 50, size=(2000, 1)) / np.linalg.norm(v, axis=1, keepdims=True)
        x = ball.exp_map_origin(v, c)
        back = ball.log_map_origin(x, c)
        # projected norms can land an ulp under the limit
        clamped = np.linalg.norm(x, axis=1) >= ball.max_norm(c) * (1 - 1e-12)
        if not np.all(np.isfinite(back)):
            return False, np.inf
        err = np.linalg.norm(back - v, axis=1) / (1 + np.linalg.norm(v, axis=1))
        worst = max(worst, float(np.max(err[~clamped], initial=0.0)))
    return worst <= 1e-6, worst


def check_containment(rng):
    for c in CURVATURES:
        v = rng.normal(size=(2000, 6)) * rng.uniform(0, 1e3, size=(2000, 1))
        x = ball.exp_map_origin(v, c)
        if not np.all(c * np.sum(x * x, axis=1) < 1):
            return False, c
    return True, 0.0


def check_mobius_factorization(rng):
    worst = 0.0
    for c in CURVATURES:
        m = rng.normal(size=(6, 6))
        x = _interior(rng, (500, 6), c)
        direct = ball.mobius_matvec(m, x, c)
        via = ball.exp_map_origin(ball.log_map_origin(x, c) @ m.T, c)
        worst = max(worst, _rel(direct, via))
    return worst <= 1e-9, worst


def check_scalar_law(rng):
    worst = 0.0
    for c in CURVATURES:
        lam = rng.uniform(0.2, 3.0)
        v = rng.normal(size=(500, 6)) * 0.5
        a = ball.mobius_matvec(lam * np.eye(6), ball.exp_map_origin(v, c), c)
        worst = max(worst, _rel(a, ball.exp_map_origin(lam * v, c)))
    return worst <= 1e-9, worst


def check_conformality(rng):
    worst = 0.0
    for c in CURVATURES:
        u = rng.normal(size=(500, 6))
        v = rng.normal(size=(500, 6))
        hyp = ball.angle_at_origin(ball.exp_map_origin(u, c), ball.exp_map_origin(v, c))
        worst = max(worst, float(np.max(np.abs(hyp - ball.angle_at_origin(u, v)))))
    return worst <= 1e-9, worst


def check_radius_monotone(rng):
    for c in CURVATURES:
        r = np.linspace(0, ball.max_norm(c), 2001)
        rad = ball.hyperbolic_radius(r[:, None], c)
        if not np.all(np.diff(rad) > 0):
            return False, c
    return True, 0.0


def check_orthogonality(rng):
    worst = 0.0
    for n in (2, 3, 8, 16):
        r = cayley_block(rng.uniform(-2, 2, size=(100, n, n)))
        gram = np.swapaxes(r, 1, 2) @ r - np.eye(n)
        worst = max(worst, float(np.max(np.linalg.norm(gram, axis=(1, 2)))))
        if np.max(np.abs(np.linalg.det(r) - 1)) > 1e-8:
            return False, np.inf
    return worst <= 1e-10, worst


def _random_rotation(rng, dim, block, spread=2.0):
    return BlockOrthogonal(dim, block, rng.uniform(-spread, spread, size=(dim // block, block, block)))


def check_rotation_radius(rng):
    worst = 0.0
    for c in CURVATURES:
        rot = _random_rotation(rng, 8, 4)
        q = _interior(rng, (500, 8), c)
        drift = np.abs(ball.hyperbolic_radius(rot.apply(q), c) - ball.hyperbolic_radius(q, c))
        worst = max(worst, float(np.max(drift)))
    return worst <= 1e-10, worst


def check_exp_commutation(rng):
    worst = 0.0
    for c in CURVATURES:
        rot = _random_rotation(rng, 8, 4)
        v = rng.normal(size=(500, 8))
        worst = max(worst, _rel(ball.exp_map_origin(rot.apply(v), c), rot.apply(ball.exp_map_origin(v, c))))
    return worst <= 1e-10, worst


def check_angle_identity(rng):
    rot = _random_rotation(rng, 8, 4)
    x = _interior(rng, (500, 8), 1.0)
    y = _interior(rng, (500, 8), 1.0)
    lhs = np.cos(ball.angle_at_origin(rot.apply(x), y))
    rhs = np.sum(rot.apply(x) * y, axis=1) / (np.linalg.norm(x, axis=1) * np.linalg.norm(y, axis=1))
    worst = float(np.max(np.abs(lhs - rhs)))
    return worst <= 1e-10, worst


def check_scaling_factorization(rng):
    worst = 0.0
    for c in CURVATURES:
        sca = BlockScaling(8, 2, np.eye(2) + 0.5 * rng.normal(size=(4, 2, 2)))
        h = _interior(rng, (500, 8), c)
        via = ball.exp_map_origin(ball.log_map_origin(h, c) @ sca.dense().T, c)
        worst = max(worst, _rel(scale_point(sca, h, c), via))
    return worst <= 1e-9, worst


def check_scaling_radius_direction(rng):
    c = 0.1
    h = _interior(rng, (200, 8), c, max_tangent=2.0)
    base = ball.hyperbolic_radius(h, c)
    worst_dir = 0.0
    for lam in (0.5, 0.9, 1.1, 2.0):
        q = scale_point(BlockScaling(8, 4, lam * np.broadcast_to(np.eye(4), (2, 4, 4))), h, c)
        rad = ball.hyperbolic_radius(q, c)
        if not (np.all(rad > base) if lam > 1 else np.all(rad < base)):
            return False, lam
        unit_q = q / np.linalg.norm(q, axis=1, keepdims=True)
        unit_h = h / np.linalg.norm(h, axis=1, keepdims=True)
        worst_dir = max(worst_dir, float(np.max(np.abs(unit_q - unit_h))))
    return worst_dir <= 1e-12, worst_dir


def _random_params(rng, dim=8, block=4, c=0.01):
    k = dim // block
    return HyroParams(
        c,
        _random_rotation(rng, dim, block, 1.0),
        BlockScaling(dim, block, np.eye(block) + 0.3 * rng.normal(size=(k, block, block))),
    )


def check_pipeline_identity(rng):
    x = rng.normal(size=(200, 8))
    worst = _rel(hyro_forward(HyroParams.identity(8, 4), x), x)
    return worst <= 1e-9, worst


def check_radius_decoupling(rng):
    worst = 0.0
    for c in CURVATURES:
        trace = hyro_trace(_random_params(rng, c=c), rng.normal(size=(200, 8)))
        diff = ball.hyperbolic_radius(trace.v, c) - ball.hyperbolic_radius(trace.q, c)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst <= 1e-10, worst


def check_batch_equivariance(rng):
    params = _random_params(rng)
    x = rng.normal(size=(50, 8))
    batch = hyro_forward(params, x)
    rows = np.stack([hyro_forward(params, row) for row in x])
    worst = float(np.max(np.abs(batch - rows)))
    return worst <= 1e-12, worst


def check_determinism(rng):
    params = _random_params(rng)
    x = rng.normal(size=(50, 8))
    same = np.array_equal(hyro_forward(params, x), hyro_forward(params.copy(), x.copy()))
    return same, 0.0


def check_cost_properties(rng):
    v = rng.normal(size=(40, 8))
    t = rng.normal(size=(5, 8))
    labels = rng.integers(0, 5, size=40)
    c = cost.cost_volume(v, t)
    if np.max(np.abs(c)) > 1 + 1e-12:
        return False, float(np.max(np.abs(c)))
    _, grad = cost.ce_loss(c, labels)
    row_sum = float(np.max(np.abs(grad.sum(axis=1))))
    rescaled = cost.cost_volume(v * rng.uniform(0.1, 10, size=(40, 1)), t * rng.uniform(0.1, 10, size=(5, 1)))
    worst = max(row_sum, float(np.max(np.abs(rescaled - c))))
    rot = _random_rotation(rng, 8, 8).dense()
    same_argmax = np.array_equal(np.argmax(cost.cost_volume(v @ rot.T, t @ rot.T), 1), np.argmax(c, 1))
    return same_argmax and worst <= 1e-12, worst


CHECKS = {
    "ball.round_trip": check_round_trip,
    "ball.containment": check_containment,
    "ball.mobius_factorization": check_mobius_factorization,
    "ball.scalar_diagonal_law": check_scalar_law,
    "ball.conformality": check_conformality,
    "ball.radius_monotone": check_radius_monotone,
    "rotation.orthogonality": check_orthogonality,
    "rotation.radius_invariance": check_rotation_radius,
    "rotation.exp_commutation": check_exp_commutation,
    "rotation.angle_identity": check_angle_identity,
    "scaling.factorization": check_scaling_factorization,
    "scaling.radius_and_direction": check_scaling_radius_direction,
    "pipeline.identity": check_pipeline_identity,
    "pipeline.radius_decoupling": check_radius_decoupling,
    "pipeline.batch_equivariance": check_batch_equivariance,
    "pipeline.determinism": check_determinism,
    "cost.properties": check_cost_properties,
}


def check_configured(rng, dim, block, c):
    """Radius decoupling and norm preservation at a caller-chosen shape."""
    params = HyroParams(
        c,
        _random_rotation(rng, dim, block, 1.0),
        BlockScaling(dim, block, np.eye(block) + 0.3 * rng.normal(size=(dim // block, block, block))),
    )
    trace = hyro_trace(params, rng.normal(size=(200, dim)))
    drift = np.abs(ball.hyperbolic_radius(trace.v, c) - ball.hyperbolic_radius(trace.q, c))
    norm_gap = np.abs(np.linalg.norm(trace.v, axis=1) - np.linalg.norm(trace.q, axis=1))
    worst = max(float(np.max(drift)), float(np.max(norm_gap)))
    return worst <= 1e-10, worst


def run_all(seed=42, dim=8, block=4, curvature=0.01):
    """Return ``[(name, passed, detail), ...]`` for every registered check."""
    results = []
    for name, check in CHECKS.items():
        passed, detail = check(np.random.default_rng(seed))
        results.append((name, bool(passed), detail))
    passed, detail = check_configured(np.random.default_rng(seed), dim, block, curvature)
    results.append((f"pipeline.configured(d={dim},n={block},c={curvature:g})", bool(passed), detail))
    return results
