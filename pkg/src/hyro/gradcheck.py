"""Central finite-difference oracle for every hand-written VJP.

Each registered op builds a random trial: named input arrays, a scalar loss
that only calls forward code, and the analytic gradients of that loss. The
oracle perturbs one coordinate at a time and never touches VJP code.
"""

from dataclasses import dataclass, field

import numpy as np

from . import ball, cost, pipeline
from .rotation import BlockOrthogonal, cayley_block, cayley_vjp
from .scaling import BlockScaling, scale_point, scale_vjp

DEFAULT_STEP = 1e-6
DEFAULT_TOLERANCE = 1e-5


def finite_diff_grad(loss_fn, params_flat, step=DEFAULT_STEP):
    """Central differences ``(L(p + h e_i) - L(p - h e_i)) / 2h`` for each ``i``.

    Coordinates where either evaluation is non-finite come back as ``nan``.
    """
    p = np.array(params_flat, dtype=np.float64)
    grad = np.empty_like(p)
    for i in range(p.size):
        orig = p[i]
        p[i] = orig + step
        up = loss_fn(p.copy())
        p[i] = orig - step
        down = loss_fn(p.copy())
        p[i] = orig
        grad[i] = (up - down) / (2 * step) if np.isfinite(up) and np.isfinite(down) else np.nan
    return grad


def relative_error(analytic, numeric):
    """``max|a - f| / max(max|a|, max|f|, 1e-8)`` over one parameter array."""
    analytic = np.ravel(analytic)
    numeric = np.ravel(numeric)
    if not np.all(np.isfinite(numeric)) or not np.all(np.isfinite(analytic)):
        return np.inf
    diff = np.max(np.abs(analytic - numeric), initial=0.0)
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(numeric), initial=0.0), 1e-8)
    return diff / scale


@dataclass
class GradReport:
    op: str
    step: float
    tolerance: float
    trials: int = 0
    max_rel: dict = field(default_factory=dict)
    max_abs: dict = field(default_factory=dict)

    @property
    def worst(self):
        return max(self.max_rel.values(), default=0.0)

    @property
    def passed(self):
        return self.worst <= self.tolerance

    def to_dict(self):
        return {
            "op": self.op,
            "trials": self.trials,
            "step": self.step,
            "tolerance": self.tolerance,
            "max_rel": {k: float(v) for k, v in self.max_rel.items()},
            "max_abs": {k: float(v) for k, v in self.max_abs.items()},
            "passed": bool(self.passed),
        }


@dataclass
class Trial:
    inputs: dict
    loss: object  # callable(dict of arrays) -> float, forward code only
    analytic: dict


def _tangent(rng, shape, max_norm=1.0):
    v = rng.normal(size=shape)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / norms * rng.uniform(0.1, max_norm, size=norms.shape)


def _weighted(fn, weights):
    return lambda inputs: float(np.sum(weights * fn(inputs)))


def _trial_exp(rng, dim, block, c, rows=3):
    v = _tangent(rng, (rows, dim))
    w = rng.normal(size=(rows, dim))
    return Trial({"v": v}, _weighted(lambda p: ball.exp_map_origin(p["v"], c), w),
                 {"v": ball.exp_map_origin_vjp(v, w, c)})


def _trial_log(rng, dim, block, c, rows=3):
    x = ball.exp_map_origin(_tangent(rng, (rows, dim)), c)
    w = rng.normal(size=(rows, dim))
    return Trial({"x": x}, _weighted(lambda p: ball.log_map_origin(p["x"], c), w),
                 {"x": ball.log_map_origin_vjp(x, w, c)})


def _trial_cayley(rng, dim, block, c):
    theta = rng.uniform(-2, 2, size=(block, block))
    w = rng.normal(size=(block, block))
    return Trial({"theta": theta}, _weighted(lambda p: cayley_block(p["theta"]), w),
                 {"theta": cayley_vjp(theta, w)})


def _trial_rotate(rng, dim, block, c, rows=3):
    rot = BlockOrthogonal(dim, block, rng.uniform(-1, 1, size=(dim // block, block, block)))
    q = ball.exp_map_origin(_tangent(rng, (rows, dim)), c)
    w = rng.normal(size=(rows, dim))

    def loss(p):
        return float(np.sum(w * BlockOrthogonal(dim, block, p["theta"]).apply(p["q"])))

    g_theta, g_q = rot.apply_vjp(q, w)
    return Trial({"theta": rot.theta.copy(), "q": q}, loss, {"theta": g_theta, "q": g_q})


def _random_scaling(rng, dim, block):
    k = dim // block
    return BlockScaling(dim, block, np.eye(block) + 0.3 * rng.normal(size=(k, block, block)))


def _trial_scale(rng, dim, block, c, rows=3):
    sca = _random_scaling(rng, dim, block)
    h = ball.exp_map_origin(_tangent(rng, (rows, dim)), c)
    w = rng.normal(size=(rows, dim))

    def loss(p):
        return float(np.sum(w * scale_point(BlockScaling(dim, block, p["blocks"]), p["h"], c)))

    g_blocks, g_h = scale_vjp(sca, h, w, c)
    return Trial({"blocks": sca.blocks.copy(), "h": h}, loss, {"blocks": g_blocks, "h": g_h})


def _params_from(p, dim, block, c):
    return pipeline.HyroParams(
        c, BlockOrthogonal(dim, block, p["theta"]), BlockScaling(dim, block, p["blocks"])
    )


def _trial_hyro(rng, dim, block, c, rows=3):
    k = dim // block
    params = pipeline.HyroParams(
        c,
        BlockOrthogonal(dim, block, rng.uniform(-1, 1, size=(k, block, block))),
        _random_scaling(rng, dim, block),
    )
    x = _tangent(rng, (rows, dim))
    w = rng.normal(size=(rows, dim))

    def loss(p):
        return float(np.sum(w * pipeline.hyro_forward(_params_from(p, dim, block, c), p["x"])))

    g_theta, g_blocks, g_x = pipeline.hyro_vjp(params, x, w)
    inputs = {"theta": params.rotation.theta.copy(), "blocks": params.scaling.blocks.copy(), "x": x}
    return Trial(inputs, loss, {"theta": g_theta, "blocks": g_blocks, "x": g_x})


def _trial_identity(rng, dim, block, c, rows=3):
    params = pipeline.HyroParams.identity(dim, block, curvature=c)
    x = _tangent(rng, (rows, dim))
    w = rng.normal(size=(rows, dim))
    loss = _weighted(lambda p: pipeline.hyro_forward(params, p["x"]), w)
    return Trial({"x": x}, loss, {"x": pipeline.hyro_vjp(params, x, w)[2]})


def _trial_ce(rng, dim, block, c, rows=6, classes=4):
    costs = rng.uniform(-1, 1, size=(rows, classes))
    labels = rng.integers(0, classes, size=rows)
    return Trial({"cost": costs}, lambda p: cost.ce_loss(p["cost"], labels)[0],
                 {"cost": cost.ce_loss(costs, labels)[1]})


def _trial_cost_loss(rng, dim, block, c, rows=6, classes=4):
    visual = rng.normal(size=(rows, dim))
    textual = rng.normal(size=(classes, dim))
    labels = rng.integers(0, classes, size=rows)

    def loss(p):
        return cost.ce_loss(cost.cost_volume(p["visual"], p["textual"]), labels)[0]

    _, g_cost = cost.ce_loss(cost.cost_volume(visual, textual), labels)
    gv, gt = cost.cost_volume_vjp(visual, textual, g_cost)
    return Trial({"visual": visual, "textual": textual}, loss, {"visual": gv, "textual": gt})


REGISTRY = {
    "exp": _trial_exp,
    "log": _trial_log,
    "cayley": _trial_cayley,
    "rotate": _trial_rotate,
    "scale": _trial_scale,
    "hyro": _trial_hyro,
    "identity": _trial_identity,
    "ce": _trial_ce,
    "cost_loss": _trial_cost_loss,
}


def numeric_grads(trial, step=DEFAULT_STEP):
    """Finite-difference gradient of ``trial.loss`` for each named input."""
    out = {}
    for name, value in trial.inputs.items():
        def flat_loss(flat, name=name, value=value):
            inputs = dict(trial.inputs)
            inputs[name] = flat.reshape(value.shape)
            return trial.loss(inputs)

        out[name] = finite_diff_grad(flat_loss, value.ravel(), step).reshape(value.shape)
    return out


def check_op_vjp(op_name, trial_count=20, seed=42, *, dim=8, block=4, curvature=0.01,
                 step=DEFAULT_STEP, tolerance=DEFAULT_TOLERANCE):
    """Compare one registered VJP against finite differences over random trials."""
    make = REGISTRY[op_name]
    rng = np.random.default_rng(seed)
    report = GradReport(op_name, step, tolerance)
    for _ in range(trial_count):
        trial = make(rng, dim, block, curvature)
        numeric = numeric_grads(trial, step)
        for name, analytic in trial.analytic.items():
            rel = relative_error(analytic, numeric[name])
            diff = np.abs(np.ravel(analytic) - np.ravel(numeric[name]))
            ab = float(np.max(diff, initial=0.0)) if np.all(np.isfinite(diff)) else np.inf
            report.max_rel[name] = max(report.max_rel.get(name, 0.0), rel)
            report.max_abs[name] = max(report.max_abs.get(name, 0.0), ab)
        report.trials += 1
    return report


def check_all(trial_count=20, seed=42, **kwargs):
    return [check_op_vjp(op, trial_count, seed, **kwargs) for op in REGISTRY]


def probe_near_boundary(trial_count=10, seed=42, *, dim=8, block=4, curvature=0.01):
    """Push tangent inputs past the projection margin; True iff every gradient is finite."""
    rng = np.random.default_rng(seed)
    for _ in range(trial_count):
        params = pipeline.HyroParams(
            curvature,
            BlockOrthogonal(dim, block, rng.uniform(-1, 1, size=(dim // block, block, block))),
            _random_scaling(rng, dim, block),
        )
        x = _tangent(rng, (3, dim)) * (20.0 / np.sqrt(curvature))
        out = pipeline.hyro_forward(params, x)
        grads = pipeline.hyro_vjp(params, x, rng.normal(size=x.shape))
        if not np.all(np.isfinite(out)) or not all(np.all(np.isfinite(g)) for g in grads):
            return False
    return True


def format_table(reports):
    lines = [f"{'op':<10} {'trials':>6} {'max rel err':>12} {'max abs err':>12}  result"]
    for r in reports:
        ab = max(r.max_abs.values(), default=0.0)
        lines.append(
            f"{r.op:<10} {r.trials:>6} {r.worst:>12.3e} {ab:>12.3e}  {'PASS' if r.passed else 'FAIL'}"
        )
    return "\n".join(lines)
