"""Synthetic alignment task: radius-mismatched, rotated visual rows vs class anchors.

Visual rows are ``rho * R_hidden @ anchor[label] + noise``; textual rows are the
unit-norm anchors themselves. Training the visual stream's ``S`` and ``theta``
against the anchors through the cosine cost volume should undo the hidden
rotation while the rotation never changes any hyperbolic radius.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import expm

from . import ball, cost
from .errors import ConfigError, DivergenceError
from .optim import DEFAULT_LR, OptimizerState, adamw_step
from .pipeline import HyroParams, hyro_trace, hyro_vjp

LOG_COLUMNS = ("step", "loss", "accuracy", "mean_angle", "radius_drift")


@dataclass
class ToyTaskConfig:
    dim: int = 32
    block: int = 8
    scale_block: int = 8
    curvature: float = 0.01
    num_classes: int = 8
    samples_per_class: int = 32
    visual_radius: float = 3.0
    rotation_budget: float = math.pi / 4
    noise: float = 0.02
    seed: int = 42
    temperature: float = cost.DEFAULT_TEMPERATURE
    lr: float = DEFAULT_LR
    weight_decay: float = 1e-4
    symmetric: bool = False
    diagonal_scaling: bool = False

    def validate(self):
        """Raise :class:`ConfigError` on the first violated precondition."""
        for name in ("dim", "block", "scale_block", "num_classes", "samples_per_class"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.dim % self.block:
            raise ConfigError(f"dim {self.dim} is not divisible by block size {self.block}")
        if self.dim % self.scale_block:
            raise ConfigError(f"dim {self.dim} is not divisible by scale block size {self.scale_block}")
        if self.num_classes < 2:
            raise ConfigError("num_classes must be at least 2")
        checks = {
            "curvature": self.curvature > 0,
            "visual_radius": self.visual_radius > 0,
            "rotation_budget": self.rotation_budget >= 0,
            "noise": self.noise >= 0,
            "temperature": self.temperature > 0,
            "lr": self.lr > 0,
            "weight_decay": self.weight_decay >= 0,
        }
        for name, ok in checks.items():
            value = getattr(self, name)
            if not (np.isfinite(value) and ok):
                raise ConfigError(f"invalid {name}: {value!r}")
        return self


@dataclass
class ToyTask:
    visual: np.ndarray
    textual: np.ndarray
    labels: np.ndarray
    hidden_rotation: np.ndarray  # (K, n, n) block stack


def random_block_rotation(rng, num_blocks, block, budget):
    """Block rotations whose largest rotation angle equals ``budget``."""
    out = np.empty((num_blocks, block, block))
    for i in range(num_blocks):
        g = rng.normal(size=(block, block))
        a = g - g.T
        top = np.max(np.abs(np.linalg.eigvals(a)))
        out[i] = expm(a * (budget / top)) if top > 0 else np.eye(block)
    return out


def generate_task(cfg, anchors=None, hidden_rotation=None):
    """Draw a task from ``cfg``; ``anchors`` / ``hidden_rotation`` override the random ones."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    k = cfg.dim // cfg.block
    if anchors is None:
        anchors = rng.normal(size=(cfg.num_classes, cfg.dim))
    anchors = np.asarray(anchors, dtype=np.float64)
    anchors = anchors / np.linalg.norm(anchors, axis=1, keepdims=True)
    if hidden_rotation is None:
        hidden_rotation = random_block_rotation(rng, k, cfg.block, cfg.rotation_budget)
    hidden_rotation = np.asarray(hidden_rotation, dtype=np.float64)
    labels = np.repeat(np.arange(cfg.num_classes), cfg.samples_per_class)
    rotated = np.einsum("kij,nkj->nki", hidden_rotation, anchors.reshape(-1, k, cfg.block))
    visual = cfg.visual_radius * rotated.reshape(anchors.shape)[labels]
    visual = visual + cfg.noise * rng.normal(size=visual.shape)
    return ToyTask(visual, anchors, labels, hidden_rotation)


@dataclass
class TrainLog:
    step: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)
    mean_angle: list = field(default_factory=list)
    radius_drift: list = field(default_factory=list)

    def append(self, **row):
        for name in LOG_COLUMNS:
            getattr(self, name).append(row[name])

    def __len__(self):
        return len(self.step)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(LOG_COLUMNS)
        writer.writerows(zip(*(getattr(self, name) for name in LOG_COLUMNS)))
        return buf.getvalue()

    def to_json(self):
        return json.dumps({"format_version": 1, **asdict(self)}, indent=1) + "\n"

    def smoothed_loss(self, window=100):
        """Exponential moving average of the loss with span ``window``."""
        alpha = 2.0 / (window + 1)
        out = np.empty(len(self.loss))
        acc = self.loss[0] if self.loss else 0.0
        for i, value in enumerate(self.loss):
            acc = alpha * value + (1 - alpha) * acc
            out[i] = acc
        return out


@dataclass
class TrainResult:
    log: TrainLog
    visual_params: HyroParams
    textual_params: HyroParams = None


def _metrics(task, trace_v, text_out, c, temperature):
    costs = cost.cost_volume(trace_v.out, text_out)
    loss, grad_cost = cost.ce_loss(costs, task.labels, temperature)
    matched = text_out[task.labels]
    angle = ball.angle_at_origin(ball.exp_map_origin(trace_v.out, c), ball.exp_map_origin(matched, c))
    drift = np.abs(ball.hyperbolic_radius(trace_v.v, c) - ball.hyperbolic_radius(trace_v.q, c))
    row = {
        "loss": loss,
        "accuracy": cost.accuracy(costs, task.labels),
        "mean_angle": float(np.mean(angle)),
        "radius_drift": float(np.mean(drift)),
    }
    return row, grad_cost


def _flat(params, prefix):
    return {f"{prefix}theta": params.rotation.theta, f"{prefix}scaling": params.scaling.blocks}


def train(cfg, steps, *, train_rotation=True, train_scaling=True, task=None):
    """Run ``steps`` AdamW updates; the log holds ``steps + 1`` rows (step 0 first).

    Row ``t`` records loss and metrics after ``t`` updates. Raises
    :class:`DivergenceError` (carrying the partial log) on a non-finite loss.
    """
    cfg.validate()
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 0:
        raise ConfigError(f"steps must be a non-negative integer, got {steps!r}")
    if task is None:
        task = generate_task(cfg)
    c = cfg.curvature

    def fresh():
        return HyroParams.identity(cfg.dim, cfg.block, cfg.scale_block, c, cfg.diagonal_scaling)

    streams = {"v_": fresh()}
    if cfg.symmetric:
        streams["t_"] = fresh()
    state = OptimizerState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    log = TrainLog()

    for t in range(steps + 1):
        trace_v = hyro_trace(streams["v_"], task.visual)
        trace_t = hyro_trace(streams["t_"], task.textual) if cfg.symmetric else None
        text_out = trace_t.out if cfg.symmetric else task.textual
        row, grad_cost = _metrics(task, trace_v, text_out, c, cfg.temperature)
        if not np.isfinite(row["loss"]):
            raise DivergenceError(f"non-finite loss at step {t}", log)
        log.append(step=t, **row)
        if t == steps or not (train_rotation or train_scaling):
            continue

        grad_out_v, grad_out_t = cost.cost_volume_vjp(trace_v.out, text_out, grad_cost)
        grads = {}
        upstream = {"v_": (trace_v, task.visual, grad_out_v)}
        if cfg.symmetric:
            upstream["t_"] = (trace_t, task.textual, grad_out_t)
        for prefix, (trace, x, g) in upstream.items():
            g_theta, g_scale, _ = hyro_vjp(streams[prefix], x, g, trace)
            if train_rotation:
                grads[f"{prefix}theta"] = g_theta
            if train_scaling:
                grads[f"{prefix}scaling"] = g_scale

        flat = {}
        for prefix, params in streams.items():
            flat.update(_flat(params, prefix))
        try:
            flat, state = adamw_step(state, flat, grads)
        except DivergenceError as exc:
            raise DivergenceError(str(exc), log) from None
        for prefix, params in streams.items():
            params.rotation.theta = flat[f"{prefix}theta"]
            params.scaling.blocks = flat[f"{prefix}scaling"]

    return TrainResult(log, streams["v_"], streams.get("t_"))


ABLATIONS = {
    "neither": (False, False),
    "radius-only": (False, True),
    "rotation-only": (True, False),
    "both": (True, True),
}


def ablate(cfg, steps, task=None):
    """Final accuracy for each of the four (rotation, scaling) on/off settings."""
    if task is None:
        task = generate_task(cfg)
    table = {}
    for name, (rot, sca) in ABLATIONS.items():
        result = train(cfg, steps, train_rotation=rot, train_scaling=sca, task=task)
        table[name] = result.log.accuracy[-1]
    return table


def format_ablation(table):
    lines = [f"{'radius':<8} {'rotation':<9} {'accuracy':>8}"]
    for name, (rot, sca) in ABLATIONS.items():
        lines.append(f"{'yes' if sca else 'no':<8} {'yes' if rot else 'no':<9} {table[name]:>8.4f}")
    return "\n".join(lines)
