"""The composed refinement ``x' = log_0(R (S (x)_c exp_0(x)))`` and its gradient."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ball
from .errors import FormatError, InvalidInputError, ShapeError
from .rotation import BlockOrthogonal
from .scaling import BlockScaling, scale_point, scale_vjp

FORMAT_VERSION = 1


class HyroParams:
    """Curvature plus the rotation and scaling state for one embedding stream."""

    def __init__(self, curvature, rotation, scaling):
        curvature = float(curvature)
        if not np.isfinite(curvature) or curvature <= 0:
            raise InvalidInputError(f"curvature must be positive, got {curvature}")
        if rotation.dim != scaling.dim:
            raise ShapeError(f"rotation dim {rotation.dim} != scaling dim {scaling.dim}")
        self.curvature = curvature
        self.rotation = rotation
        self.scaling = scaling

    @property
    def dim(self):
        return self.rotation.dim

    @classmethod
    def identity(cls, dim, block_size, scale_block_size=None, curvature=0.01, diagonal_only=False):
        """Zero ``theta`` and identity ``S``: the transform starts as a no-op."""
        scale_block_size = block_size if scale_block_size is None else scale_block_size
        return cls(
            curvature,
            BlockOrthogonal(dim, block_size),
            BlockScaling(dim, scale_block_size, diagonal_only=diagonal_only),
        )

    def copy(self):
        return HyroParams(self.curvature, self.rotation.copy(), self.scaling.copy())

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "curvature": self.curvature,
            "dim": self.dim,
            "rotation": {
                "block_size": self.rotation.block_size,
                "theta_blocks": [b.ravel().tolist() for b in self.rotation.theta],
            },
            "scaling": {
                "block_size": self.scaling.block_size,
                "blocks": [b.ravel().tolist() for b in self.scaling.blocks],
            },
        }

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise FormatError("parameter document must be a JSON object")
        version = doc.get("format_version")
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported format_version {version!r}; expected {FORMAT_VERSION}")
        try:
            curvature = doc["curvature"]
            dim = doc["dim"]
            rot, sca = doc["rotation"], doc["scaling"]
            n, theta = rot["block_size"], rot["theta_blocks"]
            b, blocks = sca["block_size"], sca["blocks"]
        except (KeyError, TypeError) as exc:
            raise FormatError(f"missing field {exc}") from None
        for name, value in (("dim", dim), ("rotation.block_size", n), ("scaling.block_size", b)):
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise FormatError(f"{name} must be a positive integer, got {value!r}")
        if isinstance(curvature, bool) or not isinstance(curvature, (int, float)):
            raise FormatError(f"curvature must be a number, got {curvature!r}")
        if dim % n or dim % b:
            raise FormatError(f"dim {dim} is not divisible by block sizes {n} and {b}")
        theta = _unflatten(theta, dim // n, n, "rotation.theta_blocks")
        blocks = _unflatten(blocks, dim // b, b, "scaling.blocks")
        try:
            return cls(curvature, BlockOrthogonal(dim, n, theta), BlockScaling(dim, b, blocks))
        except (InvalidInputError, ShapeError) as exc:
            raise FormatError(str(exc)) from None

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(doc)


def _unflatten(rows, count, size, name):
    if not isinstance(rows, list) or len(rows) != count:
        raise FormatError(f"{name} must be a list of {count} blocks")
    out = np.empty((count, size, size))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != size * size:
            raise FormatError(f"{name}[{i}] must hold {size * size} numbers")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
            raise FormatError(f"{name}[{i}] contains a non-numeric entry")
        out[i] = np.reshape(np.asarray(row, dtype=np.float64), (size, size))
    if not np.all(np.isfinite(out)):
        raise FormatError(f"{name} contains non-finite entries")
    return out


@dataclass
class Trace:
    """Intermediate values of one forward pass."""

    x: np.ndarray
    h: np.ndarray  # on the ball
    q: np.ndarray  # after radius scaling
    v: np.ndarray  # after rotation
    out: np.ndarray  # back in the tangent space


def hyro_trace(params, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.dim:
        raise ShapeError(f"expected embeddings of dimension {params.dim}, got {x.shape[-1]}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("embeddings contain non-finite entries")
    c = params.curvature
    h = ball.exp_map_origin(x, c)
    q = scale_point(params.scaling, h, c)
    v = params.rotation.apply(q)
    return Trace(x, h, q, v, ball.log_map_origin(v, c))


def hyro_forward(params, x):
    """Refine a batch of Euclidean embeddings ``(N, d)`` (or one row ``(d,)``)."""
    return hyro_trace(params, x).out


def hyro_vjp(params, x, grad, trace=None):
    """Return ``(grad_theta, grad_scaling, grad_x)`` for ``hyro_forward(params, x)``.

    Pass the ``trace`` from a previous :func:`hyro_trace` call to skip the
    forward recomputation.
    """
    if trace is None:
        trace = hyro_trace(params, x)
    c = params.curvature
    grad = np.asarray(grad, dtype=np.float64)
    grad_v = ball.log_map_origin_vjp(trace.v, grad, c)
    grad_theta, grad_q = params.rotation.apply_vjp(trace.q, grad_v)
    grad_scaling, grad_h = scale_vjp(params.scaling, trace.h, grad_q, c)
    grad_x = ball.exp_map_origin_vjp(trace.x, grad_h, c)
    return grad_theta, grad_scaling, grad_x
