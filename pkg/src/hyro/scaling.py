"""Block-diagonal radius scaling applied through the Mobius matvec."""

import numpy as np

from . import ball
from .errors import ShapeError
from .rotation import block_diag_dense, block_matvec, block_matvec_vjp


class BlockScaling:
    """Learnable ``S = diag(S_1, ..., S_K)`` with dense ``b x b`` blocks.

    With ``diagonal_only=True`` every block is restricted to its diagonal
    (off-diagonal entries are zeroed on assignment and get no gradient).
    """

    def __init__(self, dim, block_size, blocks=None, diagonal_only=False):
        dim, block_size = int(dim), int(block_size)
        if dim < 1 or block_size < 1 or dim % block_size:
            raise ShapeError(f"dim {dim} must be a positive multiple of block size {block_size}")
        self.dim = dim
        self.block_size = block_size
        self.num_blocks = dim // block_size
        self.diagonal_only = bool(diagonal_only)
        if blocks is None:
            blocks = np.broadcast_to(np.eye(block_size), (self.num_blocks, block_size, block_size))
        self.blocks = blocks

    @property
    def blocks(self):
        return self._blocks

    @blocks.setter
    def blocks(self, value):
        value = np.array(value, dtype=np.float64)
        expected = (self.num_blocks, self.block_size, self.block_size)
        if value.shape != expected:
            raise ShapeError(f"scaling blocks must have shape {expected}, got {value.shape}")
        if not np.all(np.isfinite(value)):
            raise ShapeError("scaling blocks contain non-finite entries")
        if self.diagonal_only:
            value = value * np.eye(self.block_size)
        value.flags.writeable = False
        self._blocks = value

    def mask(self, grad):
        return grad * np.eye(self.block_size) if self.diagonal_only else grad

    def dense(self):
        return block_diag_dense(self.blocks)

    def copy(self):
        return BlockScaling(self.dim, self.block_size, self.blocks.copy(), self.diagonal_only)


def scale_point(params, h, c):
    """``S (x)_c h`` with the block-diagonal ``S`` applied blockwise."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != params.dim:
        raise ShapeError(f"expected points of dimension {params.dim}, got {h.shape[-1]}")
    c = ball._check_curvature(c)
    h = ball._as_finite(h)
    return ball._mobius_from_image(h, block_matvec(params.blocks, h), c)


def scale_vjp(params, h, grad, c):
    """Return ``(grad_blocks, grad_h)`` for ``q = scale_point(params, h, c)``.

    Differentiates the equivalent form ``exp_0(S log_0(h))``.
    """
    h = np.asarray(h, dtype=np.float64)
    t = ball.log_map_origin(h, c)
    u = block_matvec(params.blocks, t)
    grad_u = ball.exp_map_origin_vjp(u, grad, c)
    grad_blocks, grad_t = block_matvec_vjp(params.blocks, t, grad_u)
    return params.mask(grad_blocks), ball.log_map_origin_vjp(h, grad_t, c)
