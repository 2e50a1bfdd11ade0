"""Block-diagonal rotations parameterized by the Cayley transform.

Coordinates are split contiguously: block ``i`` owns ``[i*n, (i+1)*n)``. The
rotation is only ever held as a ``(K, n, n)`` stack; no dense ``d x d`` matrix
is formed.
"""

import numpy as np

from .errors import ShapeError


def skew(theta):
    theta = np.asarray(theta, dtype=np.float64)
    return theta - np.swapaxes(theta, -1, -2)


def cayley_block(theta):
    """Orthogonal matrix ``(I + A)(I - A)^-1`` with ``A = theta - theta^T``.

    Works on a single ``(n, n)`` matrix or a stack ``(K, n, n)``. Because the
    two factors commute, this solves ``(I - A) R = I + A`` instead of
    forming an inverse.
    """
    a = skew(theta)
    eye = np.eye(a.shape[-1])
    return np.linalg.solve(eye - a, eye + a)


def cayley_vjp(theta, grad_r):
    """Gradient w.r.t. ``theta`` given the gradient w.r.t. ``R = cayley(theta)``.

    With ``B = (I + R)^T G (I - A)^-T`` the result is ``B - B^T``.
    """
    a = skew(theta)
    grad_r = np.asarray(grad_r, dtype=np.float64)
    eye = np.eye(a.shape[-1])
    r = np.linalg.solve(eye - a, eye + a)
    left = np.swapaxes(eye + r, -1, -2) @ grad_r
    # left @ (I - A)^-T  ==  solve(I - A, left^T)^T
    b = np.swapaxes(np.linalg.solve(eye - a, np.swapaxes(left, -1, -2)), -1, -2)
    return b - np.swapaxes(b, -1, -2)


def cayley_flops(dim, block_size):
    """Multiply-add count (up to a constant) of inverting every Cayley block.

    ``K`` blocks of an ``O(n^3)`` solve give ``K n^3 = d n^2 = d^3 / K^2``.
    """
    if dim % block_size:
        raise ShapeError(f"dim {dim} is not divisible by block size {block_size}")
    return (dim // block_size) * block_size**3


def split_blocks(x, block_size):
    """View ``(..., d)`` as ``(..., K, n)``."""
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[-1]
    if d % block_size:
        raise ShapeError(f"last axis {d} is not divisible by block size {block_size}")
    return x.reshape(*x.shape[:-1], d // block_size, block_size)


def block_matvec(blocks, x):
    """Apply a block-diagonal matrix stored as ``(K, n, n)`` to ``(..., K*n)``."""
    k, n, _ = blocks.shape
    if x.shape[-1] != k * n:
        raise ShapeError(f"expected last axis {k * n}, got {x.shape[-1]}")
    xb = split_blocks(x, n)
    return np.einsum("kij,...kj->...ki", blocks, xb).reshape(x.shape)


def block_matvec_vjp(blocks, x, grad):
    """Return ``(grad_blocks, grad_x)`` for ``y = block_matvec(blocks, x)``."""
    n = blocks.shape[-1]
    xb = split_blocks(x, n)
    gb = split_blocks(grad, n)
    lead = "".join("abcdefgh"[: xb.ndim - 2])
    grad_blocks = np.einsum(f"{lead}ki,{lead}kj->kij", gb, xb)
    grad_x = np.einsum("kji,...kj->...ki", blocks, gb).reshape(np.shape(x))
    return grad_blocks, grad_x


def block_diag_dense(blocks):
    """Dense ``d x d`` matrix for a block stack. Test and oracle use only."""
    k, n, _ = blocks.shape
    out = np.zeros((k * n, k * n))
    for i in range(k):
        out[i * n : (i + 1) * n, i * n : (i + 1) * n] = blocks[i]
    return out


class BlockOrthogonal:
    """Learnable block-diagonal rotation ``diag(R_1, ..., R_K)``.

    ``theta`` holds the unconstrained ``(K, n, n)`` parameters; the orthogonal
    blocks are rebuilt lazily after every assignment to ``theta``.
    """

    def __init__(self, dim, block_size, theta=None):
        dim, block_size = int(dim), int(block_size)
        if dim < 1 or block_size < 1 or dim % block_size:
            raise ShapeError(f"dim {dim} must be a positive multiple of block size {block_size}")
        self.dim = dim
        self.block_size = block_size
        self.num_blocks = dim // block_size
        if theta is None:
            theta = np.zeros((self.num_blocks, block_size, block_size))
        self.theta = theta

    @property
    def theta(self):
        return self._state[0]

    @theta.setter
    def theta(self, value):
        value = np.array(value, dtype=np.float64)
        expected = (self.num_blocks, self.block_size, self.block_size)
        if value.shape != expected:
            raise ShapeError(f"theta must have shape {expected}, got {value.shape}")
        if not np.all(np.isfinite(value)):
            raise ShapeError("theta contains non-finite entries")
        # frozen so in-place edits cannot bypass cache invalidation
        value.flags.writeable = False
        # single assignment so readers never see a half-updated pair
        self._state = (value, None)

    def materialize(self):
        """The ``(K, n, n)`` stack of orthogonal blocks (cached)."""
        theta, blocks = self._state
        if blocks is None:
            blocks = cayley_block(theta)
            self._state = (theta, blocks)
        return blocks

    def apply(self, q):
        """Rotate points: plain coordinate matvec ``R q``."""
        q = np.asarray(q, dtype=np.float64)
        if q.shape[-1] != self.dim:
            raise ShapeError(f"expected points of dimension {self.dim}, got {q.shape[-1]}")
        return block_matvec(self.materialize(), q)

    def apply_vjp(self, q, grad):
        """Return ``(grad_theta, grad_q)`` for ``v = R q``."""
        grad_r, grad_q = block_matvec_vjp(self.materialize(), q, grad)
        return cayley_vjp(self.theta, grad_r), grad_q

    def dense(self):
        return block_diag_dense(self.materialize())

    def copy(self):
        return BlockOrthogonal(self.dim, self.block_size, self.theta.copy())


def rotate_point(params, q):
    return params.apply(q)
