"""AdamW (decoupled weight decay) over a dict of named numpy arrays."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError

DEFAULT_LR = 2e-4


@dataclass
class OptimizerState:
    lr: float = DEFAULT_LR
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 1e-4
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adamw_step(state, params, grads):
    """One AdamW update. Returns ``(new_params, state)``; ``state`` is updated in place.

    Only names present in ``grads`` are updated; other entries pass through.
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {name!r} at step {state.step + 1}")
    b1, b2 = state.betas
    state.step += 1
    t = state.step
    out = dict(params)
    for name, g in grads.items():
        p = np.asarray(params[name], dtype=np.float64)
        m = state.m.get(name, np.zeros_like(p))
        v = state.v.get(name, np.zeros_like(p))
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        p = p * (1 - state.lr * state.weight_decay)
        out[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out, state
