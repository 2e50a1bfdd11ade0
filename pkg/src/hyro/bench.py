"""Wall-clock cost of materializing block Cayley rotations."""

import time

import numpy as np

from .errors import ConfigError
from .rotation import cayley_block, cayley_flops

ASSERT_MIN_DIM = 512


def time_materialize(dim, block_size, repeats=5, seed=0):
    """Median seconds to build all ``dim // block_size`` Cayley blocks."""
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    if dim % block_size:
        raise ConfigError(f"dim {dim} is not divisible by block size {block_size}")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-1, 1, size=(dim // block_size, block_size, block_size))
    cayley_block(theta)  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        cayley_block(theta)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run(dims, blocks, repeats=5):
    """Time every valid ``(d, n)`` pair.

    Returns ``(rows, failures)``; ``failures`` lists every ``d >= 512`` where
    ``n = d/4`` was not strictly faster than ``n = d``.
    """
    if repeats < 1:
        raise ConfigError("repeats must be at least 1")
    rows = []
    for d in dims:
        for n in blocks:
            if n > d or d % n:
                continue
            rows.append({"dim": d, "block": n, "num_blocks": d // n,
                         "flops": cayley_flops(d, n), "seconds": time_materialize(d, n, repeats)})
    failures = []
    by_key = {(r["dim"], r["block"]): r["seconds"] for r in rows}
    for d in dims:
        if d >= ASSERT_MIN_DIM and (d, d) in by_key and (d, d // 4) in by_key:
            if not by_key[(d, d // 4)] < by_key[(d, d)]:
                failures.append(d)
    return rows, failures


def format_rows(rows):
    lines = [f"{'dim':>6} {'block':>6} {'blocks':>6} {'flops':>12} {'median s':>10}"]
    for r in rows:
        lines.append(f"{r['dim']:>6} {r['block']:>6} {r['num_blocks']:>6} {r['flops']:>12} {r['seconds']:>10.2e}")
    return "\n".join(lines)
