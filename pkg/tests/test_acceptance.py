"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` (or execute this file)
to see the summary lines next to the pytest output.
"""

import json
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from hyro import ball, bench, cli, gradcheck, toy
from hyro.rotation import BlockOrthogonal, block_diag_dense, block_matvec, cayley_block

CURVATURES = (0.01, 0.05, 0.1, 1.0)

# seed-42 reference run of the default toy task (2000 steps), frozen
REF_FINAL_LOSS = 6.707915563582102e-06
REF_INITIAL_ANGLE = 0.5032802840999867
REF_FINAL_ANGLE = 0.2691267655350409


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail

    return report


def _ball_points(rng, n, dim, c, max_u=0.99):
    direction = rng.normal(size=(n, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    return direction * (rng.uniform(0, max_u, size=(n, 1)) / np.sqrt(c))


def _row_rel(a, b):
    scale = np.maximum(np.linalg.norm(b, axis=-1), 1e-300)
    return np.linalg.norm(a - b, axis=-1) / scale


def test_c01_orthogonality(verdict):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst_orth = worst_det = 0.0
    for n in (2, 3, 8, 16):
        r = cayley_block(rng.uniform(-2, 2, size=(250, n, n)))
        gram = np.einsum("kji,kjl->kil", r, r) - np.eye(n)
        worst_orth = max(worst_orth, float(np.max(np.linalg.norm(gram, axis=(1, 2)))))
        worst_det = max(worst_det, float(np.max(np.abs(np.linalg.det(r) - 1.0))))
    elapsed = time.perf_counter() - t0
    ok = worst_orth <= 1e-10 and worst_det <= 1e-8 and elapsed < 5
    verdict(1, "orthogonality", ok, f"|R^T R - I|_F={worst_orth:.2e} |det-1|={worst_det:.2e} t={elapsed:.2f}s")


def test_c02_radius_preservation(verdict):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst, pairs = 0.0, 0
    for c in CURVATURES:
        for dim, n in ((8, 4), (16, 8), (32, 8), (30, 3), (64, 16)):
            count = 500
            x = _ball_points(rng, count, dim, c)
            for chunk in np.array_split(np.arange(count), 5):
                rot = BlockOrthogonal(dim, n, rng.uniform(-2, 2, size=(dim // n, n, n)))
                moved = rot.apply(x[chunk])
                drift = np.abs(ball.hyperbolic_radius(moved, c) - ball.hyperbolic_radius(x[chunk], c))
                worst = max(worst, float(np.max(drift)))
            pairs += count
    elapsed = time.perf_counter() - t0
    ok = pairs >= 10_000 and worst <= 1e-10 and elapsed < 5
    verdict(2, "radius preservation", ok, f"{pairs} pairs, max |dRad|={worst:.2e} t={elapsed:.2f}s")


def test_c03_exp_commutation(verdict):
    rng = np.random.default_rng(3)
    worst, cases = 0.0, 0
    for c in CURVATURES:
        for dim, n in ((8, 4), (16, 16), (32, 8)):
            count = 834
            v = rng.normal(size=(count, dim)) * rng.uniform(0, 3, size=(count, 1)) / np.sqrt(c)
            r = cayley_block(rng.uniform(-2, 2, size=(dim // n, n, n)))
            lhs = ball.exp_map_origin(block_matvec(r, v), c)
            rhs = block_matvec(r, ball.exp_map_origin(v, c))
            worst = max(worst, float(np.max(_row_rel(lhs, rhs))))
            cases += count
    ok = cases >= 10_000 and worst <= 1e-10
    verdict(3, "exp commutation", ok, f"{cases} cases, max rel={worst:.2e}")


def test_c04_mobius_factorization(verdict):
    rng = np.random.default_rng(4)
    worst, cases = 0.0, 0
    for c in CURVATURES:
        for dim, b in ((8, 8), (8, 4), (16, 4), (32, 8)):
            count = 625
            x = _ball_points(rng, count, dim, c, max_u=0.95)
            blocks = 0.8 * np.eye(b) + 0.3 * rng.normal(size=(dim // b, b, b))
            m = block_diag_dense(blocks)
            lhs = ball.mobius_matvec(m, x, c)
            rhs = ball.exp_map_origin(ball.log_map_origin(x, c) @ m.T, c)
            worst = max(worst, float(np.max(_row_rel(lhs, rhs))))
            cases += count
    ok = cases >= 10_000 and worst <= 1e-9
    verdict(4, "Mobius factorization", ok, f"{cases} cases (dense and block S), max rel={worst:.2e}")


def test_c05_round_trip(verdict):
    rng = np.random.default_rng(5)
    norms = np.concatenate([[0.0, 1e-12, 1e-8, 1e-5], np.linspace(1e-3, 50, 400)])
    worst, clamped, finite = 0.0, 0, True
    for c in CURVATURES:
        v = rng.normal(size=(norms.size, 16))
        v *= (norms / np.linalg.norm(v, axis=1))[:, None]
        x = ball.exp_map_origin(v, c)
        back = ball.log_map_origin(x, c)
        finite &= bool(np.all(np.isfinite(back)))
        hit = np.linalg.norm(x, axis=1) >= ball.max_norm(c) * (1 - 1e-12)
        clamped += int(hit.sum())
        err = np.linalg.norm(back - v, axis=1) / (1 + norms)
        worst = max(worst, float(np.max(err[~hit])))
    ok = finite and worst <= 1e-6
    verdict(5, "exp/log round trip", ok, f"max err/(1+|v|)={worst:.2e}, {clamped} clamped cases finite={finite}")


def test_c06_gradient_checks(verdict):
    t0 = time.perf_counter()
    reports = gradcheck.check_all(20, seed=42)
    code = cli.main(["gradcheck", "--trials", "20"])
    elapsed = time.perf_counter() - t0
    worst = max(r.worst for r in reports)
    ops = sorted(r.op for r in reports)
    ok = all(r.passed and r.trials >= 20 for r in reports) and code == 0 and elapsed < 60
    verdict(6, "gradient checks", ok, f"ops={ops} worst rel={worst:.2e} exit={code} t={elapsed:.1f}s")


def test_c07_toy_alignment(verdict):
    cfg = toy.ToyTaskConfig()
    t0 = time.perf_counter()
    log = toy.train(cfg, 2000).log
    elapsed = time.perf_counter() - t0
    drift = max(toy.train(cfg, 2000, train_scaling=False).log.radius_drift)
    regression = (
        log.loss[-1] == pytest.approx(REF_FINAL_LOSS, rel=1e-6)
        and log.mean_angle[0] == pytest.approx(REF_INITIAL_ANGLE, rel=1e-9)
        and log.mean_angle[-1] == pytest.approx(REF_FINAL_ANGLE, rel=1e-6)
    )
    ok = (
        log.accuracy[-1] >= 0.95
        and log.mean_angle[-1] < log.mean_angle[0]
        and drift <= 1e-8
        and elapsed < 60
        and regression
    )
    verdict(
        7,
        "toy alignment",
        ok,
        f"acc={log.accuracy[-1]:.3f} angle {log.mean_angle[0]:.4f}->{log.mean_angle[-1]:.4f} "
        f"rotation-only drift={drift:.1e} regression={'ok' if regression else 'CHANGED'} t={elapsed:.1f}s",
    )


def test_c08_ablation_structure(verdict):
    base = toy.ToyTaskConfig()
    # radius mismatch and a large hidden rotation; diagonal S so scaling
    # cannot absorb the rotation on its own
    mixed = toy.ablate(
        replace(base, num_classes=32, samples_per_class=8, rotation_budget=2.0, noise=0.2, diagonal_scaling=True),
        2000,
    )
    rotation_free = toy.ablate(replace(base, rotation_budget=0.0), 2000)
    radius_matched = toy.ablate(replace(base, visual_radius=1.0), 2000)
    ok = (
        mixed["both"] == max(mixed.values())
        and mixed["both"] > mixed["neither"]
        and abs(rotation_free["radius-only"] - rotation_free["both"]) <= 0.02
        and abs(radius_matched["rotation-only"] - radius_matched["both"]) <= 0.02
    )
    verdict(8, "ablation structure", ok, f"mixed={mixed} rotation-free={rotation_free} radius-matched={radius_matched}")


def test_c09_cost_direction(verdict):
    rows, failures = bench.run([512], [128, 512], repeats=7)
    t = {r["block"]: r["seconds"] for r in rows}
    ok = not failures and t[128] < 0.5 * t[512]
    verdict(9, "block cost direction", ok, f"d=512 median n=128 {t[128] * 1e3:.2f} ms vs n=512 {t[512] * 1e3:.2f} ms")


def test_c10_serialization(verdict, tmp_path):
    params, a, b = tmp_path / "p.json", tmp_path / "a.json", tmp_path / "b.json"
    exported = cli.main(["export", "--random", "--dim", "32", "--block", "8", "--out", str(params), "--probe-out", str(a)])
    imported = cli.main(["import", str(params), "--probe-out", str(b)])
    identical = exported == 0 and imported == 0 and a.read_bytes() == b.read_bytes()
    text = params.read_text()
    bad = {"truncated": text[: len(text) // 3], "not json": "hello", "empty": ""}
    doc = json.loads(text)
    doc["format_version"] = 2
    bad["future version"] = json.dumps(doc)
    doc = json.loads(text)
    doc["rotation"]["theta_blocks"] = doc["rotation"]["theta_blocks"][:-1]
    bad["missing block"] = json.dumps(doc)
    codes = {}
    for name, content in bad.items():
        path = tmp_path / "bad.json"
        path.write_text(content)
        codes[name] = cli.main(["import", str(path)])
    ok = identical and all(code != 0 for code in codes.values())
    verdict(10, "serialization", ok, f"probe bit-identical={identical} malformed exits={codes}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-s", "-q"]))
