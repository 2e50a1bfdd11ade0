"""Command-line front end.

Exit codes: 0 success, 1 validation or usage error, 2 invariant or tolerance
failure, 3 training divergence.
"""

import argparse
import json
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import bench, gradcheck, invariants, toy
from .errors import ConfigError, DivergenceError, FormatError, HyroError
from .optim import DEFAULT_LR
from .pipeline import HyroParams, hyro_forward

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_DIVERGED = 0, 1, 2, 3

PATH_DESTS = {"report", "log_csv", "log_json", "params_out", "out", "probe_out"}

PROBE_SEED = 0
PROBE_ROWS = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add(p, suppress, *flags, default=None, **kw):
    if not suppress:
        kw["default"] = default
    p.add_argument(*flags, **kw)


def _model_flags(p, s, dim=8, block=4):
    _add(p, s, "--dim", type=int, default=dim, help="embedding dimension d")
    _add(p, s, "--block", type=int, default=block, help="rotation block size n")
    _add(p, s, "--curvature", type=float, default=0.01, help="ball curvature magnitude c")
    _add(p, s, "--seed", type=int, default=42, help="random seed")


def _toy_flags(p, s):
    d = toy.ToyTaskConfig()
    _model_flags(p, s, d.dim, d.block)
    _add(p, s, "--scale-block", type=int, default=d.scale_block, help="scaling block size b")
    _add(p, s, "--num-classes", type=int, default=d.num_classes)
    _add(p, s, "--samples-per-class", type=int, default=d.samples_per_class)
    _add(p, s, "--visual-radius", type=float, default=d.visual_radius, help="radius mismatch factor of the visual rows")
    _add(p, s, "--rotation-budget", type=float, default=d.rotation_budget, help="largest hidden rotation angle (rad)")
    _add(p, s, "--noise", type=float, default=d.noise, help="gaussian noise scale")
    _add(p, s, "--temperature", type=float, default=d.temperature, help="softmax temperature")
    _add(p, s, "--lr", type=float, default=DEFAULT_LR, help="AdamW learning rate")
    _add(p, s, "--weight-decay", type=float, default=d.weight_decay)
    _add(p, s, "--symmetric", action="store_true", default=False, help="also train a textual-stream transform")
    _add(p, s, "--diagonal-scaling", action="store_true", default=False, help="restrict S blocks to their diagonal")
    _add(p, s, "--steps", type=int, default=2000, help="number of optimizer steps")


def build_parser(suppress=False):
    """``suppress=True`` drops all defaults; used to see which flags were typed."""
    s = suppress
    kw = {"argument_default": argparse.SUPPRESS} if s else {}
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="hyro", description="Hyperbolic radius scaling and rotation toolkit.", **kw)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=fmt, **kw)
        _add(p, s, "--config", type=Path, default=None, help="JSON file of flag values (flags win)")
        return p

    p = command("verify", "run the invariant suite")
    _model_flags(p, s)

    p = command("gradcheck", "compare every VJP against central finite differences")
    _model_flags(p, s)
    _add(p, s, "--trials", type=int, default=20)
    _add(p, s, "--step", type=float, default=gradcheck.DEFAULT_STEP, help="finite-difference step")
    _add(p, s, "--tolerance", type=float, default=gradcheck.DEFAULT_TOLERANCE, help="relative error tolerance")
    _add(p, s, "--report", type=Path, default=None, help="write a JSON report here")

    p = command("train", "train the synthetic alignment task")
    _toy_flags(p, s)
    _add(p, s, "--freeze-rotation", action="store_true", default=False)
    _add(p, s, "--freeze-scaling", action="store_true", default=False)
    _add(p, s, "--log-csv", type=Path, default=None)
    _add(p, s, "--log-json", type=Path, default=None)
    _add(p, s, "--params-out", type=Path, default=None)
    _add(p, s, "--ablate", action="store_true", default=False, help="print the four-way ablation table instead")

    p = command("ablate", "four-way radius/rotation ablation (same as train --ablate)")
    _toy_flags(p, s)

    p = command("bench", "time block vs full Cayley materialization")
    _add(p, s, "--dims", type=int, nargs="+", default=[512])
    _add(p, s, "--blocks", type=int, nargs="+", default=[128, 512])
    _add(p, s, "--repeats", type=int, default=5)

    p = command("export", "write a parameter file (identity or seeded random)")
    _model_flags(p, s)
    _add(p, s, "--scale-block", type=int, default=None, help="scaling block size b (defaults to --block)")
    _add(p, s, "--random", action="store_true", default=False, help="draw random theta and S from --seed")
    _add(p, s, "--out", type=Path, default=Path("hyro_params.json"))
    _add(p, s, "--probe-out", type=Path, default=None, help="write forward outputs on the probe batch")

    p = command("import", "validate a parameter file and run the probe batch through it")
    p.add_argument("path", type=Path)
    _add(p, s, "--probe-out", type=Path, default=None)
    return parser


def parse(argv):
    args = build_parser().parse_args(argv)
    explicit = vars(build_parser(suppress=True).parse_args(argv))
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in doc.items():
            dest = key.replace("-", "_")
            if dest in ("command", "config") or not hasattr(args, dest):
                raise ConfigError(f"unknown config key {key!r} for '{args.command}'")
            if dest not in explicit:
                setattr(args, dest, Path(value) if dest in PATH_DESTS and value is not None else value)
    return args


def _validate_model(args):
    if not (isinstance(args.curvature, (int, float)) and math.isfinite(args.curvature) and args.curvature > 0):
        raise ConfigError(f"curvature must be positive, got {args.curvature}")
    for name in ("dim", "block"):
        if getattr(args, name) < 1:
            raise ConfigError(f"--{name} must be positive")
    if args.dim % args.block:
        raise ConfigError(f"dim {args.dim} is not divisible by block size {args.block}")
    sb = getattr(args, "scale_block", None)
    if sb is not None and (sb < 1 or args.dim % sb):
        raise ConfigError(f"dim {args.dim} is not divisible by scale block size {sb}")


def _toy_config(args):
    names = {f.name for f in fields(toy.ToyTaskConfig)}
    cfg = toy.ToyTaskConfig(**{k: v for k, v in vars(args).items() if k in names})
    cfg.validate()
    if args.steps < 0:
        raise ConfigError("--steps must be non-negative")
    return cfg


def _probe(dim):
    return np.random.default_rng(PROBE_SEED).normal(size=(PROBE_ROWS, dim))


def _write_probe(params, path):
    doc = {"format_version": 1, "probe_seed": PROBE_SEED, "outputs": hyro_forward(params, _probe(params.dim)).tolist()}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def cmd_verify(args):
    _validate_model(args)
    results = invariants.run_all(args.seed, dim=args.dim, block=args.block, curvature=args.curvature)
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name:<32} worst={detail:.3e}")
    failed = [name for name, passed, _ in results if not passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_gradcheck(args):
    _validate_model(args)
    if args.trials < 1 or not args.step > 0 or not args.tolerance > 0:
        raise ConfigError("--trials, --step and --tolerance must be positive")
    reports = gradcheck.check_all(
        args.trials, args.seed, dim=args.dim, block=args.block, curvature=args.curvature,
        step=args.step, tolerance=args.tolerance,
    )
    boundary_ok = gradcheck.probe_near_boundary(seed=args.seed, dim=args.dim, block=args.block,
                                                curvature=args.curvature)
    print(gradcheck.format_table(reports))
    print(f"near-boundary gradients finite: {'PASS' if boundary_ok else 'FAIL'}")
    passed = boundary_ok and all(r.passed for r in reports)
    if args.report is not None:
        doc = {
            "format_version": 1,
            "seed": args.seed,
            "dim": args.dim,
            "block": args.block,
            "curvature": args.curvature,
            "reports": [r.to_dict() for r in reports],
            "near_boundary_finite": boundary_ok,
            "passed": passed,
        }
        args.report.write_text(json.dumps(doc, indent=1) + "\n")
    return EXIT_OK if passed else EXIT_FAILED


def cmd_train(args):
    if args.ablate:
        return cmd_ablate(args)
    cfg = _toy_config(args)
    try:
        result = toy.train(cfg, args.steps, train_rotation=not args.freeze_rotation,
                           train_scaling=not args.freeze_scaling)
    except DivergenceError as exc:
        last = exc.log.step[-1] if exc.log is not None and len(exc.log) else None
        print(f"diverged: {exc} (last good step: {last})", file=sys.stderr)
        if exc.log is not None and args.log_csv is not None:
            args.log_csv.write_text(exc.log.to_csv())
        return EXIT_DIVERGED
    log = result.log
    if args.log_csv is not None:
        args.log_csv.write_text(log.to_csv())
    if args.log_json is not None:
        args.log_json.write_text(log.to_json())
    if args.params_out is not None:
        result.visual_params.save(args.params_out)
    print(f"steps={args.steps} loss={log.loss[-1]:.6g} accuracy={log.accuracy[-1]:.4f} "
          f"mean_angle={log.mean_angle[0]:.4f}->{log.mean_angle[-1]:.4f} "
          f"max_radius_drift={max(log.radius_drift):.3e}")
    return EXIT_OK


def cmd_ablate(args):
    cfg = _toy_config(args)
    print(toy.format_ablation(toy.ablate(cfg, args.steps)))
    return EXIT_OK


def cmd_bench(args):
    if args.repeats < 1:
        raise ConfigError("--repeats must be at least 1")
    if any(v < 1 for v in list(args.dims) + list(args.blocks)):
        raise ConfigError("--dims and --blocks must be positive")
    rows, failures = bench.run(args.dims, args.blocks, args.repeats)
    print(bench.format_rows(rows))
    if failures:
        print(f"block n=d/4 not faster than n=d at d={failures}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_export(args):
    _validate_model(args)
    params = HyroParams.identity(args.dim, args.block, args.scale_block, args.curvature)
    if args.random:
        rng = np.random.default_rng(args.seed)
        rot, sca = params.rotation, params.scaling
        rot.theta = rng.uniform(-1, 1, size=rot.theta.shape)
        sca.blocks = sca.blocks + 0.3 * rng.normal(size=sca.blocks.shape)
    params.save(args.out)
    if args.probe_out is not None:
        _write_probe(params, args.probe_out)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_import(args):
    try:
        params = HyroParams.load(args.path)
    except OSError as exc:
        raise FormatError(f"cannot read {args.path}: {exc}") from None
    if args.probe_out is not None:
        _write_probe(params, args.probe_out)
    print(f"loaded {args.path}: dim={params.dim} curvature={params.curvature} "
          f"rotation blocks={params.rotation.num_blocks}x{params.rotation.block_size} "
          f"scaling blocks={params.scaling.num_blocks}x{params.scaling.block_size}")
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "gradcheck": cmd_gradcheck,
    "train": cmd_train,
    "ablate": cmd_ablate,
    "bench": cmd_bench,
    "export": cmd_export,
    "import": cmd_import,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
    except SystemExit as exc:
        return exc.code
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HyroError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
