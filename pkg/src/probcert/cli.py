"""Command-line driver: verify, sweep, check."""

from __future__ import annotations

import argparse
import json
import sys

from .dual import Certificate
from .model import load_model
from .optimize import OptimizerConfig, optimize
from .oracles import grid_max_violation
from .specs import load_spec
from .sweep import SweepConfig, rows_to_csv, sweep, write_csv_atomic

EXIT_VERIFIED = 0
EXIT_ERROR = 1
EXIT_NOT_CERTIFIED = 2

DOMINANCE_SLACK = 1e-6
CONSISTENCY_TOL = 1e-9


def _optimizer_config(args) -> OptimizerConfig:
    base = {}
    if getattr(args, "opt_config", None):
        with open(args.opt_config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    merged = {
        "steps": args.steps if args.steps is not None else base.get("steps", 500),
        "step_size": args.lr if args.lr is not None else base.get("step_size", 0.05),
        "seed": args.seed if args.seed is not None else base.get("seed", 0),
        "finite_difference_check": base.get("finite_difference_check", False),
    }
    return OptimizerConfig(**merged)


def cmd_verify(args) -> int:
    try:
        model = load_model(args.model)
        problem = load_spec(args.spec, model)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    cert = optimize(problem, _optimizer_config(args))
    if args.out:
        cert.save(args.out)
    verdict = "verified" if cert.bound <= problem.epsilon else "not certified"
    print(f"bound={cert.bound:.6g} epsilon={problem.epsilon:.6g} -> {verdict}")
    return EXIT_VERIFIED if cert.bound <= problem.epsilon else EXIT_NOT_CERTIFIED


def cmd_sweep(args) -> int:
    try:
        model = load_model(args.model)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    config = SweepConfig(
        delta_start=args.delta_start,
        delta_end=args.delta_end,
        delta_step=args.delta_step,
        width=args.width,
        epsilon=args.epsilon,
        bracket=tuple(args.bracket) if args.bracket else None,
        search_iters=args.search_iters,
        warm_start=not args.no_warm_start,
        optimizer=_optimizer_config(args),
    )
    try:
        rows = sweep(model, args.property, config)
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = rows_to_csv(rows)
    if args.out:
        write_csv_atomic(text, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_VERIFIED


def run_check(problem, cert: Certificate, samples: int, grid: int, seed: int) -> dict:
    """Certificate dominance report against the independent oracles."""
    checks = {}
    recomputed = min(1.0, cert.erfc_term + cert.tail_term)
    checks["internal_consistency"] = bool(abs(cert.bound - recomputed) <= CONSISTENCY_TOL)
    oracles = {}
    if problem.network.z_dim == 1:
        qmax = grid_max_violation(problem, grid, method="quadrature")
        oracles["quadrature_max"] = qmax
        checks["dominates_quadrature"] = bool(cert.bound >= qmax - DOMINANCE_SLACK)
    est = grid_max_violation(problem, grid, method="mc", samples=samples, seed=seed)
    oracles["mc_max"] = {
        "point_estimate": est.point_estimate,
        "lower95": est.lower95,
        "upper95": est.upper95,
        "samples": est.samples,
    }
    checks["dominates_mc_lower95"] = bool(cert.bound >= est.lower95)
    return {
        "pass": all(checks.values()),
        "checks": checks,
        "certificate": cert.to_json(),
        "oracles": oracles,
        "params": {"samples": samples, "grid": grid, "seed": seed},
    }


def cmd_check(args) -> int:
    try:
        model = load_model(args.model)
        problem = load_spec(args.spec, model)
        if args.cert:
            cert = Certificate.load(args.cert)
        else:
            cert = optimize(problem, _optimizer_config(args))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    report = run_check(problem, cert, args.samples, args.grid, args.seed or 0)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    print("PASS" if report["pass"] else "FAIL")
    return EXIT_VERIFIED if report["pass"] else EXIT_NOT_CERTIFIED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="probcert",
        description="Certified violation-probability bounds for decoder networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_opt_flags(p):
        p.add_argument("--steps", type=int, default=None, help="optimizer steps (default 500)")
        p.add_argument("--lr", type=float, default=None, help="optimizer step size (default 0.05)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--opt-config", default=None, help="JSON file mirroring OptimizerConfig")

    p_verify = sub.add_parser("verify", help="certify one spec file against a model")
    p_verify.add_argument("--model", required=True)
    p_verify.add_argument("--spec", required=True)
    p_verify.add_argument("--out", default=None, help="certificate JSON output path")
    add_opt_flags(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="tightest certified thresholds over sliding intervals")
    p_sweep.add_argument("--model", required=True)
    p_sweep.add_argument("--property", required=True, choices=["upper", "lower"])
    p_sweep.add_argument("--epsilon", type=float, default=0.01)
    p_sweep.add_argument("--delta-start", type=float, default=0.0)
    p_sweep.add_argument("--delta-end", type=float, default=0.98)
    p_sweep.add_argument("--delta-step", type=float, default=0.02)
    p_sweep.add_argument("--width", type=float, default=0.02)
    p_sweep.add_argument("--search-iters", type=int, default=30)
    p_sweep.add_argument("--bracket", type=float, nargs=2, default=None)
    p_sweep.add_argument("--no-warm-start", action="store_true")
    p_sweep.add_argument("--out", default=None, help="CSV output path (stdout if omitted)")
    add_opt_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("check", help="cross-check a certificate against the oracles")
    p_check.add_argument("--model", required=True)
    p_check.add_argument("--spec", required=True)
    p_check.add_argument("--samples", type=int, default=100_000)
    p_check.add_argument("--grid", type=int, default=5)
    p_check.add_argument("--cert", default=None, help="replay an existing certificate file")
    p_check.add_argument("--out", default=None, help="report JSON output path")
    add_opt_flags(p_check)
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
