"""Command-line front end.

Exit codes: 0 success, 2 invalid input or arguments, 3 runtime failure
(including ``solve``/``endpoint`` non-convergence under ``--strict``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from .certifier import DEFAULT_B_GRID, CertifyConfig, certify
from .datadep import DATADEP_CLASSES, class_constants_from_report, verify_data_dependence
from .geometry import FiniteSet, delta_distance, hausdorff
from .mappings import load_mapping
from .solver import IterationConfig, endpoint_iterate, krasnoselskii_iterate, solve_gornicki
from .transform import resolve_lambda

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3


class _Invalid(Exception):
    pass


def dumps(obj: Any) -> str:
    """Canonical JSON used for every report: sorted keys, two-space indent."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _iteration_config(args: argparse.Namespace) -> IterationConfig:
    return IterationConfig(mu=args.mu, eps=args.eps, max_iter=args.max_iter, seed=args.seed)


def _add_common(p: argparse.ArgumentParser, mapping: bool = True) -> None:
    if mapping:
        p.add_argument("--mapping", required=True, help="mapping JSON file or builtin:<name>")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=10_000)
    p.add_argument("--mu", type=float, default=1.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="fail with exit 3 unless the run converged")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvfix", description="Fixed points of multivalued mappings.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="estimate contractive-class constants on the sampled domain")
    _add_common(p)
    p.add_argument("--b-grid", type=_floats, default=list(DEFAULT_B_GRID))
    p.add_argument("--pairs-cap", type=int, default=20_000)
    p.add_argument("--crr-step", type=float, default=0.01)

    p = sub.add_parser("solve", help="run a fixed-point iteration")
    _add_common(p)
    p.add_argument("--method", choices=("krasnoselskii", "gornicki"), default="krasnoselskii")
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--b", type=float, help="enrichment constant; lambda = 1/(b+1)")
    p.add_argument("--descent-a", type=float, default=0.5)
    p.add_argument("--descent-b", type=float, default=1.0)
    p.add_argument("--csv", help="write the per-iteration trace CSV here")

    p = sub.add_parser("endpoint", help="run the end-point (delta residual) descent")
    _add_common(p)
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--descent-a", type=float, default=0.5)
    p.add_argument("--descent-b", type=float, default=1.0)
    p.add_argument("--csv", help="write the per-iteration trace CSV here")

    p = sub.add_parser("datadep", help="verify the fixed-set displacement bound for a perturbed mapping")
    _add_common(p)
    p.add_argument("--perturbed", required=True, help="mapping JSON of the perturbation S")
    p.add_argument("--class", dest="cls", choices=DATADEP_CLASSES, required=True)
    for name in ("theta", "a", "b", "c", "M"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--auto-certify", action="store_true", help="take the class constants from certify")
    p.add_argument("--b-grid", type=_floats, default=list(DEFAULT_B_GRID))
    p.add_argument("--pairs-cap", type=int, default=20_000)
    p.add_argument("--fixed-eps", type=float, default=1e-6)
    p.add_argument("--symmetric", action="store_true", help="S is in the class too; also check H(F(S), F(T))")

    p = sub.add_parser("hausdorff", help="print H(A, B) and delta(A, B) for two point-set JSON files")
    p.add_argument("set_a")
    p.add_argument("set_b")
    return parser


# each command splits into validation (-> exit 2) and a runner (-> exit 3)


def _prep_certify(args: argparse.Namespace) -> Callable[[], int]:
    T = load_mapping(args.mapping)
    config = CertifyConfig(b_grid=tuple(args.b_grid), pairs_cap=args.pairs_cap, seed=args.seed, crr_step=args.crr_step)

    def run() -> int:
        _emit(dumps(certify(T, config).to_dict()), args.out)
        return EXIT_OK

    return run


def _finish_trace(trace, args: argparse.Namespace, extra: dict[str, Any]) -> int:
    summary = {
        "method": trace.method,
        "verdict": trace.verdict,
        "message": trace.message,
        "n_steps": trace.n_steps,
        "final": trace.final.tolist(),
        "final_residual": trace.residuals[-1],
        "constants": trace.constants,
        "config": {"eps": args.eps, "max_iter": args.max_iter, "mu": args.mu, "seed": args.seed},
        **extra,
    }
    if args.csv:
        Path(args.csv).write_text(trace.to_csv())
    _emit(dumps(summary), args.out)
    if args.strict and not trace.converged:
        print(f"mvfix: run ended with verdict {trace.verdict}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _prep_solve(args: argparse.Namespace) -> Callable[[], int]:
    T = load_mapping(args.mapping)
    cfg = _iteration_config(args)
    if len(args.x0) != T.dim:
        raise _Invalid(f"--x0 has {len(args.x0)} coordinates, mapping dimension is {T.dim}")
    if args.method == "krasnoselskii":
        lam = resolve_lambda(args.lam, args.b)

        def run() -> int:
            return _finish_trace(krasnoselskii_iterate(T, lam, args.x0, cfg), args, {"lambda": lam})

    else:
        if not 0.0 <= args.descent_a < 1.0 or args.descent_b < 0.0:
            raise _Invalid("need 0 <= --descent-a < 1 and --descent-b >= 0")

        def run() -> int:
            return _finish_trace(solve_gornicki(T, args.x0, args.descent_a, args.descent_b, cfg), args, {})

    return run


def _prep_endpoint(args: argparse.Namespace) -> Callable[[], int]:
    T = load_mapping(args.mapping)
    cfg = _iteration_config(args)
    if len(args.x0) != T.dim:
        raise _Invalid(f"--x0 has {len(args.x0)} coordinates, mapping dimension is {T.dim}")
    if not 0.0 <= args.descent_a < 1.0 or args.descent_b < 0.0:
        raise _Invalid("need 0 <= --descent-a < 1 and --descent-b >= 0")

    def run() -> int:
        trace = endpoint_iterate(T, args.x0, cfg, a=args.descent_a, b=args.descent_b)
        return _finish_trace(trace, args, {})

    return run


_CLASS_FLAGS = {
    "enriched-kannan": ("b", "theta"),
    "enriched-chatterjea": ("b", "theta"),
    "enriched-crr": ("a", "b", "c"),
    "gornicki": ("M", "a", "b"),
}


def _prep_datadep(args: argparse.Namespace) -> Callable[[], int]:
    T = load_mapping(args.mapping)
    S = load_mapping(args.perturbed)
    cfg = _iteration_config(args)
    if not args.fixed_eps > 0:
        raise _Invalid("--fixed-eps must be positive")
    if args.auto_certify:
        cert_cfg = CertifyConfig(b_grid=tuple(args.b_grid), pairs_cap=args.pairs_cap, seed=args.seed)
        constants = None
    else:
        names = _CLASS_FLAGS[args.cls]
        missing = [n for n in names if getattr(args, n) is None]
        if missing:
            raise _Invalid(f"class {args.cls} needs --{' --'.join(missing)} (or --auto-certify)")
        constants = {n: getattr(args, n) for n in names}

    def run() -> int:
        consts = constants if constants is not None else class_constants_from_report(T, args.cls, cert_cfg)
        report = verify_data_dependence(T, S, args.cls, consts, cfg, fixed_eps=args.fixed_eps, symmetric=args.symmetric)
        _emit(dumps(report.to_dict()), args.out)
        print(
            f"holds={str(report.holds).lower()} bound={report.bound!r} observed={report.observed_sup!r}",
            file=sys.stderr,
        )
        if args.strict and not report.holds:
            return EXIT_RUNTIME
        return EXIT_OK

    return run


def _prep_hausdorff(args: argparse.Namespace) -> Callable[[], int]:
    A = FiniteSet.from_json(Path(args.set_a).read_text())
    B = FiniteSet.from_json(Path(args.set_b).read_text())
    if A.dim != B.dim:
        raise _Invalid("point sets have different dimensions")

    def run() -> int:
        print(f"{hausdorff(A, B)!r} {delta_distance(A, B)!r}")
        return EXIT_OK

    return run


_COMMANDS = {
    "certify": _prep_certify,
    "solve": _prep_solve,
    "endpoint": _prep_endpoint,
    "datadep": _prep_datadep,
    "hausdorff": _prep_hausdorff,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        run = _COMMANDS[args.command](args)
    except (_Invalid, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"mvfix {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        return run()
    except Exception as exc:  # noqa: BLE001 - mapped onto the exit-code contract
        print(f"mvfix {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
