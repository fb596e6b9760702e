"""Command-line front end.

Usage:
    curvestab trace    --input M.json --r0 1,1,1,2 --t-max 10 --out ex1
    curvestab classify --input M.json --samples 10 --seed 42 --out report.json
    curvestab compare  --input M.json --transform P.json --out bounds.json

Exit codes:
    0  success
    2  unreadable input, bad arguments or singular transform
    3  degenerate trajectory (zero velocity, curvature undefined)
    4  numeric overflow during propagation
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from .classify import (classify_limit, equivalence_factors, exponent_analysis,
                       predict_limit_symbolic, sample_initial_values,
                       spectral_stability, system_determinant, theorem_verdict)
from .curvature import DEFAULT_STEP, DEFAULT_T_MAX, sample_trace, uniform_grid
from .errors import (CurvestabError, EigenSolverError, ExpmOverflowError,
                     InputFormatError, SingularTransformError)
from .jordan import JordanSpec, materialize
from .linalg import random_orthogonal
from .serialize import (atomic_write, dumps, load_system, parse_vector, trace_csv,
                        trace_dict)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_OVERFLOW = 4
# slack when checking measured curvature ratios against the singular-value interval
COMPARE_SLACK = 1e-9

log = logging.getLogger("curvestab")


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _setup_logging() -> None:
    level = os.environ.get("CURVESTAB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _system(path):
    obj = load_system(path)
    if isinstance(obj, JordanSpec):
        return obj, materialize(obj)
    return None, obj


def _initial_values(args, n: int) -> np.ndarray:
    if args.r0:
        return parse_vector(args.r0, n)[None, :]
    if args.samples < 1:
        raise InputFormatError("--samples must be >= 1")
    return sample_initial_values(n, args.samples, args.seed)


def _grid(args) -> np.ndarray:
    if not args.t_max > 0 or not args.step > 0:
        raise InputFormatError("--t-max and --step must be positive")
    return uniform_grid(args.t_max, args.step)


def _trace(A, r0, grid, order):
    tr = sample_trace(A, r0, grid, order)
    if tr.diagnostic:
        raise _Exit(EXIT_OVERFLOW, f"numeric overflow: {tr.diagnostic}")
    return tr


def _output_path(out: str, ext: str, index: int | None = None) -> str:
    base = out[: -len(ext)] if out.endswith(ext) else out
    if index is not None:
        base = f"{base}_{index}"
    return base + ext


def cmd_trace(args) -> int:
    spec, A = _system(args.input)
    n = A.shape[0]
    if not 1 <= args.order <= max(n - 1, 1):
        raise InputFormatError(f"--order must lie in [1, {max(n - 1, 1)}]")
    grid = _grid(args)
    starts = _initial_values(args, n)
    traces = []
    for r0 in starts:
        tr = _trace(A, r0, grid, args.order)
        if np.all(tr.flags == "degenerate"):
            raise _Exit(EXIT_DEGENERATE, "constant-point trajectory: velocity is zero, "
                                         "curvature undefined")
        traces.append(tr)

    ext = ".csv" if args.format == "csv" else ".json"
    for k, tr in enumerate(traces):
        if args.format == "csv":
            text = trace_csv(tr, args.linear)
        else:
            text = dumps(dict(r0=starts[k], **trace_dict(tr, args.linear)))
        if args.out is None:
            sys.stdout.write(text)
        else:
            atomic_write(_output_path(args.out, ext, k if len(traces) > 1 else None), text)
    return EXIT_OK


def cmd_classify(args) -> int:
    spec, A = _system(args.input)
    n = A.shape[0]
    grid = _grid(args)
    starts = _initial_values(args, n)
    limits = []
    degenerate = 0
    for r0 in starts:
        tr = _trace(A, r0, grid, 1)
        degenerate += bool(np.all(tr.flags == "degenerate"))
        limits.append(classify_limit(tr))
    if degenerate == len(starts):
        raise _Exit(EXIT_DEGENERATE, "constant-point trajectory: velocity is zero, "
                                     "curvature undefined")

    oracle = spectral_stability(spec if spec is not None else A)
    verdict = theorem_verdict(spec if spec is not None else A, starts, limits, args.policy)
    report = {
        "spectral": {"verdict": oracle.tag, "basis": oracle.basis, **oracle.evidence},
        "symbolic": None,
        "curvature": {
            "verdict": verdict.tag,
            "basis": verdict.basis,
            "t_max": args.t_max,
            "step": args.step,
            "seed": args.seed,
            **verdict.evidence,
        },
        "exponents": None,
        "det": system_determinant(spec if spec is not None else A),
    }
    if spec is not None:
        report["symbolic"] = predict_limit_symbolic(spec).to_dict()
        report["exponents"] = exponent_analysis(spec).to_dict()

    text = dumps(report)
    if args.out:
        atomic_write(_output_path(args.out, ".json"), text)
    else:
        sys.stdout.write(text)
    summary = (f"spectral: {oracle.tag.value}\n"
               f"curvature: {verdict.tag.value} "
               f"({sum(lc.tag.value != 'TO_ZERO' for lc in limits)}/{len(limits)} non-vanishing)\n"
               f"det: {report['det']:.10g}\n")
    (sys.stderr if args.out is None else sys.stdout).write(summary)
    return EXIT_OK


def _transform(args, n: int) -> np.ndarray:
    if args.transform is None:
        raise InputFormatError("compare needs --transform (a matrix file or 'random')")
    if args.transform == "random":
        rng = np.random.default_rng(args.seed)
        s = np.exp(rng.uniform(0.0, math.log(10.0), n))
        return random_orthogonal(n, rng) @ np.diag(s) @ random_orthogonal(n, rng)
    P = load_system(args.transform)
    if isinstance(P, JordanSpec):
        P = materialize(P)
    if P.shape != (n, n):
        raise InputFormatError(f"transform is {P.shape[0]}x{P.shape[0]}, system is {n}x{n}")
    return P


def cmd_compare(args) -> int:
    spec, A = _system(args.input)
    n = A.shape[0]
    P = _transform(args, n)
    lo, hi = equivalence_factors(P, args.order)
    B = P @ A @ np.linalg.inv(P)
    grid = _grid(args)
    r0 = _initial_values(args, n)[0]
    tr_r = _trace(A, r0, grid, args.order)
    tr_v = _trace(B, P @ r0, grid, args.order)
    if np.all(tr_r.flags == "degenerate"):
        raise _Exit(EXIT_DEGENERATE, "constant-point trajectory: velocity is zero, "
                                     "curvature undefined")

    i = args.order - 1
    ok = np.isfinite(tr_r.log_kappa[:, i]) & np.isfinite(tr_v.log_kappa[:, i])
    log_ratio = tr_v.log_kappa[ok, i] - tr_r.log_kappa[ok, i]
    log_lo, log_hi = math.log(lo), math.log(hi)
    bad = (log_ratio < log_lo - COMPARE_SLACK) | (log_ratio > log_hi + COMPARE_SLACK)
    report = {
        "order": args.order,
        "interval": [lo, hi],
        "ratio_min": float(np.exp(log_ratio.min())) if log_ratio.size else None,
        "ratio_max": float(np.exp(log_ratio.max())) if log_ratio.size else None,
        "sampled_t": int(ok.sum()),
        "violations": int(bad.sum()),
        "violation_t": tr_r.times[ok][bad].tolist(),
        "r0": r0,
        "transform": P,
    }
    text = dumps(report)
    if args.out:
        atomic_write(_output_path(args.out, ".json"), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvestab",
                                     description="Curvature-based stability analysis of LTI systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True,
                        help="matrix (JSON rows or plain text) or JSON Jordan spec")
    common.add_argument("--r0", help="initial value, comma separated")
    common.add_argument("--samples", type=int, default=10,
                        help="random initial values when --r0 is absent (default 10)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--t-max", type=float, default=DEFAULT_T_MAX)
    common.add_argument("--step", type=float, default=DEFAULT_STEP)
    common.add_argument("--order", type=int, default=1, help="highest curvature index")
    common.add_argument("--out", help="output path or prefix (default: stdout)")

    p = sub.add_parser("trace", parents=[common], help="write a sampled curvature trace")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--linear", action="store_true",
                   help="emit kappa instead of ln kappa (saturates at 1e300)")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("classify", parents=[common], help="stability report")
    p.add_argument("--policy", choices=("all", "majority"), default="all")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("compare", parents=[common],
                       help="check curvature ratios under a similarity transform")
    p.add_argument("--transform", help="matrix file, or 'random' (seeded by --seed)")
    p.set_defaults(func=cmd_compare, samples=1)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Exit as exc:
        print(f"curvestab: {exc}", file=sys.stderr)
        return exc.code
    except (InputFormatError, SingularTransformError) as exc:
        print(f"curvestab: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ExpmOverflowError as exc:
        print(f"curvestab: numeric overflow: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except (EigenSolverError, CurvestabError) as exc:
        print(f"curvestab: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
