"""Command-line front end: eval, solve, stability, reproduce-example.

Exit codes: 0 success, 2 flag/schema validation, 3 evaluation failure,
4 verification disagreement beyond tolerance.  All numbers are written as
shortest round-trip decimals, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import __version__
from .delayed_ml import DelayedMLSpec, delay_index, delayed_ml, norm_bound, pure_delay_ml
from .errors import DomainError, EvalError, NonConvergenceError, SingularPointError
from .linear import make_grid, solve_full
from .nonlinear import (
    StabilityReport,
    contraction_constants,
    evaluate_fixed_point,
    picard_solve,
    weighted_norm,
)
from .oracle import direct_solve, to_log_coordinates
from .problemdoc import SchemaError, build_problem, load_document
from .problems import SemilinearProblem, Trajectory
from .rhs import RhsSyntaxError
from .special import gamma

_COMPUTE_ERRORS = (
    DomainError,
    EvalError,
    NonConvergenceError,
    SingularPointError,
    RhsSyntaxError,
    OverflowError,
)


def _fmt(x) -> str:
    return repr(float(x))


def _parse_matrix(text: str, flag: str) -> np.ndarray:
    try:
        m = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise SchemaError(f"{flag} is not a JSON matrix: {exc}") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SchemaError(f"{flag} must be a square matrix, got shape {m.shape}")
    return m


def _parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(":"))
    except ValueError as exc:
        raise SchemaError(f"--t-range must look like LO:HI, got {text!r}") from exc
    if not 0.0 < lo < hi:
        raise SchemaError(f"--t-range needs 0 < LO < HI, got {text!r}")
    return lo, hi


def _write_csv(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def cmd_eval(args) -> int:
    A0 = _parse_matrix(args.A0, "--A0")
    A1 = _parse_matrix(args.A1, "--A1")
    if A0.shape != A1.shape:
        raise SchemaError(f"--A0 and --A1 shapes differ: {A0.shape} vs {A1.shape}")
    lo, hi = _parse_range(args.t_range)
    spec = DelayedMLSpec(alpha=args.alpha, beta=args.beta, h=args.h, A0=A0, A1=A1)
    n = spec.n
    ts = np.linspace(lo, hi, args.points)
    header = ["t"] + [f"Y{i + 1}{j + 1}" for i in range(n) for j in range(n)] + ["branch"]
    if args.bound:
        header.append("bound")
    rows = []
    for t in ts:
        t = float(t)
        if args.pure_delay:
            Y = pure_delay_ml(spec, math.log(t))
            branch = delay_index(t, 1.0 / spec.h, spec.h)
        else:
            Y = delayed_ml(spec, t, args.s)
            branch = delay_index(t, args.s, spec.h)
        row = [_fmt(t)] + [_fmt(v) for v in Y.ravel()] + [str(branch)]
        if args.bound:
            row.append(_fmt(norm_bound(spec, t, 1.0 / spec.h if args.pure_delay else args.s)))
        rows.append(row)
    _write_csv(sys.stdout, header, rows)
    return 0


def _verify_report(problem, traj, args):
    lsp = to_log_coordinates(problem)
    otraj = direct_solve(lsp, args.verify_steps)
    stride = max(1, len(otraj.grid) // 160)
    idx = np.arange(4, len(otraj.grid), stride)
    ts = otraj.grid[idx]
    if isinstance(problem, SemilinearProblem):
        vals = evaluate_fixed_point(problem, traj, ts)
        gamma_w = problem.gamma_weight
    else:
        interp = None
        from .linear import evaluate_solution

        vals = evaluate_solution(problem, ts)
        gamma_w = 0.0
    diff = vals - otraj.values[idx]
    max_abs = float(np.max(np.abs(diff)))
    weighted = weighted_norm(Trajectory(grid=ts, values=diff, gamma_weight=gamma_w))
    return {
        "max_abs_err": max_abs,
        "weighted_err": weighted,
        "grid": {"points": int(len(ts)), "steps_per_lag": int(args.verify_steps)},
    }


def cmd_solve(args) -> int:
    doc = load_document(args.problem)
    problem = build_problem(doc)
    semilinear = isinstance(problem, SemilinearProblem)
    linear = problem.linear if semilinear else problem
    grid = make_grid(linear, per_interval=args.grid_per_interval)

    report = {}
    if semilinear:
        stability = contraction_constants(problem)
        if not stability.contraction:
            print(
                f"warning: contraction bound M1 = {stability.M1!r} >= 1; "
                "attempting Picard iteration anyway",
                file=sys.stderr,
            )
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj, history = picard_solve(problem, grid, tol=args.picard_tol)
        report["iterations"] = {
            "count": len(history),
            "update_norms": [float(x) for x in history],
        }
        report["stability"] = _stability_dict(stability)
    else:
        traj = solve_full(problem, grid)

    header = ["t"] + [f"y{i + 1}" for i in range(linear.n)] + ["branch"]
    rows = []
    for t, y in zip(traj.grid, traj.values):
        branch = delay_index(float(t), 1.0, linear.spec.h)
        rows.append([_fmt(t)] + [_fmt(v) for v in y] + [str(branch)])
    if args.output == "-":
        _write_csv(sys.stdout, header, rows)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            _write_csv(fh, header, rows)

    exit_code = 0
    if args.verify:
        report["verify"] = _verify_report(problem, traj, args)
        if report["verify"]["max_abs_err"] > args.verify_tol:
            print(
                f"verification failed: max_abs_err {report['verify']['max_abs_err']!r} "
                f"exceeds tolerance {args.verify_tol!r}",
                file=sys.stderr,
            )
            exit_code = 4
    if report:
        path = args.report
        if path is None and args.output != "-":
            path = args.output + ".report.json"
        text = json.dumps(report, indent=2)
        if path is None or path == "-":
            print(text, file=sys.stderr)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
    return exit_code


def _stability_dict(rep: StabilityReport) -> dict:
    return {
        "M1": rep.M1,
        "M2": rep.M2,
        "r": rep.r if math.isfinite(rep.r) else None,
        "V": rep.V if math.isfinite(rep.V) else None,
        "contraction": rep.contraction,
    }


def cmd_stability(args) -> int:
    doc = load_document(args.problem)
    problem = build_problem(doc)
    if not isinstance(problem, SemilinearProblem):
        problem = SemilinearProblem(
            linear=problem if not isinstance(problem, SemilinearProblem) else problem.linear,
            rhs=lambda t, y: np.zeros(len(doc["a"])),
            lipschitz=doc["lipschitz"]["L_f"],
            affine_bound=doc["lipschitz"]["L_2"],
            gamma_weight=doc["gamma"],
        )
    print(json.dumps(_stability_dict(contraction_constants(problem)), indent=2))
    return 0


def cmd_reproduce_example(args) -> int:
    alpha, h, l = 0.3, 1.2, 4
    A1 = np.array([[2.0, 1.0], [3.0, 5.0]])
    a = np.array([1.0, 2.0])
    spec = DelayedMLSpec(alpha=alpha, beta=alpha, h=h, A0=np.zeros((2, 2)), A1=A1)

    branches = [
        {
            "branch": -1,
            "t_interval": [None, _num(1.0 / h)],
            "terms": [],
        }
    ]
    power = np.eye(2)
    terms = []
    for j in range(l + 1):
        terms.append(
            {
                "matrix": "I" if j == 0 else f"A1^{j}",
                "matrix_entries": [[_num(v) for v in row] for row in power],
                "log_shift": j - 1,
                "exponent": round(j * alpha + alpha - 1.0, 12),
                "gamma_arg": round(j * alpha + alpha, 12),
                "gamma_value": _num(gamma(round(j * alpha + alpha, 12))),
            }
        )
        power = power @ A1
        branches.append(
            {
                "branch": j,
                "t_interval": [_num(h ** (j - 1)), _num(h**j)],
                "terms": list(terms),
            }
        )
    table = {
        "alpha": _num(alpha),
        "h": _num(h),
        "horizon_exponent": l,
        "T": _num(h**l),
        "A1": [[_num(v) for v in row] for row in A1],
        "a": [_num(v) for v in a],
        "branch_variable": "t",
        "term_form": "matrix * (ln t - log_shift * ln h)^exponent / Gamma(gamma_arg)",
        "branches": branches,
    }

    ts = [float(x) for x in args.t_points.split(",")]
    doc = {
        "alpha": alpha,
        "h": h,
        "l": l,
        "A0": [[0.0, 0.0], [0.0, 0.0]],
        "A1": A1.tolist(),
        "a": a.tolist(),
        "history": _example_history(args.phi_kind, a, alpha),
        "rhs": {"kind": "zero"},
    }
    problem = build_problem(doc)
    from .linear import evaluate_solution

    header = ["t"] + [f"E{i + 1}{j + 1}" for i in range(2) for j in range(2)]
    header += ["y1", "y2", "branch"]
    rows = []
    for t in ts:
        E = pure_delay_ml(spec, math.log(t))
        y = evaluate_solution(problem, [t])[0]
        rows.append(
            [_fmt(t)]
            + [_fmt(v) for v in E.ravel()]
            + [_fmt(v) for v in y]
            + [str(delay_index(t, 1.0 / h, h))]
        )

    prefix = args.output_prefix
    with open(prefix + ".branches.json", "w", encoding="utf-8") as fh:
        fh.write(json.dumps(table, indent=2) + "\n")
    with open(prefix + ".values.csv", "w", encoding="utf-8", newline="") as fh:
        _write_csv(fh, header, rows)
    print(f"wrote {prefix}.branches.json and {prefix}.values.csv")
    return 0


def _num(x: float) -> float:
    # round-trip float for JSON output
    return float(repr(float(x)))


def _example_history(kind: str, a: np.ndarray, alpha: float) -> dict:
    if kind == "power":
        coeff = a / gamma(alpha)
        return {"kind": "power", "params": {"coeff": coeff.tolist()}}
    return {"kind": "constant", "params": {"value": a.tolist()}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hadamard-delay",
        description=(
            "Delayed Mittag-Leffler matrix kernels with logarithm and solvers "
            "for Hadamard-type fractional time-delay systems"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="tabulate the delayed kernel on a t-range (CSV)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--A0", required=True, help="row-major JSON matrix")
    p.add_argument("--A1", required=True, help="row-major JSON matrix")
    p.add_argument("--s", type=float, default=1.0, help="second kernel argument")
    p.add_argument("--t-range", required=True, help="LO:HI")
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--pure-delay", action="store_true",
                   help="tabulate the pure-delay kernel (A0 ignored)")
    p.add_argument("--bound", action="store_true", help="append the scalar norm bound")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("solve", help="solve a problem document (CSV trajectory)")
    p.add_argument("problem", help="JSON problem document path")
    p.add_argument("--grid-per-interval", type=int, default=24)
    p.add_argument("--output", default="-", help="trajectory CSV path ('-' = stdout)")
    p.add_argument("--report", default=None, help="JSON report path")
    p.add_argument("--picard-tol", type=float, default=1e-10)
    p.add_argument("--verify", action="store_true",
                   help="cross-check against the direct product-integration solver")
    p.add_argument("--verify-steps", type=int, default=512)
    p.add_argument("--verify-tol", type=float, default=1e-3)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("stability", help="report contraction/stability constants (JSON)")
    p.add_argument("problem", help="JSON problem document path")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("reproduce-example",
                       help="emit the worked 2x2 pure-delay example (JSON + CSV)")
    p.add_argument("--t-points", default="1.1,1.3,1.6,2.0")
    p.add_argument("--phi-kind", choices=("power", "constant"), default="power")
    p.add_argument("--output-prefix", default="hadamard-example")
    p.set_defaults(func=cmd_reproduce_example)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _COMPUTE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
