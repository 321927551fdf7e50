"""Command-line interface, plan serialization, and CSV emitters.

Exit codes: 0 success, 2 usage or validation problems, 3 solver
non-convergence (the best iterate is still written, with a status field).
"""

import argparse
import json
import math
import sys

import numpy as np

from . import _lattice
from .backward import LagrangeConfig, Plan, effective_horizon
from .baselines import (efficiency_ratios, fss_exact, sprt_characteristics,
                        sprt_match)
from .evaluate import asn, characteristics, oc, quantile, simulate, stop_distribution
from .model import Hypotheses
from .solve import NonConvergenceError, SolveTarget, grid_sweep, solve_kw

SCHEMA_VERSION = "kw-plan/1"
DEFAULT_LEVELS = "0.1,0.05,0.025,0.01,0.005,0.001,0.0005"

_ACTION_CHARS = "CAR"
_CHAR_TO_CODE = {"C": 0, "A": 1, "R": 2}


class UsageError(ValueError):
    pass


class PlanFormatError(ValueError):
    pass


def fmt(x) -> str:
    """Six significant digits; small probabilities in scientific notation."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x != 0.0 and abs(x) < 1e-3:
        return f"{x:.6e}"
    return f"{x:.6g}"


# ---------------------------------------------------------------- documents

def plan_to_document(report) -> dict:
    plan = report.plan
    rows = []
    for n in range(1, plan.horizon + 1):
        off = _lattice.row_offset(n)
        rows.append("".join(_ACTION_CHARS[c]
                            for c in plan.actions[off:off + n + 1]))
    hyp = plan.config.hyp
    return {
        "schema_version": SCHEMA_VERSION,
        "status": report.status,
        "hypotheses": {"theta0": hyp.theta0, "theta1": hyp.theta1},
        "theta_star": report.theta_star,
        "lambda0": report.lambda0,
        "lambda1": report.lambda1,
        "horizon": plan.horizon,
        "effective_horizon": report.effective_horizon,
        "actions": rows,
        "characteristics": {
            "alpha": report.alpha_achieved,
            "beta": report.beta_achieved,
            "asn_at_star": report.asn_at_star,
            "q99": report.q99,
            "delta": report.delta,
            "lagrangian_value": plan.lagrangian_value,
        },
    }


def document_dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _need(doc, key, types, where="document"):
    if key not in doc:
        raise PlanFormatError(f"{where} is missing required field {key!r}")
    value = doc[key]
    if not isinstance(value, types):
        raise PlanFormatError(f"{where} field {key!r} has type "
                              f"{type(value).__name__}, expected "
                              f"{'/'.join(t.__name__ for t in types)}")
    return value


def parse_document(text: str) -> tuple[Plan, dict]:
    """Validate a serialized plan; problems name the offending field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PlanFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise PlanFormatError("top level must be a JSON object")
    version = _need(doc, "schema_version", (str,))
    if version != SCHEMA_VERSION:
        raise PlanFormatError(f"schema_version is {version!r}, "
                              f"expected {SCHEMA_VERSION!r}")
    hyp_doc = _need(doc, "hypotheses", (dict,))
    theta0 = _need(hyp_doc, "theta0", (int, float), "hypotheses")
    theta1 = _need(hyp_doc, "theta1", (int, float), "hypotheses")
    theta_star = _need(doc, "theta_star", (int, float))
    lambda0 = _need(doc, "lambda0", (int, float))
    lambda1 = _need(doc, "lambda1", (int, float))
    horizon = _need(doc, "horizon", (int,))
    if horizon < 1:
        raise PlanFormatError(f"horizon must be >= 1, got {horizon}")
    rows = _need(doc, "actions", (list,))
    if len(rows) != horizon:
        raise PlanFormatError(f"actions has {len(rows)} rows, "
                              f"expected horizon = {horizon}")
    try:
        hyp = Hypotheses(theta0, theta1)
        config = LagrangeConfig(hyp, theta_star, lambda0, lambda1)
    except ValueError as exc:
        raise PlanFormatError(str(exc)) from exc
    flat = np.empty(_lattice.table_size(horizon), dtype=np.int8)
    for i, row in enumerate(rows):
        n = i + 1
        if not isinstance(row, str) or len(row) != n + 1:
            raise PlanFormatError(f"actions row {n} must be a string of "
                                  f"{n + 1} characters")
        off = _lattice.row_offset(n)
        for s, ch in enumerate(row):
            code = _CHAR_TO_CODE.get(ch)
            if code is None:
                raise PlanFormatError(f"actions row {n} contains {ch!r}; "
                                      f"only 'C', 'A', 'R' are allowed")
            flat[off + s] = code
    last = flat[_lattice.row_offset(horizon):]
    if np.any(last == _lattice.CONTINUE):
        raise PlanFormatError(f"actions row {horizon} (the horizon) may not "
                              f"contain 'C'")
    chars = _need(doc, "characteristics", (dict,))
    lag = _need(chars, "lagrangian_value", (int, float), "characteristics")
    plan = Plan(config=config, horizon=horizon, actions=flat,
                lagrangian_value=float(lag))
    return plan, doc


# ---------------------------------------------------------------- commands

def _check_prob_flag(value, flag):
    if not 0.0 < value < 1.0:
        raise UsageError(f"{flag} must be in (0, 1), got {value}")


def _make_hyp(args) -> Hypotheses:
    _check_prob_flag(args.theta0, "--theta0")
    _check_prob_flag(args.theta1, "--theta1")
    if not args.theta0 < args.theta1:
        raise UsageError("--theta0 must be smaller than --theta1")
    return Hypotheses(args.theta0, args.theta1)


def cmd_solve(args, out=sys.stdout) -> int:
    hyp = _make_hyp(args)
    _check_prob_flag(args.alpha, "--alpha")
    _check_prob_flag(args.beta, "--beta")
    if args.rel_tol <= 0:
        raise UsageError(f"--rel-tol must be positive, got {args.rel_tol}")
    target = SolveTarget(hyp, args.alpha, args.beta, rel_tol=args.rel_tol)
    code = 0
    try:
        report = solve_kw(target, method=args.method)
    except NonConvergenceError as exc:
        report = exc.report
        code = 3
        print(f"warning: {exc}", file=sys.stderr)
    doc = plan_to_document(report)
    text = document_dumps(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    summary = (f"theta_star={fmt(report.theta_star)} "
               f"lambda0={fmt(report.lambda0)} lambda1={fmt(report.lambda1)} "
               f"H={report.effective_horizon} N={fmt(report.asn_at_star)} "
               f"delta={fmt(report.delta)} Q99={report.q99} "
               f"status={report.status}")
    print(summary, file=out if args.out else sys.stderr)
    return code


def cmd_eval(args, out=sys.stdout) -> int:
    try:
        with open(args.plan) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"--plan: cannot read {args.plan!r}: {exc}") from exc
    plan, _ = parse_document(text)
    thetas = []
    for part in args.theta.split(","):
        try:
            t = float(part)
        except ValueError as exc:
            raise UsageError(f"--theta: {part!r} is not a number") from exc
        _check_prob_flag(t, "--theta")
        thetas.append(t)
    if args.simulate is not None and args.simulate < 1:
        raise UsageError("--simulate must be a positive replication count")
    for t in thetas:
        line = f"theta={fmt(t)} oc={fmt(oc(plan, t))} asn={fmt(asn(plan, t))}"
        if args.simulate:
            sim = simulate(plan, t, args.simulate, args.seed)
            line += (f" oc_hat={fmt(sim.oc_hat)} oc_se={fmt(sim.oc_se)}"
                     f" asn_hat={fmt(sim.asn_hat)} asn_se={fmt(sim.asn_se)}")
        print(line, file=out)
    return 0


_TABLE_HEADER = ("level,theta_star,lambda0,lambda1,H,N_star,delta,Q99,"
                 "sprt_logA,sprt_logB,sprt_N,sprt_Q99,FSS,R,QR,R_W,QR_W")


def cmd_table(args, out=sys.stdout) -> int:
    hyp = _make_hyp(args)
    try:
        levels = [float(x) for x in args.levels.split(",")]
    except ValueError as exc:
        raise UsageError(f"--levels: {exc}") from exc
    for lv in levels:
        if not 0.0 < lv < 1.0:
            raise UsageError(f"--levels entries must be in (0, 1), got {lv}")
    symmetric = abs(hyp.theta0 + hyp.theta1 - 1.0) <= 1e-12
    if symmetric:
        print("note: symmetric hypotheses, no probability-ratio test matches "
              "the nominal levels; its columns are left empty", file=sys.stderr)
    print(_TABLE_HEADER, file=out)
    code = 0
    for level in levels:
        target = SolveTarget(hyp, level, level)
        try:
            report = solve_kw(target, method=args.method)
        except NonConvergenceError as exc:
            report = exc.report
            code = 3
            print(f"warning: level {level}: {exc}", file=sys.stderr)
        fss_n, _ = fss_exact(hyp, level, level)
        if symmetric:
            sprt_cols = ["", "", "", ""]
            ratios = efficiency_ratios(fss_n, report.asn_at_star, report.q99)
        else:
            match = sprt_match(hyp, level, level)
            chars = sprt_characteristics(match.design, report.theta_star)
            sprt_n = chars.asn_at[report.theta_star]
            ratios = efficiency_ratios(fss_n, report.asn_at_star, report.q99,
                                       sprt_asn=sprt_n,
                                       sprt_q99=chars.q99_at_star)
            sprt_cols = [fmt(match.design.log_b), fmt(match.design.log_a),
                         fmt(sprt_n), str(chars.q99_at_star)]
        row = [fmt(level), fmt(report.theta_star), fmt(report.lambda0),
               fmt(report.lambda1), str(report.effective_horizon),
               fmt(report.asn_at_star), fmt(report.delta), str(report.q99),
               *sprt_cols, str(fss_n), fmt(ratios.r_plan), fmt(ratios.qr_plan),
               "" if ratios.r_sprt is None else fmt(ratios.r_sprt),
               "" if ratios.qr_sprt is None else fmt(ratios.qr_sprt)]
        print(",".join(row), file=out)
    return code


_GRID_HEADER = ("ln_lambda0,ln_lambda1,alpha,beta,N_star,N_theta0,N_theta1,"
                "delta,FSS_approx,R,R0,R1")


def cmd_grid(args, out=sys.stdout) -> int:
    hyp = _make_hyp(args)
    if args.points < 2:
        raise UsageError(f"--points must be >= 2, got {args.points}")
    if not (0.0 < args.log_min < args.log_max):
        raise UsageError("--log-min/--log-max must satisfy 0 < min < max")
    if args.jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {args.jobs}")
    points = grid_sweep(hyp, log_lambda_range=(args.log_min, args.log_max),
                        points_per_axis=args.points, jobs=args.jobs)
    print(_GRID_HEADER, file=out)
    for p in points:
        row = [fmt(p.ln_lambda0), fmt(p.ln_lambda1), fmt(p.alpha), fmt(p.beta),
               fmt(p.asn_star), fmt(p.asn_theta0), fmt(p.asn_theta1),
               fmt(p.delta), fmt(p.fss_approx), fmt(p.r), fmt(p.r0), fmt(p.r1)]
        print(",".join(row), file=out)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kwseq",
        description="Minimax-optimal sequential sampling plans for Bernoulli "
                    "hypothesis tests, with exact sequential and fixed-sample "
                    "baselines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve for a plan matching nominal "
                                     "error probabilities")
    p.add_argument("--theta0", type=float, required=True)
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--method", choices=("option1", "option2"),
                   default="option1")
    p.add_argument("--rel-tol", type=float, default=0.001)
    p.add_argument("--out", default=None, metavar="FILE")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("eval", help="exact characteristics of a stored plan")
    p.add_argument("--plan", required=True, metavar="FILE")
    p.add_argument("--theta", required=True,
                   help="comma-separated evaluation points")
    p.add_argument("--simulate", type=int, default=None, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("table", help="CSV of solved plans and baselines over "
                                     "a list of error levels")
    p.add_argument("--theta0", type=float, required=True)
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--levels", default=DEFAULT_LEVELS)
    p.add_argument("--method", choices=("option1", "option2"),
                   default="option1")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("grid", help="CSV sweep over a log-multiplier grid")
    p.add_argument("--theta0", type=float, required=True)
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--log-min", type=float, default=6.0)
    p.add_argument("--log-max", type=float, default=13.0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, PlanFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
