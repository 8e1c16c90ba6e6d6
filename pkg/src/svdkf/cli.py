"""Batch command-line front end.

Four subcommands: ``simulate`` writes a trajectory CSV, ``run`` emits a
Monte-Carlo comparison report (CSV or JSON), ``sweep`` emits the
ill-conditioning table, and ``loglik`` prints the innovation
log-likelihood.  Every command is deterministic given its flags.

Exit codes: 0 success (recorded filter failures included -- they are
data, not process errors), 2 usage/input error, 1 internal error.
"""

import argparse
import json
import math
import sys

import numpy as np

from .bench import DEFAULT_DELTAS, FILTER_ORDER, RunConfig, monte_carlo, sweep
from .errors import SvdkfError
from .filters import loglik_conventional, loglik_svd, make_filter
from .model import resolve_model, simulate

_SWEEP_TOKENS = {"NaN": "NaN", "Inf": "Inf", "FactorizationFailure": "FAIL"}


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    """CSV cell: 6 significant digits, NaN/Inf as literal tokens."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    return f"{x:.6g}"


def _write_lines(path, lines):
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _parse_filters(raw: str):
    if raw.strip() == "all":
        return FILTER_ORDER
    names = tuple(t.strip().replace("-", "_")
                  for t in raw.split(",") if t.strip())
    if not names:
        raise UsageError("empty filter list")
    for name in names:
        if name not in FILTER_ORDER:
            raise UsageError(f"unknown filter {name!r}")
    return names


def _parse_deltas(raw: str):
    """Comma list of deltas, or range shorthand like 1e-1..1e-14."""
    raw = raw.strip()
    if ".." in raw:
        lo_s, hi_s = raw.split("..", 1)
        try:
            lo, hi = float(lo_s), float(hi_s)
        except ValueError as exc:
            raise UsageError(f"malformed delta range {raw!r}") from exc
        if not (0 < hi <= lo <= 1):
            raise UsageError("delta range must run from larger to smaller")
        e_lo = round(math.log10(lo))
        e_hi = round(math.log10(hi))
        return tuple(10.0**e for e in range(e_lo, e_hi - 1, -1))
    try:
        deltas = tuple(float(t) for t in raw.split(",") if t.strip())
    except ValueError as exc:
        raise UsageError(f"malformed delta list {raw!r}") from exc
    if not deltas or any(d <= 0 for d in deltas):
        raise UsageError("deltas must be a non-empty list of positive reals")
    return deltas


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    model = resolve_model(args.model)
    traj = simulate(model, args.steps, seed=args.seed)
    n, m, d = model.n, model.m, model.d
    header = (["k"] + [f"x_{i+1}" for i in range(n)]
              + [f"z_{i+1}" for i in range(m)]
              + [f"u_{i+1}" for i in range(d)])
    lines = [",".join(header)]
    for k in range(args.steps):
        row = ([str(k + 1)]
               + [f"{v:.17g}" for v in traj.states[k]]
               + [f"{v:.17g}" for v in traj.measurements[k]]
               + [f"{v:.17g}" for v in traj.controls[k]])
        lines.append(",".join(row))
    _write_lines(args.out, lines)
    return 0


def cmd_run(args) -> int:
    model = resolve_model(args.model)
    names = _parse_filters(args.filters)
    cfg = RunConfig(model=model, filters=names, runs=args.runs,
                    horizon=args.steps, base_seed=args.seed)
    report = monte_carlo(cfg)
    n = model.n
    if args.format == "json":
        doc = {"model": args.model, "runs": args.runs, "steps": args.steps,
               "seed": args.seed, "filters": {}}
        for name in names:
            out = report.outcomes[name]
            doc["filters"][name] = {
                "rmse": [None if math.isnan(v) else v
                         for v in out.errors.rmse],
                "mre_percent": [None if math.isnan(v) else v
                                for v in out.errors.mre_percent],
                "rmse_norm": (None if math.isnan(out.errors.rmse_norm)
                              else out.errors.rmse_norm),
                "failed_runs": out.failed_runs,
                "mean_cpu_s": out.mean_cpu_s,
            }
        text = json.dumps(doc, indent=2)
        _write_lines(args.out, [text])
        return 0
    header = (["filter"] + [f"rmse_x{i+1}" for i in range(n)]
              + [f"mre_x{i+1}_pct" for i in range(n)] + ["mean_cpu_s"])
    lines = [",".join(header)]
    for name in names:
        out = report.outcomes[name]
        cells = [name]
        cells += [_fmt(v) for v in out.errors.rmse]
        cells += ["" if math.isnan(v) else _fmt(v)
                  for v in out.errors.mre_percent]
        cells.append(_fmt(out.mean_cpu_s))
        lines.append(",".join(cells))
    _write_lines(args.out, lines)
    return 0


def cmd_sweep(args) -> int:
    deltas = (_parse_deltas(args.deltas) if args.deltas
              else DEFAULT_DELTAS)
    names = _parse_filters(args.filters)
    cfg = RunConfig(model=resolve_model("example2:0.1"), filters=names,
                    runs=args.runs, horizon=args.steps, base_seed=args.seed)
    report = sweep(deltas, cfg)
    lines = [",".join(["filter"] + [f"{d:.6g}" for d in deltas])]
    for name in names:
        cells = [name]
        for d in deltas:
            v = report.cell(d, name)
            cells.append(_fmt(v) if isinstance(v, float)
                         else _SWEEP_TOKENS.get(v, "FAIL"))
        lines.append(",".join(cells))
    _write_lines(args.out, lines)
    return 0


def cmd_loglik(args) -> int:
    model = resolve_model(args.model)
    name = args.filter.replace("-", "_")
    if args.method == "svd" and name != "svd_kf":
        raise UsageError("--method svd requires --filter svd-kf")
    traj = simulate(model, args.steps, seed=args.seed)
    flt = make_filter(name, model)
    reports = []
    for k in range(args.steps):
        rep = flt.step(traj.measurements[k], traj.controls[k])
        if rep is None:
            raise UsageError(
                f"{name} failed at step {flt.failure.step} "
                f"({flt.failure.cause}); log-likelihood undefined")
        reports.append(rep)
    value = (loglik_svd(reports) if args.method == "svd"
             else loglik_conventional(reports))
    if not math.isfinite(value):
        raise UsageError("log-likelihood is not finite (singular R_e?)")
    print(f"{value:.12g}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svdkf",
                     description="Factored-form Kalman filter toolbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write one simulated trajectory")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="Monte-Carlo filter comparison")
    p.add_argument("--model", required=True)
    p.add_argument("--filters", default="all")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="ill-conditioning delta sweep")
    p.add_argument("--deltas", default=None,
                   help='comma list or range, e.g. "1e-1..1e-14"')
    p.add_argument("--filters", default="all")
    p.add_argument("--runs", type=int, default=500)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("loglik", help="innovation log-likelihood")
    p.add_argument("--model", required=True)
    p.add_argument("--filter", default="svd-kf")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("conventional", "svd"),
                   default="svd")
    p.set_defaults(func=cmd_loglik)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (UsageError, SvdkfError, OSError) as exc:
        print(f"svdkf: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal errors
        print(f"svdkf: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
