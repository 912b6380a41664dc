"""Command-line interface.

Exit codes: 0 success, 2 validation failure, 3 numeric failure, 4 usage error.

Model documents are JSON objects

    {"d": 2, "mu": [...], "gamma": [...], "sigma": [[...], [...]], "r_f": 0.0001,
     "law": {"family": "inverse_gamma", "params": {"alpha": 2.5, "beta": 2.5}}}

Mixing families and parameters: ``dirac {point}``, ``gamma {lam, b}``,
``inverse_gamma {alpha, beta}``, ``inverse_gaussian {a, b}``, ``gig {lam, a, b}``.
Utility specs: ``exponential {a}``, ``sahara {a, b, delta}``,
``henderson_hobson {tau}``, ``shortfall_power {q}``, ``truncated_linear {m}``,
``piecewise_linear {k1, k2}``.  Instead of a file, ``--model`` accepts the
built-in names ``skew-t-2020`` and ``gaussian-2020``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Optional, Sequence

import numpy as np

from . import concave_opt, exp_opt, oracle
from .datasets import ANNUAL_RF, BUILTIN_MODELS
from .errors import (DegenerateModelError, NmvmError, NumericalError, ParameterError,
                     UnsupportedModelError, UtilityRangeError, ValidationError)
from .market_model import NmvmModel
from .utility import Exponential, Sahara, Utility, certainty_equivalent, utility_from_dict

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- loading -------------------------------------------------------------------------

def _load_json(text_or_path: str) -> Any:
    src = text_or_path.strip()
    if not src.startswith(("{", "[")):
        try:
            with open(src) as fh:
                src = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {text_or_path}: {exc.strerror}") from exc
    try:
        return json.loads(src)
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid JSON in {text_or_path[:60]!r}: {exc}") from exc


def load_model(args) -> NmvmModel:
    if args.model is None:
        raise UsageError("--model is required")
    if args.periods_per_year <= 0:
        raise UsageError("--periods-per-year must be positive")
    if args.model in BUILTIN_MODELS:
        annual = ANNUAL_RF if args.annual_rf is None else args.annual_rf
        return BUILTIN_MODELS[args.model](periods_per_year=args.periods_per_year,
                                          annual_rf=annual)
    doc = _load_json(args.model)
    if not isinstance(doc, dict):
        raise UsageError("model document must be a JSON object")
    model = NmvmModel.from_dict(doc)
    if args.annual_rf is not None:
        model = model.with_rate(args.annual_rf / args.periods_per_year)
    return model


def load_utility(args, required: bool = True) -> Optional[Utility]:
    if args.utility is None:
        if required:
            raise UsageError("--utility is required")
        return None
    doc = _load_json(args.utility)
    if not isinstance(doc, dict):
        raise UsageError("utility spec must be a JSON object")
    return utility_from_dict(doc)


def _gamma_cfg(args) -> concave_opt.GammaEvalConfig:
    return concave_opt.GammaEvalConfig(method=args.gamma_method, n_samples=args.mc_samples,
                                       seed=args.seed)


# -- output ----------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.8g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return "" if v is None else str(v)


def render(payload: dict, fmt: str, rows: Optional[list[dict]] = None) -> str:
    """JSON for reports; ``rows`` (a list of flat records) drives csv and table output."""
    if fmt == "json":
        return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if rows is None:
        rows = [{"field": k, "value": v} for k, v in sorted(_jsonable(payload).items())]
    cols = list(rows[0].keys()) if rows else []
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else _fmt(r[c]) for c in cols])
        return buf.getvalue()
    cells = [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(wd) for c, wd in zip(cols, widths)),
             "  ".join("-" * wd for wd in widths)]
    lines += ["  ".join(v.ljust(wd) for v, wd in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _notice(msg: str) -> None:
    sys.stderr.write(f"notice: {msg}\n")


# -- subcommands -------------------------------------------------------------------------

def cmd_stats(args) -> int:
    try:
        names, data = oracle.read_returns_csv(args.returns)
    except OSError as exc:
        raise UsageError(f"cannot read {args.returns}: {exc.strerror}") from exc
    except ParameterError as exc:
        if "no data rows" in str(exc):
            raise UsageError(str(exc)) from exc
        raise
    st = oracle.descriptive_stats(data, names)
    rows = st.rows()
    emit(args, render({"assets": rows}, args.format, rows))
    return EXIT_OK


def _optimize_payload(args, model: NmvmModel, u: Utility) -> dict[str, Any]:
    route = args.route or ("closed" if isinstance(u, Exponential) else "gamma")
    if route == "closed":
        if not isinstance(u, Exponential):
            raise UsageError("--route closed is only available for exponential utility")
        sol = exp_opt.global_optimal(model, u.a, args.w0)
        weights = sol.weights
        out = {"route": "closed", "q_min": sol.q_min, "expected_utility": sol.expected_utility,
               "certainty_equivalent": certainty_equivalent(u, sol.expected_utility)}
    else:
        csol = concave_opt.optimal_portfolio(model, u, args.w0, _gamma_cfg(args))
        weights = csol.weights
        out = {"route": "gamma", "c_star": csol.c_star, "expected_utility": csol.expected_utility,
               "certainty_equivalent": csol.certainty_equivalent}
    risky = float(np.sum(weights))
    out.update(weights=weights, lambda_u=risky, risk_free_fraction=1.0 - risky,
               utility=u.to_dict(), w0=args.w0)
    try:
        out["tangent_skew"] = concave_opt.tangent_skew(model)
    except (UnsupportedModelError, DegenerateModelError) as exc:
        out["tangent_skew"] = None
        _notice(str(exc))
    if args.verify:
        rep = oracle.mc_expected_utility(model, u, args.w0, weights, args.mc_samples, args.seed)
        out["mc"] = rep.to_dict()
    return out


def cmd_optimize(args) -> int:
    model, u = load_model(args), load_utility(args)
    out = _optimize_payload(args, model, u)
    emit(args, render(out, args.format))
    return EXIT_OK


def cmd_tangent(args) -> int:
    model = load_model(args)
    out: dict[str, Any] = {"tangent_skew": concave_opt.tangent_skew(model)}
    t_mv, notice = concave_opt.nmvm_tangent_mv(model)
    out["tangent_mv"] = t_mv
    out["tangent_mv_notice"] = notice
    if notice:
        _notice(notice)
    if args.format == "json":
        emit(args, render(out, "json"))
    else:
        rows = [{"asset": i + 1, "tangent_skew": float(out["tangent_skew"][i]),
                 "tangent_mv": None if t_mv is None else float(t_mv[i])} for i in range(model.d)]
        emit(args, render(out, args.format, rows))
    return EXIT_OK


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc
    if not vals:
        raise UsageError("empty list")
    return vals


def cmd_lambda_table(args) -> int:
    model = load_model(args)
    a_list, b_list = _float_list(args.a_list), _float_list(args.b_list)
    cfg = _gamma_cfg(args)
    grid = [[concave_opt.optimal_portfolio(model, Sahara(a, b, args.delta), args.w0, cfg).lambda_u
             for b in b_list] for a in a_list]
    payload = {"a": a_list, "b": b_list, "delta": args.delta, "lambda_u": grid}
    rows = [dict({"a": a}, **{f"b={b:g}": grid[i][j] for j, b in enumerate(b_list)})
            for i, a in enumerate(a_list)]
    emit(args, render(payload, args.format, rows))
    return EXIT_OK


def cmd_frontier(args) -> int:
    model = load_model(args)
    u = load_utility(args, required=False)
    rows, notice = concave_opt.frontier(model, args.w0, args.n_points, (0.0, args.c_max))
    if notice:
        _notice(notice + "; the mv branch is omitted")
    if u is not None:
        try:
            sol = concave_opt.optimal_portfolio(model, u, args.w0, _gamma_cfg(args))
        except DegenerateModelError as exc:
            _notice(f"optimal portfolio row omitted: {exc}")
        else:
            rows.append(concave_opt.frontier_point(model, args.w0, sol.weights))
    recs = [{"kind": r.kind, "c": r.c, "std": r.std, "mean": r.mean} for r in rows]
    emit(args, render({"rows": recs, "notice": notice}, args.format, recs))
    return EXIT_OK


def cmd_short_sales(args) -> int:
    model, u = load_model(args), load_utility(args)
    if not isinstance(u, Exponential):
        raise UsageError("short-sales needs an exponential utility spec")
    sol = exp_opt.short_sales_optimal(model, u.a, args.w0)
    out = sol.to_dict()
    out["support"] = [i for i in range(model.d) if i not in sol.active_set]
    out["unconstrained_feasible"] = not sol.active_set
    emit(args, render(out, args.format))
    return EXIT_OK


def cmd_verify(args) -> int:
    model, u = load_model(args), load_utility(args)
    args.verify = False
    out = _optimize_payload(args, model, u)
    weights = np.asarray(out["weights"])
    rep = oracle.mc_expected_utility(model, u, args.w0, weights, args.mc_samples, args.seed)
    out["mc"] = rep.to_dict()
    delta = rep.estimate - out["expected_utility"]
    out["mc_z_score"] = delta / rep.std_error if rep.std_error > 0 else (0.0 if delta == 0 else math.inf)
    if args.search_samples > 0:
        res = oracle.random_search_optimal(model, u, args.w0, weights, args.search_samples,
                                           args.seed, mc_samples=min(args.mc_samples, 10_000))
        out["search"] = {"weights": res.weights, "mc": res.report.to_dict(),
                         "distance": float(np.linalg.norm(res.weights - weights))}
    emit(args, render(out, args.format))
    return EXIT_OK


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model JSON path, inline JSON or built-in name")
    common.add_argument("--utility", help="utility spec as inline JSON or a path")
    common.add_argument("--w0", type=float, default=1.0, help="initial wealth")
    common.add_argument("--annual-rf", type=float, default=None,
                        help="annual risk-free rate; overrides the model's per-period rate")
    common.add_argument("--periods-per-year", type=float, default=252,
                        help="divisor turning the annual rate into a per-period rate")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--mc-samples", type=int, default=1_000_000)
    common.add_argument("--route", choices=("closed", "gamma"), default=None)
    common.add_argument("--gamma-method", choices=("quadrature", "monte_carlo"),
                        default="quadrature")
    common.add_argument("--verify", action="store_true", help="attach a Monte-Carlo check")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "table"), default=None,
                        help="output format (json; csv for frontier)")

    p = _Parser(prog="nmvm", description="Expected-utility portfolios under NMVM returns.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("stats", parents=[common], help="descriptive statistics of a returns CSV",
                       description="Mean, sample variance, skewness and raw (non-excess) "
                                   "kurtosis per column; the first CSV column is ignored.")
    s.add_argument("returns")
    s.set_defaults(func=cmd_stats)

    sub.add_parser("optimize", parents=[common], help="optimal portfolio").set_defaults(
        func=cmd_optimize)
    sub.add_parser("tangent", parents=[common], help="tangent portfolios").set_defaults(
        func=cmd_tangent)

    s = sub.add_parser("lambda-table", parents=[common], help="SAHARA lambda grid")
    s.add_argument("--a-list", default="1.5,2,2.5,3,3.5")
    s.add_argument("--b-list", default="0.5,1,1.5,2,2.5")
    s.add_argument("--delta", type=float, default=0.0)
    s.set_defaults(func=cmd_lambda_table)

    s = sub.add_parser("frontier", parents=[common], help="frontier CSV")
    s.add_argument("--n-points", type=int, default=50)
    s.add_argument("--c-max", type=float, default=0.05,
                   help="largest excess mean on the grid (per period)")
    # a parent-parser default would leak into every subcommand, so keep it separate
    s.set_defaults(func=cmd_frontier, default_format="csv")

    sub.add_parser("short-sales", parents=[common], help="no-short-sales optimum").set_defaults(
        func=cmd_short_sales)

    s = sub.add_parser("verify", parents=[common], help="Monte-Carlo check of the optimum")
    s.add_argument("--search-samples", type=int, default=0,
                   help="also run a random search with this many candidates")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.format is None:
        args.format = getattr(args, "default_format", "json")
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"nmvm: usage error: {exc}\n")
        return EXIT_USAGE
    except (ValidationError, ParameterError) as exc:
        sys.stderr.write(f"nmvm: validation failed: {exc}\n")
        return EXIT_VALIDATION
    except (NumericalError, DegenerateModelError, UnsupportedModelError, UtilityRangeError) as exc:
        sys.stderr.write(f"nmvm: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except NmvmError as exc:
        sys.stderr.write(f"nmvm: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
