"""``bridgefactor`` command-line front end.

Exit status: 0 on success, 2 for bad flags or inputs, 1 for failures during
computation.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .bridge import BridgeRuleError, bridge_linear_fit, bridge_m, bridge_value
from .curves import CurveTable
from .mathcore import DomainError, make_rng

SEED_ENV = "BRIDGEFACTOR_SEED"


class FlagError(Exception):
    """Invalid flag value; carries the flag name."""

    def __init__(self, flag: str, msg: str):
        super().__init__(f"{flag}: {msg}")
        self.flag = flag


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise FlagError(self.prog, message)


def parse_grid(text: str, kind: Callable = float) -> list:
    """``LO:HI:STEP`` (inclusive) or a comma list; a single value is a one-point grid."""
    text = text.strip()
    if not text:
        raise ValueError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected LO:HI:STEP, got {text!r}")
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi < lo:
            raise ValueError(f"grid {text!r} needs STEP > 0 and HI >= LO")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        vals = [round(lo + i * step, 12) for i in range(count)]
    else:
        vals = [float(p) for p in text.split(",") if p.strip()]
        if not vals:
            raise ValueError("empty grid")
    if kind is int:
        if any(v != int(v) for v in vals):
            raise ValueError(f"grid {text!r} must contain integers")
        return [int(v) for v in vals]
    return vals


def _grid(args, flag: str, text: str, kind=float) -> list:
    try:
        return parse_grid(text, kind)
    except ValueError as exc:
        raise FlagError(flag, str(exc)) from None


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise FlagError(SEED_ENV, f"not an integer: {raw!r}") from None


def _n_grid(args) -> list[int]:
    if args.n_grid:
        return _grid(args, "--n-grid", args.n_grid, int)
    if args.step <= 0 or args.n_max < args.n_min:
        raise FlagError("--step", "need --step > 0 and --n-max >= --n-min")
    return list(range(args.n_min, args.n_max + 1, args.step))


def _emit(table: CurveTable, args) -> None:
    text = table.to_json() if args.format == "json" else table.to_csv()
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _case(text: str) -> str:
    return text.replace("-", "_")


# ---------------------------------------------------------------------------
# subcommands


def cmd_bridge(args) -> None:
    try:
        value = bridge_value(args.n, args.k)
        m = bridge_m(args.n, args.k, min_train=args.min_train)
    except (BridgeRuleError, DomainError) as exc:
        raise FlagError("--n/--k", str(exc)) from None
    print(m)
    print(f"value {value:.17g}")


def cmd_bridge_fit(args) -> None:
    if args.step <= 0 or args.nmax < args.nmin:
        raise FlagError("--step", "need --step > 0 and --nmax >= --nmin")
    grid = list(range(args.nmin, args.nmax + 1, args.step))
    try:
        intercept, slope = bridge_linear_fit(grid)
    except (BridgeRuleError, DomainError) as exc:
        raise FlagError("--nmin", str(exc)) from None
    print(f"intercept {intercept:.17g}")
    print(f"slope {slope:.17g}")


def _experiment_config(args, case: str):
    from .simlab import ExperimentConfig, validate_grid

    try:
        cfg = ExperimentConfig(
            case=case, n_grid=_n_grid(args), reps=args.reps, splits=args.splits, trim=args.trim,
            seed=args.seed, theta=args.theta, theta0=args.theta0, sigma=args.sigma,
            beta=getattr(args, "beta", 0.2), beta0=getattr(args, "beta0", 0.2),
            mu1=getattr(args, "mu1", 0.0), mu2=getattr(args, "mu2", 0.0),
            cap=args.cap, threads=args.threads,
        )
        validate_grid(cfg)
    except (DomainError, BridgeRuleError, ValueError) as exc:
        raise FlagError("--case/grid", str(exc)) from None
    return cfg


def cmd_consistency(args) -> None:
    from .simlab import run_consistency

    _emit(run_consistency(_experiment_config(args, _case(args.case))), args)


def cmd_criteria(args) -> None:
    from .simlab import run_criteria_compare

    _emit(run_criteria_compare(_experiment_config(args, _case(args.case))), args)


def cmd_roc(args) -> None:
    from .simlab import run_roc

    m_grid = _grid(args, "--m-grid", args.m_grid, int)
    if any(not 1 <= m <= args.n - 1 for m in m_grid):
        raise FlagError("--m-grid", f"values must lie in [1, {args.n - 1}]")
    if args.reps < 1:
        raise FlagError("--reps", "must be >= 1")
    cv, gi, table = run_roc(n=args.n, m_grid=m_grid, reps=args.reps, seed=args.seed, theta0=args.theta0,
                            theta1=args.theta1, sigma=args.sigma, splits=args.splits, threads=args.threads)
    print(f"AUC CVBF {cv.auc:.6f}  AUC cGIBF {gi.auc:.6f}", file=sys.stderr)
    _emit(table, args)


def cmd_exp_sweep(args) -> None:
    from .exponential_case import exp_sweep

    grid = _grid(args, "--beta-grid", args.beta_grid)
    if any(b <= 0 for b in grid):
        raise FlagError("--beta-grid", "rates must be positive")
    if args.reps < 1 or args.n < 4:
        raise FlagError("--reps/--n", "need --reps >= 1 and --n >= 4")
    table = exp_sweep(grid, n=args.n, reps=args.reps, seed=args.seed, beta0=args.beta0, splits=args.splits)
    print(f"null-favoring interval CVBF {table.meta['cvbf_null_interval']}  "
          f"cGIBF {table.meta['cgibf_null_interval']}", file=sys.stderr)
    _emit(table, args)


def cmd_concrete(args) -> None:
    from .concrete import (
        bundled_synthetic_path,
        concrete_cvbf,
        fit_ols,
        load_concrete,
        residual_table,
    )

    if args.data:
        path, header = Path(args.data), args.has_header
    else:
        path, header = bundled_synthetic_path(), True
        print(f"no --data given; using bundled synthetic clone {path.name}", file=sys.stderr)
    try:
        records = load_concrete(path, header)
    except (OSError, DomainError) as exc:
        raise FlagError("--data", str(exc)) from None
    m_grid = _grid(args, "--m-grid", args.m_grid, int)
    n = len(records)
    if any(not 12 <= m <= n - 12 for m in m_grid):
        raise FlagError("--m-grid", f"training sizes must lie in [12, {n - 12}] for {n} records")
    if args.splits < 1:
        raise FlagError("--splits", "must be >= 1")
    print(f"{n} records; bridge m (K=2) = {bridge_m(n, 2)}", file=sys.stderr)
    table = concrete_cvbf(records, m_grid, args.splits, make_rng(args.seed), args.beta_mode, args.threads)
    table.config.update({"data": str(path), "seed": args.seed})
    table.meta["bridge_m"] = bridge_m(n, 2)
    _emit(table, args)
    if args.residuals_out:
        res = residual_table(fit_ols(records))
        res.config["data"] = str(path)
        res.write(args.residuals_out, args.format)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bridgefactor", description="Cross-validation and intrinsic Bayes factors.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        if seed:
            sp.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or 0)")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    def n_grid(sp, reps=1000):
        sp.add_argument("--n-min", type=int, default=5)
        sp.add_argument("--n-max", type=int, default=500)
        sp.add_argument("--step", type=int, default=5)
        sp.add_argument("--n-grid", help="explicit grid, LO:HI:STEP or comma list (overrides --n-min/--n-max/--step)")
        sp.add_argument("--reps", type=int, default=reps)
        sp.add_argument("--splits", type=int, default=50, help="random CVBF splits per replicate")
        sp.add_argument("--trim", type=float, default=0.05)
        sp.add_argument("--cap", type=int, default=100_000, help="exhaustive enumeration limit")
        sp.add_argument("--theta", type=float, default=0.0, help="sampling mean")
        sp.add_argument("--theta0", type=float, default=0.0, help="null mean (known sigma)")
        sp.add_argument("--sigma", type=float, default=1.0)

    b = sub.add_parser("bridge", help="Bridge Rule training size")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=float, default=1)
    b.add_argument("--min-train", type=int, default=None)
    b.set_defaults(func=cmd_bridge)

    bf = sub.add_parser("bridge-fit", help="linear fit of N/ln N over a grid")
    bf.add_argument("--nmin", type=int, default=5)
    bf.add_argument("--nmax", type=int, default=500)
    bf.add_argument("--step", type=int, default=5)
    bf.set_defaults(func=cmd_bridge_fit)

    c = sub.add_parser("consistency", help="log BF curves over sample size")
    c.add_argument("--case", choices=("normal-known", "normal-two", "normal-unknown", "exponential"),
                   default="normal-known")
    n_grid(c)
    c.add_argument("--beta", type=float, default=0.2)
    c.add_argument("--beta0", type=float, default=0.2)
    c.add_argument("--mu1", type=float, default=0.0)
    c.add_argument("--mu2", type=float, default=0.0)
    common(c)
    c.set_defaults(func=cmd_consistency)

    r = sub.add_parser("roc", help="ROC/AUC over training sizes (known sigma)")
    r.add_argument("--n", type=int, default=100)
    r.add_argument("--m-grid", default="5:95:5")
    r.add_argument("--reps", type=int, default=1000)
    r.add_argument("--splits", type=int, default=1)
    r.add_argument("--theta0", type=float, default=0.0)
    r.add_argument("--theta1", type=float, default=0.25)
    r.add_argument("--sigma", type=float, default=1.0)
    common(r)
    r.set_defaults(func=cmd_roc)

    e = sub.add_parser("exp-sweep", help="exponential log BF means across sampling rates")
    e.add_argument("--beta-grid", default="0.1:0.4:0.005")
    e.add_argument("--n", type=int, default=100)
    e.add_argument("--reps", type=int, default=100)
    e.add_argument("--splits", type=int, default=50)
    e.add_argument("--beta0", type=float, default=0.2)
    common(e)
    e.set_defaults(func=cmd_exp_sweep)

    k = sub.add_parser("criteria", help="CVBF/GIBF against the BIC family")
    k.add_argument("--case", choices=("normal-known", "normal-unknown"), default="normal-known")
    n_grid(k, reps=200)
    common(k)
    k.set_defaults(func=cmd_criteria)

    q = sub.add_parser("concrete", help="error-variance model comparison on the concrete data")
    q.add_argument("--data", help="CSV with x1..x8,y (default: bundled synthetic clone)")
    q.add_argument("--has-header", action="store_true")
    q.add_argument("--m-grid", default="50,100,200,300,400,500,600")
    q.add_argument("--splits", type=int, default=200)
    q.add_argument("--beta-mode", choices=("per-split", "global"), default="per-split")
    q.add_argument("--residuals-out", help="also write the residual-vs-fitted table here")
    common(q)
    q.set_defaults(func=cmd_concrete)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if getattr(args, "seed", 0) < 0:
            raise FlagError("--seed", "must be a nonnegative integer")
        if getattr(args, "threads", 1) < 1:
            raise FlagError("--threads", "must be >= 1")
        args.func(args)
    except FlagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
