"""Monte-Carlo experiments: consistency curves, ROC/AUC over training sizes,
and the criteria comparison.

Every replicate draws from its own stream keyed by grid point, hypothesis
and replicate index, so results do not depend on the worker count or on the
order in which grid points finish.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bridge import BridgeRuleError, bridge_m
from .criteria import all_criteria
from .curves import CurveTable
from .exponential_case import ExpHyp, exp_cgibf_batch, exp_cvbf_plan, exp_expectations
from .mathcore import DomainError, make_rng
from .normal_cases import (
    GIBF_RANDOM_PAIRS,
    NormalKnownHyp,
    TwoMeanHyp,
    nk_cgibf_batch,
    nk_cvbf_plan,
    nk_expectations,
    nu_cvbf_plan,
    nu_ibf_pairs,
    nu_null_expectations,
    nu_pair_plan,
    tm_cibf_sample,
    tm_cvbf_plan,
    tm_expectations,
    two_group_labels,
)
from .splitkit import DEFAULT_CAP, DEFAULT_TRIM, SplitPlan, make_splits, trimmed_mean

CASES = ("normal_known", "normal_two", "normal_unknown", "exponential")
# parameter count K and minimum CVBF training size per case
_RULE = {
    "normal_known": (1, 1),
    "normal_two": (2, 2),
    "normal_unknown": (2, 4),
    "exponential": (1, 2),
}


@dataclass
class ExperimentConfig:
    case: str = "normal_known"
    n_grid: Sequence[int] = field(default_factory=lambda: list(range(5, 501, 5)))
    reps: int = 1000
    splits: int = 50
    trim: float = DEFAULT_TRIM
    seed: int = 0
    theta: float = 0.0
    theta0: float = 0.0
    sigma: float = 1.0
    beta: float = 0.2
    beta0: float = 0.2
    mu1: float = 0.0
    mu2: float = 0.0
    cap: int = DEFAULT_CAP
    gibf_pairs: int = GIBF_RANDOM_PAIRS
    threads: int = 1

    def __post_init__(self):
        self.n_grid = [int(n) for n in self.n_grid]
        if self.case not in CASES:
            raise DomainError(f"unknown case {self.case!r}; expected one of {CASES}")
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        if self.splits < 1:
            raise DomainError("splits must be >= 1")
        if not self.n_grid:
            raise DomainError("n grid is empty")
        if not (0 <= self.trim < 0.5) or self.reps - 2 * math.floor(self.trim * self.reps) < 1:
            raise DomainError(f"trim fraction {self.trim} is infeasible for {self.reps} replicates")

    def record(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d


def training_size(case: str, n: int) -> int:
    """Bridge-rule CVBF training size for ``case`` at sample size ``n``."""
    K, floor = _RULE[case]
    m = bridge_m(n, K, min_train=floor)
    if m >= n:
        raise BridgeRuleError(f"n={n} leaves no validation data for case {case}")
    return m


def validate_grid(cfg: ExperimentConfig) -> dict[int, int]:
    plan_m = {}
    bad = []
    for n in cfg.n_grid:
        try:
            if cfg.case == "normal_two" and n % 2:
                raise DomainError("odd n")
            if cfg.case == "normal_unknown" and n < 4:
                raise DomainError("n < 4")
            plan_m[n] = training_size(cfg.case, n)
        except (BridgeRuleError, DomainError) as exc:
            bad.append(f"{n} ({exc})")
    if bad:
        raise DomainError(f"grid values invalid for case {cfg.case}: " + "; ".join(bad))
    return plan_m


def _cv_plan(n: int, m: int, cfg: ExperimentConfig, rng, cache: dict) -> SplitPlan:
    if math.comb(n, m) <= cfg.cap:
        key = (n, m)
        if key not in cache:
            cache[key] = make_splits(n, m, "exhaustive", cap=cfg.cap)
        return cache[key]
    return make_splits(n, m, "random", cfg.splits, rng, cap=cfg.cap)


def _pairs(n: int, cfg: ExperimentConfig, rng, cache: dict) -> SplitPlan:
    if math.comb(n, 2) <= cfg.cap:
        key = ("pairs", n)
        if key not in cache:
            cache[key] = nu_pair_plan(n, cap=cfg.cap)
        return cache[key]
    return nu_pair_plan(n, rng, cfg.cap, cfg.gibf_pairs)


def _summ(values: np.ndarray, trim: float) -> dict[str, float]:
    q1, med, q3 = np.quantile(values, [0.25, 0.5, 0.75])
    se = float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return {
        "mean": float(values.mean()),
        "se": se,
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "trimmed": trimmed_mean(values, trim),
    }


def _draw(case: str, cfg: ExperimentConfig, rng, n: int) -> np.ndarray:
    if case in ("normal_known", "normal_unknown"):
        return rng.normal(cfg.theta, cfg.sigma, n)
    if case == "normal_two":
        return np.concatenate([rng.normal(cfg.mu1, cfg.sigma, n // 2), rng.normal(cfg.mu2, cfg.sigma, n // 2)])
    return rng.exponential(1.0 / cfg.beta, n)


def replicate_values(cfg: ExperimentConfig, n: int, m: int, cache: dict | None = None):
    """log CVBF and log (c)GIBF for every replicate at sample size ``n``."""
    cache = {} if cache is None else cache
    cv = np.empty(cfg.reps)
    gi = np.empty(cfg.reps)
    nk = NormalKnownHyp(cfg.theta0, cfg.sigma)
    eh = ExpHyp(cfg.beta0, cfg.beta)
    th = TwoMeanHyp(cfg.mu1, cfg.mu2, cfg.sigma)
    groups = two_group_labels(n) if cfg.case == "normal_two" else None
    for r in range(cfg.reps):
        rng = make_rng(cfg.seed, n, r)
        x = _draw(cfg.case, cfg, rng, n)
        plan = _cv_plan(n, m, cfg, rng, cache)
        if cfg.case == "normal_known":
            cv[r] = nk_cvbf_plan(x, nk, plan).mean()
            gi[r] = nk_cgibf_batch(x[None, :], nk)[0]
        elif cfg.case == "normal_two":
            g = groups[plan.train]
            keep = g.any(axis=1) & ~g.all(axis=1)
            sub = SplitPlan(n, m, plan.train[keep], plan.valid[keep], plan.mode)
            cv[r] = tm_cvbf_plan(x, groups, sub, cfg.sigma).mean()
            gi[r] = tm_cibf_sample(rng, n, 2, th)
        elif cfg.case == "normal_unknown":
            cv[r] = nu_cvbf_plan(x, plan).mean()
            pairs = _pairs(n, cfg, rng, cache)
            vals = nu_ibf_pairs(x, pairs.train)
            gi[r] = vals[np.isfinite(vals)].mean()
        else:
            cv[r] = exp_cvbf_plan(x, eh, plan).mean()
            gi[r] = exp_cgibf_batch(x[None, :], eh)[0]
    return cv, gi


def analytic_overlay(cfg: ExperimentConfig, n: int, m: int) -> tuple[float, float]:
    """(E log CVBF, E log GIBF) where closed forms exist, else nan."""
    if cfg.case == "normal_known":
        e = nk_expectations(n, m, cfg.theta, NormalKnownHyp(cfg.theta0, cfg.sigma))
        return e.E_log_cvbf, e.E_log_cgibf
    if cfg.case == "normal_two":
        e = tm_expectations(n, m, TwoMeanHyp(cfg.mu1, cfg.mu2, cfg.sigma))
        return e.E_log_cvbf, e.E_log_cibf
    if cfg.case == "normal_unknown":
        if cfg.theta != 0 or m <= 3:
            return math.nan, math.nan
        e = nu_null_expectations(n, m)
        return e.E_log_cvbf_M0, e.E_log_ibf_M0
    if m < 2:
        return math.nan, math.nan
    e = exp_expectations(n, m, ExpHyp(cfg.beta0, cfg.beta))
    return e.E_log_cvbf_M1, e.E_log_cgibf_M1


CONSISTENCY_COLUMNS = ["n", "m"] + [
    f"{method}_{stat}"
    for method in ("cvbf", "gibf")
    for stat in ("mean", "se", "q1", "median", "q3", "trimmed")
] + ["E_log_cvbf", "E_log_gibf"]


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_consistency(cfg: ExperimentConfig) -> CurveTable:
    """Per-n replicate summaries of log CVBF (bridge-rule m) and log GIBF.

    GIBF is the corrected GIBF on single training points (known sigma,
    exponential), the pair GIBF (unknown sigma) or the chi-square sampler of
    the corrected IBF (two means).
    """
    plan_m = validate_grid(cfg)
    cache: dict = {}

    def row(n: int) -> dict:
        m = plan_m[n]
        cv, gi = replicate_values(cfg, n, m, cache)
        e_cv, e_gi = analytic_overlay(cfg, n, m)
        out = {"n": n, "m": m, "E_log_cvbf": e_cv, "E_log_gibf": e_gi}
        for name, vals in (("cvbf", cv), ("gibf", gi)):
            for k, v in _summ(vals, cfg.trim).items():
                out[f"{name}_{k}"] = v
        return out

    table = CurveTable(list(CONSISTENCY_COLUMNS), config={"experiment": "consistency", **cfg.record()})
    for r in _map(row, cfg.n_grid, cfg.threads):
        table.add(**r)
    return table


# ---------------------------------------------------------------------------
# ROC


@dataclass
class RocCurve:
    method: str
    points: list[tuple[int, float, float]]
    auc: float


def roc_auc(points: Sequence[tuple[float, float]]) -> float:
    """Trapezoid area under (fpr, tpr) points sorted by fpr then tpr, anchored at (0,0) and (1,1)."""
    pts = sorted((float(f), float(t)) for f, t in points)
    pts = [(0.0, 0.0)] + pts + [(1.0, 1.0)]
    area = 0.0
    for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
        area += (x2 - x1) * (y1 + y2) / 2
    return area


def run_roc(
    n: int = 100,
    m_grid: Sequence[int] = range(5, 100, 5),
    reps: int = 1000,
    seed: int = 0,
    theta0: float = 0.0,
    theta1: float = 0.25,
    sigma: float = 1.0,
    splits: int = 1,
    cap: int = DEFAULT_CAP,
    threads: int = 1,
) -> tuple[RocCurve, RocCurve, CurveTable]:
    """ROC over training sizes for the known-sigma normal test.

    At each ``m`` the decision "log BF > 0" is applied to ``reps`` datasets
    from ``N(theta0, sigma)`` (false positives) and from ``N(theta1, sigma)``
    (true positives).  CVBF averages ``splits`` random splits per dataset;
    GIBF is the corrected geometric IBF over all C(n, m) training sets.
    Datasets are shared across the m grid (stream ``(seed, h, r)``).
    """
    m_grid = [int(m) for m in m_grid]
    if not m_grid:
        raise DomainError("empty m grid")
    if any(not (1 <= m <= n - 1) for m in m_grid):
        raise DomainError(f"m grid must lie in [1, {n - 1}]")
    hyp = NormalKnownHyp(theta0, sigma)
    data = {
        h: np.stack([make_rng(seed, h, r).normal(mu, sigma, n) for r in range(reps)])
        for h, mu in ((0, theta0), (1, theta1))
    }

    def rates(m: int):
        out = {}
        for h in (0, 1):
            x = data[h]
            cv = np.empty(reps)
            for r in range(reps):
                rng = make_rng(seed, h, r, m)
                plan = _cv_plan(n, m, ExperimentConfig(splits=splits, cap=cap, reps=1, trim=0), rng, {})
                cv[r] = nk_cvbf_plan(x[r], hyp, plan).mean()
            gi = nk_cgibf_batch(x, hyp, m)
            out[h] = (float(np.mean(cv > 0)), float(np.mean(gi > 0)))
        return m, out

    results = _map(rates, m_grid, threads)
    cv_pts = [(m, o[0][0], o[1][0]) for m, o in results]
    gi_pts = [(m, o[0][1], o[1][1]) for m, o in results]
    cv_curve = RocCurve("CVBF", cv_pts, roc_auc([(f, t) for _, f, t in cv_pts]))
    gi_curve = RocCurve("cGIBF", gi_pts, roc_auc([(f, t) for _, f, t in gi_pts]))
    table = CurveTable(
        ["m", "cvbf_fpr", "cvbf_tpr", "gibf_fpr", "gibf_tpr"],
        config={"experiment": "roc", "n": n, "m_grid": m_grid, "reps": reps, "seed": seed,
                "theta0": theta0, "theta1": theta1, "sigma": sigma, "splits": splits, "cap": cap},
        meta={"auc_cvbf": cv_curve.auc, "auc_gibf": gi_curve.auc},
    )
    for (m, fc, tc), (_, fg, tg) in zip(cv_pts, gi_pts):
        table.add(m=m, cvbf_fpr=fc, cvbf_tpr=tc, gibf_fpr=fg, gibf_tpr=tg)
    return cv_curve, gi_curve, table


# ---------------------------------------------------------------------------
# criteria comparison

CRITERIA_COLUMNS = ["n", "m"] + [
    f"{method}_{stat}" for method in ("cvbf", "gibf") for stat in ("mean", "q1", "q3")
] + ["bic_mean", "pbic_mean", "pbic_star_mean", "fbf_mean", "aibf_mean"]


def run_criteria_compare(cfg: ExperimentConfig) -> CurveTable:
    """CVBF, GIBF and the five BIC-family scores averaged over replicates."""
    if cfg.case not in ("normal_known", "normal_unknown"):
        raise DomainError("criteria comparison covers normal_known and normal_unknown only")
    plan_m = validate_grid(cfg)
    crit = "normal_known" if cfg.case == "normal_known" else "normal_unknown"
    nk = NormalKnownHyp(cfg.theta0, cfg.sigma)
    cache: dict = {}

    def row(n: int) -> dict:
        m = plan_m[n]
        cv = np.empty(cfg.reps)
        gi = np.empty(cfg.reps)
        scores = {k: np.empty(cfg.reps) for k in ("BIC", "PBIC", "PBICstar", "FBF", "AIBF")}
        for r in range(cfg.reps):
            rng = make_rng(cfg.seed, n, r)
            x = rng.normal(cfg.theta, cfg.sigma, n)
            plan = _cv_plan(n, m, cfg, rng, cache)
            if crit == "normal_known":
                cv[r] = nk_cvbf_plan(x, nk, plan).mean()
                gi[r] = nk_cgibf_batch(x[None, :], nk)[0]
                sc = all_criteria(x, crit, nk)
            else:
                cv[r] = nu_cvbf_plan(x, plan).mean()
                pairs = _pairs(n, cfg, rng, cache)
                vals = nu_ibf_pairs(x, pairs.train)
                gi[r] = vals[np.isfinite(vals)].mean()
                sc = all_criteria(x, crit, nk, pairs)
            for k in scores:
                scores[k][r] = sc[k]
        out = {"n": n, "m": m}
        for name, vals in (("cvbf", cv), ("gibf", gi)):
            q1, q3 = np.quantile(vals, [0.25, 0.75])
            out.update({f"{name}_mean": float(vals.mean()), f"{name}_q1": float(q1), f"{name}_q3": float(q3)})
        for col, k in (("bic", "BIC"), ("pbic", "PBIC"), ("pbic_star", "PBICstar"), ("fbf", "FBF"), ("aibf", "AIBF")):
            out[f"{col}_mean"] = float(scores[k].mean())
        return out

    table = CurveTable(list(CRITERIA_COLUMNS), config={"experiment": "criteria", **cfg.record()})
    for r in _map(row, cfg.n_grid, cfg.threads):
        table.add(**r)
    return table
