"""Exponential-rate test ``H0: beta = beta0`` (density ``beta * exp(-beta * x)``).

The IBF uses the Jeffreys prior ``1/beta`` with a single training point; the
geometric intrinsic prior correction is the factor ``exp(psi(1))``, applied
here by subtracting ``psi(1)`` on the log scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .bridge import bridge_m
from .curves import CurveTable
from .mathcore import DomainError, digamma, log_gamma, make_rng
from .splitkit import (
    DegenerateSplitError,
    LogBF,
    ParametricModel,
    ParametricPair,
    SplitPlan,
    as_sample,
    make_splits,
)

PSI1 = -0.57721566490153286061


@dataclass(frozen=True)
class ExpHyp:
    beta0: float = 0.2
    beta: float = 0.2

    def __post_init__(self):
        if not (self.beta0 > 0 and self.beta > 0):
            raise DomainError(f"rates must be positive, got beta0={self.beta0}, beta={self.beta}")


def _positive_sample(data) -> np.ndarray:
    x = as_sample(data)
    if x.ndim != 1:
        raise DomainError("exponential data must be a 1-d sample")
    if np.any(x <= 0):
        raise DomainError("exponential data must be strictly positive")
    return x


def exp_ibf_log(data, hyp: ExpHyp, l: int) -> LogBF:
    """Uncorrected IBF with training point ``x[l]``."""
    x = _positive_sample(data)
    n = x.size
    if n < 2:
        raise DomainError("IBF needs n >= 2")
    total = x.sum()
    rest = total - x[l]
    value = (
        log_gamma(n)
        + math.log(x[l])
        - n * math.log(total)
        - (n - 1) * math.log(hyp.beta0)
        + hyp.beta0 * rest
    )
    return LogBF(value, "IBF")


def exp_ibf_all(data, hyp: ExpHyp) -> np.ndarray:
    x = _positive_sample(data)
    n = x.size
    if n < 2:
        raise DomainError("IBF needs n >= 2")
    total = x.sum()
    return (
        log_gamma(n)
        + np.log(x)
        - n * math.log(total)
        - (n - 1) * math.log(hyp.beta0)
        + hyp.beta0 * (total - x)
    )


def exp_cgibf_log(data, hyp: ExpHyp, plan: SplitPlan | None = None) -> LogBF:
    """Corrected GIBF: mean IBF over training points minus psi(1).

    ``plan`` (m = 1) restricts the training points; default is all of them.
    """
    vals = exp_ibf_all(data, hyp)
    if plan is not None:
        if plan.m != 1:
            raise DomainError("exponential GIBF uses single training points")
        vals = vals[plan.train[:, 0]]
    return LogBF(float(vals.mean()) - PSI1, "cGIBF")


def exp_cgibf_batch(x: np.ndarray, hyp: ExpHyp) -> np.ndarray:
    """Row-wise corrected GIBF for a (reps, n) matrix of positive data."""
    n = x.shape[1]
    total = x.sum(axis=1)
    mean_log = np.log(x).mean(axis=1)
    return (
        log_gamma(n) + mean_log - n * np.log(total) - (n - 1) * math.log(hyp.beta0)
        + hyp.beta0 * total * (n - 1) / n - PSI1
    )


def exponential_pair(hyp: ExpHyp) -> ParametricPair:
    def loglik(params, x):
        return math.log(params[0]) - params[0] * x

    def fit_alt(xt):
        s = float(np.mean(xt))
        if s <= 0:
            raise ZeroDivisionError("nonpositive training mean")
        return (1.0 / s,)

    return ParametricPair(
        ParametricModel(lambda xt: (hyp.beta0,), loglik),
        ParametricModel(fit_alt, loglik),
    )


def exp_cvbf_log(data, hyp: ExpHyp, split) -> LogBF:
    x = _positive_sample(data)
    train, valid = (np.asarray(s, dtype=np.intp) for s in split)
    if train.size < 1 or valid.size < 1:
        raise DegenerateSplitError("exponential CVBF needs nonempty training and validation sets")
    xt, xv = x[train].mean(), x[valid].mean()
    k = valid.size
    return LogBF(-k * math.log(hyp.beta0 * xt) - k * xv / xt + hyp.beta0 * k * xv, "CVBF")


def exp_cvbf_plan(data, hyp: ExpHyp, plan: SplitPlan) -> np.ndarray:
    x = _positive_sample(data)
    k = plan.n - plan.m
    xt = x[plan.train].mean(axis=1)
    xv = (x.sum() - plan.m * xt) / k
    return -k * np.log(hyp.beta0 * xt) - k * xv / xt + hyp.beta0 * k * xv


class ExpMoments(NamedTuple):
    E_log_cgibf_M1: float
    E_log_cvbf_M1: float
    E_log_cibf_M0_approx: float
    E_log_cvbf_M0_approx: float


def exp_expectations(n: int, m: float, hyp: ExpHyp) -> ExpMoments:
    """Exact expectations under rate ``hyp.beta`` plus the large-n null approximations.

    The null approximations use ``psi(n) ~ ln(n - 1/2)``, the Stirling form of
    ``log Gamma`` and the continuous training size ``n / ln n``.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    if not (2 <= m < n):
        raise DomainError(f"CVBF expectation needs 2 <= m < n, got m={m}")
    r = hyp.beta / hyp.beta0
    e_gibf = log_gamma(n) - n * digamma(n) + (n - 1) * math.log(r) + (n - 1) / r
    e_cv = (n - m) * (math.log(r) - digamma(m) + math.log(m) + 1 / r - m / (m - 1))
    e_gibf0 = (n - 1) * math.log(n - 1) + 0.5 * math.log(2 * math.pi * (n - 1)) - n * math.log(n - 0.5)
    mb = n / math.log(n)
    e_cv0 = (n - mb) * (math.log(mb / (mb - 0.5)) - 1 / (mb - 1))
    return ExpMoments(e_gibf, e_cv, e_gibf0, e_cv0)


def null_interval(grid: Sequence[float], means: Sequence[float]) -> tuple[float, float] | None:
    """Interval around the sign change where the mean log BF is negative.

    Endpoints are linear interpolations of the first - to + crossings on
    either side of the most negative grid point.  ``None`` when the curve
    never goes negative; an open side is reported as ``nan``.
    """
    g = np.asarray(grid, dtype=float)
    y = np.asarray(means, dtype=float)
    if not np.any(y < 0):
        return None
    k = int(np.argmin(y))
    lo = hi = math.nan
    for i in range(k, 0, -1):
        if y[i - 1] >= 0 > y[i]:
            lo = g[i - 1] + (0 - y[i - 1]) * (g[i] - g[i - 1]) / (y[i] - y[i - 1])
            break
    for i in range(k, g.size - 1):
        if y[i] < 0 <= y[i + 1]:
            hi = g[i] + (0 - y[i]) * (g[i + 1] - g[i]) / (y[i + 1] - y[i])
            break
    return float(lo), float(hi)


def exp_sweep(
    beta_grid: Sequence[float],
    n: int = 100,
    reps: int = 100,
    seed: int = 0,
    beta0: float = 0.2,
    splits: int = 50,
) -> CurveTable:
    """Mean log CVBF (bridge-rule m) and mean log cGIBF across sampling rates.

    The same standard-exponential draws (stream ``seed``), rescaled by each
    rate, and the same splits are reused at every grid point, so the mean
    curves are smooth in beta.  Each replicate's CVBF is the geometric average
    over ``splits`` random splits.  ``meta``
    holds the interpolated null-favoring interval of each mean curve.
    """
    if n < 4:
        raise DomainError("exponential sweep needs n >= 4")
    grid = [float(b) for b in beta_grid]
    if not grid or any(b <= 0 for b in grid):
        raise DomainError("beta grid must be nonempty and positive")
    m = bridge_m(n, 1, min_train=2)
    table = CurveTable(
        ["beta", "mean_log_cvbf", "mean_log_cgibf", "E_log_cvbf", "E_log_cgibf"],
        config={"experiment": "exp-sweep", "n": n, "m": m, "reps": reps, "seed": seed,
                "beta0": beta0, "splits": splits, "beta_grid": grid},
    )
    rng = make_rng(seed)
    base = rng.standard_exponential((reps, n))
    plans = [make_splits(n, m, "random", splits, rng) for _ in range(reps)]
    for beta in grid:
        hyp = ExpHyp(beta0, beta)
        x = base / beta
        cv = np.array([exp_cvbf_plan(x[r], hyp, plans[r]).mean() for r in range(reps)])
        ex = exp_expectations(n, m, hyp)
        table.add(
            beta=beta,
            mean_log_cvbf=float(cv.mean()),
            mean_log_cgibf=float(exp_cgibf_batch(x, hyp).mean()),
            E_log_cvbf=ex.E_log_cvbf_M1,
            E_log_cgibf=ex.E_log_cgibf_M1,
        )
    table.meta["cvbf_null_interval"] = null_interval(grid, table.column("mean_log_cvbf"))
    table.meta["cgibf_null_interval"] = null_interval(grid, table.column("mean_log_cgibf"))
    return table
