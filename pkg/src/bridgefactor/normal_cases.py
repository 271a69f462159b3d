"""Closed-form Bayes factors for three normal testing problems.

* known variance, ``H0: theta = theta0`` against a free mean;
* two group means with known variance, ``H0: mu1 = mu2``;
* unknown variance, ``H0: N(0, sigma^2)`` against ``N(theta, sigma^2)``.

Every data-level CVBF here has a generic-engine twin built from a
:class:`~bridgefactor.splitkit.ParametricPair`; the ``*_pair`` factories
expose those so callers (and tests) can cross-check the closed forms.
Vectorized ``*_plan`` variants return one value per split of a plan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bridge import bridge_value
from .mathcore import DomainError, sample_chisq
from .splitkit import (
    DEFAULT_CAP,
    DegenerateSplitError,
    LogBF,
    ParametricModel,
    ParametricPair,
    SplitError,
    SplitPlan,
    as_sample,
    make_splits,
)

GIBF_RANDOM_PAIRS = 10_000
LOG_2PI = math.log(2 * math.pi)


# ---------------------------------------------------------------------------
# known sigma


@dataclass(frozen=True)
class NormalKnownHyp:
    theta0: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


def _split_arrays(split) -> tuple[np.ndarray, np.ndarray]:
    train, valid = (np.asarray(s, dtype=np.intp) for s in split)
    if valid.size == 0:
        raise SplitError("empty validation set")
    if train.size == 0:
        raise SplitError("empty training set")
    return train, valid


def normal_known_pair(hyp: NormalKnownHyp) -> ParametricPair:
    s2 = hyp.sigma**2

    def loglik(params, x):
        return -0.5 * LOG_2PI - math.log(hyp.sigma) - (x - params[0]) ** 2 / (2 * s2)

    null = ParametricModel(fit=lambda xt: (hyp.theta0,), loglik=loglik)
    alt = ParametricModel(fit=lambda xt: (float(np.mean(xt)),), loglik=loglik)
    return ParametricPair(null, alt)


def nk_cvbf_log(data, hyp: NormalKnownHyp, split) -> LogBF:
    x = as_sample(data)
    train, valid = _split_arrays(split)
    xt, xv = x[train].mean(), x[valid].mean()
    value = -(valid.size / (2 * hyp.sigma**2)) * ((xt - xv) ** 2 - (xv - hyp.theta0) ** 2)
    return LogBF(value, "CVBF")


def nk_cvbf_plan(data, hyp: NormalKnownHyp, plan: SplitPlan) -> np.ndarray:
    x = as_sample(data)
    n, m = plan.n, plan.m
    xt = x[plan.train].mean(axis=1)
    xv = (x.sum() - m * xt) / (n - m)
    return -((n - m) / (2 * hyp.sigma**2)) * ((xt - xv) ** 2 - (xv - hyp.theta0) ** 2)


def nk_ibf_log(data, hyp: NormalKnownHyp, train) -> LogBF:
    """Uncorrected IBF with the flat prior, training points ``train``."""
    x = as_sample(data)
    idx = np.atleast_1d(np.asarray(train, dtype=np.intp))
    n, m = x.size, idx.size
    if n < 2 or not (1 <= m <= n - 1):
        raise SplitError(f"need n >= 2 and 1 <= m < n, got n={n}, m={m}")
    d_t = x[idx].mean() - hyp.theta0
    d_n = x.mean() - hyp.theta0
    value = 0.5 * math.log(m / n) - (m * d_t**2 - n * d_n**2) / (2 * hyp.sigma**2)
    return LogBF(value, "IBF")


def nk_cibf_log(data, hyp: NormalKnownHyp, i: int) -> LogBF:
    """IBF on the single training point ``i`` times the correction sqrt(e)."""
    return LogBF(0.5 + nk_ibf_log(data, hyp, [i]), "cIBF")


def nk_cibf_all(data, hyp: NormalKnownHyp, corrected: bool = True) -> np.ndarray:
    """Per-point (m = 1) IBF values for every training point, vectorized."""
    x = as_sample(data)
    n = x.size
    if n < 2:
        raise SplitError("IBF needs n >= 2")
    s2 = hyp.sigma**2
    base = (0.5 if corrected else 0.0) - 0.5 * math.log(n)
    return base - ((x - hyp.theta0) ** 2 - n * (x.mean() - hyp.theta0) ** 2) / (2 * s2)


def nk_cgibf_log(data, hyp: NormalKnownHyp, m: int = 1, corrected: bool = True) -> LogBF:
    """Geometric average of IBFs over all C(n, m) training sets, in closed form.

    The average of ``m * (mean_T - theta0)**2`` over every size-``m`` subset
    is ``m * (xbar - theta0)**2 + s_p**2 * (n - m) / (n - 1)`` with ``s_p**2``
    the population variance of the sample, so no enumeration is needed.  The
    sqrt(e) correction does not depend on ``m``.
    """
    x = as_sample(data)
    n = x.size
    if n < 2 or not (1 <= m <= n - 1):
        raise SplitError(f"need n >= 2 and 1 <= m < n, got n={n}, m={m}")
    d_n = x.mean() - hyp.theta0
    sp2 = np.mean((x - x.mean()) ** 2)
    avg_train_term = m * d_n**2 + sp2 * (n - m) / (n - 1)
    value = (0.5 if corrected else 0.0) + 0.5 * math.log(m / n)
    value -= (avg_train_term - n * d_n**2) / (2 * hyp.sigma**2)
    return LogBF(value, "cGIBF" if corrected else "GIBF")


def nk_cgibf_batch(x: np.ndarray, hyp: NormalKnownHyp, m: int = 1, corrected: bool = True) -> np.ndarray:
    """Row-wise :func:`nk_cgibf_log` for a (reps, n) data matrix."""
    n = x.shape[1]
    xb = x.mean(axis=1)
    d_n = xb - hyp.theta0
    sp2 = np.mean((x - xb[:, None]) ** 2, axis=1)
    value = (0.5 if corrected else 0.0) + 0.5 * math.log(m / n)
    return value - (m * d_n**2 + sp2 * (n - m) / (n - 1) - n * d_n**2) / (2 * hyp.sigma**2)


class NormalKnownMoments(NamedTuple):
    E_log_cvbf: float
    Var_log_cvbf: float
    E_log_cgibf: float
    Var_log_cibf: float


def nk_expectations(n: float, m: float, theta: float, hyp: NormalKnownHyp) -> NormalKnownMoments:
    """Mean and variance of log CVBF (training size m) and log cGIBF under N(theta, sigma^2)."""
    if not (n > m >= 1) or n < 2:
        raise DomainError(f"need n > m >= 1 and n >= 2, got n={n}, m={m}")
    d2 = (theta - hyp.theta0) ** 2 / hyp.sigma**2
    return NormalKnownMoments(
        E_log_cvbf=-0.5 * (n / m - 1 - (n - m) * d2),
        Var_log_cvbf=n**2 / (2 * m**2) + 0.5 + (n - m) * d2,
        E_log_cgibf=0.5 * math.log(math.e / n) + 0.5 * (n - 1) * d2,
        Var_log_cibf=1 - 1 / n + (n - 1) * d2,
    )


def nk_cvbf_distributional_sample(rng, n: float, m: float, theta: float, hyp: NormalKnownHyp, size=None):
    """Draw log CVBF for one split as ``-(n/m * Z**2 - Zt**2) / 2``.

    ``Z**2`` is central chi-square(1) and ``Zt**2`` is chi-square(1) with
    noncentrality ``(n - m)(theta - theta0)**2 / sigma**2``.  The two normals
    behind them are correlated with coefficient ``-sqrt(m / n)``, which is the
    joint law of (training minus validation mean, validation mean).
    """
    if not (n > m > 0):
        raise DomainError(f"need n > m > 0, got n={n}, m={m}")
    rho = -math.sqrt(m / n)
    z = rng.standard_normal(size)
    w = rho * z + math.sqrt(1 - rho**2) * rng.standard_normal(size)
    zt = w + math.sqrt(n - m) * (theta - hyp.theta0) / hyp.sigma
    out = -0.5 * ((n / m) * z**2 - zt**2)
    return float(out) if size is None else out


# ---------------------------------------------------------------------------
# two group means, known sigma


@dataclass(frozen=True)
class TwoMeanHyp:
    mu1: float = 0.0
    mu2: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


def _check_two_mean(n, m, min_m=2):
    if n % 2 or n < 4:
        raise DomainError(f"two-mean design needs an even n >= 4, got {n}")
    if not (min_m <= m < n):
        raise DomainError(f"training size must satisfy {min_m} <= m < n, got m={m}")


def tm_cibf_sample(rng, n: int, m: float, hyp: TwoMeanHyp, size=None):
    """Corrected IBF through its six-term chi-square representation.

    The six chi-squares are drawn independently; only their means enter the
    expectation checks.
    """
    _check_two_mean(n, m)
    s2 = hyp.sigma**2
    a, b = hyp.mu1, hyp.mu2
    lams = (
        m * (a + b) ** 2 / (4 * s2),
        n * (a + b) ** 2 / (4 * s2),
        (n / 2) * a**2 / s2,
        (m / 2) * a**2 / s2,
        (n / 2) * b**2 / s2,
        (m / 2) * b**2 / s2,
    )
    signs = (-1, 1, -1, 1, -1, 1)
    quad = sum(sg * sample_chisq(rng, 1, lam, size) for sg, lam in zip(signs, lams))
    out = 0.5 * math.log(math.e * m / n) - 0.5 * quad
    return float(out) if size is None else out


def tm_cvbf_sample(rng, n: int, m: float, hyp: TwoMeanHyp, size=None):
    """CVBF through its five-term chi-square representation."""
    _check_two_mean(n, m)
    d2 = (hyp.mu1 - hyp.mu2) ** 2 / hyp.sigma**2
    lam1 = m * d2 / 4
    lam45 = m * (n - m) * d2 / (2 * n)
    c = n / (4 * m)
    quad = (
        (n - m) / (2 * m) * sample_chisq(rng, 1, lam1, size)
        + c * sample_chisq(rng, 1, 0.0, size)
        + c * sample_chisq(rng, 1, 0.0, size)
        - c * sample_chisq(rng, 1, lam45, size)
        - c * sample_chisq(rng, 1, lam45, size)
    )
    out = -quad
    return float(out) if size is None else out


class TwoMeanMoments(NamedTuple):
    E_log_cibf: float
    E_log_cvbf: float
    E_log_cvbf_bridged: float


def tm_expectations(n: int, m: float, hyp: TwoMeanHyp, ibf_m: int = 2) -> TwoMeanMoments:
    """Expectations of log cIBF (training size ``ibf_m``) and log CVBF.

    The bridged value substitutes the continuous rule ``m = n / ln(n/2)``
    into the CVBF expectation, which gives ``-ln(n/2)/2 + 1/2`` plus the
    mean-difference term and so matches the cIBF expectation at ``ibf_m = 2``.
    """
    _check_two_mean(n, m)
    d2 = (hyp.mu2 - hyp.mu1) ** 2 / hyp.sigma**2
    mb = bridge_value(n, 2)
    return TwoMeanMoments(
        E_log_cibf=0.5 * math.log(math.e * ibf_m / n) + 0.5 * (n - ibf_m) * d2 / 4,
        E_log_cvbf=-(n - m) / (2 * m) + 0.5 * (n - m) * d2 / 4,
        E_log_cvbf_bridged=-0.5 * math.log(n / 2) + 0.5 + 0.5 * (n - mb) * d2 / 4,
    )


def two_group_labels(n: int) -> np.ndarray:
    """Group 0 for the first half of the sample, group 1 for the second."""
    if n % 2:
        raise DomainError(f"two-mean design needs an even n, got {n}")
    return np.repeat([0, 1], n // 2)


def two_mean_pair(sigma: float = 1.0) -> ParametricPair:
    """Generic pair on records ``(y, group)``: pooled mean vs per-group means."""

    def loglik(params, rows):
        mu = np.where(rows[:, 1] == 0, params[0], params[1])
        return -0.5 * LOG_2PI - math.log(sigma) - (rows[:, 0] - mu) ** 2 / (2 * sigma**2)

    def fit_pooled(rows):
        mu = float(rows[:, 0].mean())
        return (mu, mu)

    def fit_groups(rows):
        g = rows[:, 1]
        if not (np.any(g == 0) and np.any(g == 1)):
            raise ZeroDivisionError("a group is absent from the training set")
        return (float(rows[g == 0, 0].mean()), float(rows[g == 1, 0].mean()))

    return ParametricPair(ParametricModel(fit_pooled, loglik), ParametricModel(fit_groups, loglik, 2))


def tm_cvbf_plan(y, groups, plan: SplitPlan, sigma: float = 1.0) -> np.ndarray:
    """Per-split two-mean CVBF; matches the generic engine on :func:`two_mean_pair`."""
    y = as_sample(y)
    g = np.asarray(groups)
    yt, gt = y[plan.train], g[plan.train]
    yv, gv = y[plan.valid], g[plan.valid]
    n1 = (gt == 1).sum(axis=1)
    n0 = plan.m - n1
    if np.any(n0 == 0) or np.any(n1 == 0):
        bad = int(np.flatnonzero((n0 == 0) | (n1 == 0))[0])
        raise DegenerateSplitError(f"split {bad}: a group is absent from the training set")
    pooled = yt.mean(axis=1)
    mu0 = np.where(gt == 0, yt, 0.0).sum(axis=1) / n0
    mu1 = np.where(gt == 1, yt, 0.0).sum(axis=1) / n1
    mu_g = np.where(gv == 0, mu0[:, None], mu1[:, None])
    diff = (yv - mu_g) ** 2 - (yv - pooled[:, None]) ** 2
    return -diff.sum(axis=1) / (2 * sigma**2)


def tm_cvbf_log_data(y, groups, split, sigma: float = 1.0) -> LogBF:
    train, valid = _split_arrays(split)
    plan = SplitPlan(len(y), train.size, train[None, :], valid[None, :], "random")
    return LogBF(tm_cvbf_plan(y, groups, plan, sigma)[0], "CVBF")


# ---------------------------------------------------------------------------
# unknown sigma


@dataclass(frozen=True)
class NormalUnknownHyp:
    theta: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


def _pair_factor(xi, xj):
    # rescale by the larger magnitude so tiny pairs do not underflow
    xi, xj = np.asarray(xi, dtype=float), np.asarray(xj, dtype=float)
    s = np.maximum(np.abs(xi), np.abs(xj))
    with np.errstate(divide="ignore", invalid="ignore"):
        a, b = xi / s, xj / s
        out = np.log((a - b) ** 2) - np.log(2 * math.sqrt(math.pi) * (a**2 + b**2))
    return np.where(s > 0, out, -np.inf)


def _nu_common(x: np.ndarray) -> float:
    n = x.size
    if n < 4:
        raise SplitError(f"unknown-variance IBF needs n >= 4, got {n}")
    xb = x.mean()
    s2 = np.sum((x - xb) ** 2)
    if s2 <= 0:
        raise DegenerateSplitError("constant sample: zero spread")
    return 0.5 * math.log(2 * math.pi / n) + (n / 2) * math.log1p(n * xb**2 / s2)


def nu_ibf_log(data, pair_indices) -> LogBF:
    """IBF on the training pair ``(i, j)``; ``-inf`` (flagged) when ``x_i == x_j``."""
    x = as_sample(data)
    i, j = pair_indices
    common = _nu_common(x)
    if x[i] ** 2 + x[j] ** 2 <= 0 or x[i] == x[j]:
        return LogBF(-math.inf, "IBF", cause="tied training pair")
    return LogBF(common + float(_pair_factor(x[i], x[j])), "IBF")


def nu_ibf_pairs(data, pairs: np.ndarray) -> np.ndarray:
    """IBF for every row of an (L, 2) pair index array; ties give ``-inf``."""
    x = as_sample(data)
    common = _nu_common(x)
    return common + _pair_factor(x[pairs[:, 0]], x[pairs[:, 1]])


def nu_pair_plan(n: int, rng=None, cap: int = DEFAULT_CAP, random_pairs: int = GIBF_RANDOM_PAIRS) -> SplitPlan:
    """All C(n, 2) pairs when within ``cap``, otherwise ``random_pairs`` random ones."""
    if math.comb(n, 2) <= cap:
        return make_splits(n, 2, "exhaustive", cap=cap)
    return make_splits(n, 2, "random", random_pairs, rng, cap=cap)


class PairAverage(NamedTuple):
    log_bf: LogBF
    used: int
    excluded: int


def nu_gibf_log(data, plan: SplitPlan) -> PairAverage:
    """Geometric mean of pair IBFs; tied pairs are excluded and counted."""
    if plan.m != 2:
        raise SplitError("unknown-variance GIBF uses training pairs (m = 2)")
    vals = nu_ibf_pairs(data, plan.train)
    ok = np.isfinite(vals)
    if not ok.any():
        raise DegenerateSplitError("every training pair is tied")
    return PairAverage(LogBF(float(vals[ok].mean()), "GIBF"), int(ok.sum()), int((~ok).sum()))


def nu_gibf_batch(x: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Row-wise GIBF for a (reps, n) matrix over a shared pair index set."""
    n = x.shape[1]
    xb = x.mean(axis=1)
    s2 = np.sum((x - xb[:, None]) ** 2, axis=1)
    common = 0.5 * math.log(2 * math.pi / n) + (n / 2) * np.log1p(n * xb**2 / s2)
    pf = _pair_factor(x[:, pairs[:, 0]], x[:, pairs[:, 1]])
    pf = np.where(np.isfinite(pf), pf, np.nan)
    return common + np.nanmean(pf, axis=1)


def normal_unknown_pair() -> ParametricPair:
    """Generic pair: N(0, s0^2) vs N(mu, s1^2), every parameter an MLE on training data."""

    def loglik(params, x):
        mu, var = params
        return -0.5 * LOG_2PI - 0.5 * math.log(var) - (x - mu) ** 2 / (2 * var)

    def fit_null(xt):
        v = float(np.mean(xt**2))
        if v <= 0:
            raise ZeroDivisionError("training points all zero")
        return (0.0, v)

    def fit_alt(xt):
        mu = float(np.mean(xt))
        v = float(np.mean((xt - mu) ** 2))
        if v <= 0:
            raise ZeroDivisionError("constant training set")
        return (mu, v)

    return ParametricPair(ParametricModel(fit_null, loglik, 1), ParametricModel(fit_alt, loglik, 2))


def nu_cvbf_log(data, split) -> LogBF:
    x = as_sample(data)
    train, valid = _split_arrays(split)
    if train.size < 2:
        raise SplitError("unknown-variance CVBF needs m >= 2")
    xt, xv = x[train], x[valid]
    mt = xt.mean()
    s_t = np.sum((xt - mt) ** 2)
    q_t = np.sum(xt**2)
    if s_t <= 0 or q_t <= 0:
        raise DegenerateSplitError("degenerate training set")
    value = (valid.size / 2) * math.log(q_t / s_t) - (train.size / 2) * (
        np.sum((xv - mt) ** 2) / s_t - np.sum(xv**2) / q_t
    )
    return LogBF(value, "CVBF")


def nu_cvbf_plan(data, plan: SplitPlan) -> np.ndarray:
    x = as_sample(data)
    n, m = plan.n, plan.m
    if m < 2:
        raise SplitError("unknown-variance CVBF needs m >= 2")
    xt = x[plan.train]
    t_sum = xt.sum(axis=1)
    q_t = np.sum(xt**2, axis=1)
    mt = t_sum / m
    s_t = q_t - m * mt**2
    if np.any(s_t <= 0) or np.any(q_t <= 0):
        raise DegenerateSplitError("degenerate training set in plan")
    q_v = np.sum(x**2) - q_t
    v_sum = x.sum() - t_sum
    # sum over validation of (x - mt)^2
    sv_t = q_v - 2 * mt * v_sum + (n - m) * mt**2
    return ((n - m) / 2) * np.log(q_t / s_t) - (m / 2) * (sv_t / s_t - q_v / q_t)


class NormalUnknownNullMoments(NamedTuple):
    E_log_ibf_M0: float
    E_log_cvbf_M0: float


def nu_null_expectations(n: float, m: float) -> NormalUnknownNullMoments:
    """Null-model expectations of log IBF (== log GIBF) and log CVBF."""
    if n <= 3 or m <= 3:
        raise DomainError(f"null expectations need n > 3 and m > 3, got n={n}, m={m}")
    e_ibf = 0.5 * math.log(1 / (8 * n)) + (n / 2) * (
        math.log1p(1 / (n - 3)) - 1 / ((n - 2) * (n - 3))
    )
    e_cv = (
        ((n - m) / 2) * (math.log1p(1 / (m - 3)) - 1 / ((m - 2) * (m - 3)))
        - (m + 1) * (n - m) / (2 * (m - 3))
        + m * (n - m) / (2 * (m - 2))
    )
    return NormalUnknownNullMoments(e_ibf, e_cv)
