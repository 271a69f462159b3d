"""BIC-family scores for the two normal-mean problems.

``normal_known``: ``H0: theta = theta0`` with known sigma.  ``normal_unknown``:
``H0: N(0, s^2)`` against ``N(theta, s^2)`` with ``s`` unknown.  All scores
plug in the full-data MLE ``xbar`` and are log Bayes factors of the larger
model over the smaller one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bridge import bridge_m
from .curves import CurveTable
from .mathcore import DomainError
from .normal_cases import (
    NormalKnownHyp,
    nk_cibf_all,
    nk_expectations,
    nu_ibf_pairs,
    nu_pair_plan,
)
from .splitkit import DegenerateSplitError, SplitPlan, arithmetic_avg_log, as_sample

CASES = ("normal_known", "normal_unknown")
PBIC_STAR_CAP = 1.3


@dataclass(frozen=True)
class CriterionScore:
    method: str
    log_value: float
    case: str

    def __float__(self) -> float:
        return self.log_value


def _check_case(case: str) -> None:
    if case not in CASES:
        raise DomainError(f"unknown case {case!r}; expected one of {CASES}")


def _prep(data, case: str):
    _check_case(case)
    x = as_sample(data)
    if x.ndim != 1 or x.size < 2:
        raise DomainError("criteria need a 1-d sample with n >= 2")
    return x, x.size, float(x.mean())


def _log_lr(x, n, xbar, case, hyp):
    """Maximized log-likelihood ratio with the full-data MLE."""
    if case == "normal_known":
        return n * (xbar - hyp.theta0) ** 2 / (2 * hyp.sigma**2)
    ss = float(np.sum((x - xbar) ** 2))
    if ss <= 0:
        raise DegenerateSplitError("constant sample: zero spread")
    return n**2 * xbar**2 / (2 * ss)


def pbic_extra(v: float, cap: float | None = None) -> float:
    """``log((1 - exp(-c)) / sqrt(2 v c))`` with ``c = min(v, cap)`` (``c = v`` if no cap).

    Without a cap this is ``log((1 - exp(-v)) / (sqrt(2) v))``, which tends to
    ``-log(sqrt(2))`` as ``v -> 0``.
    """
    if not v > 0:
        raise DomainError(f"PBIC needs v > 0, got {v}")
    c = v if cap is None else min(v, cap)
    return math.log(-math.expm1(-c)) - 0.5 * math.log(2 * v * c)


def _pbic_v(n, xbar, case, hyp) -> float:
    if case == "normal_known":
        return ((xbar - hyp.theta0) / hyp.sigma) ** 2 / (1 + n)
    return xbar**2 / (1 + n)


def bic_log(data, case: str = "normal_known", hyp: NormalKnownHyp | None = None) -> CriterionScore:
    hyp = hyp or NormalKnownHyp()
    x, n, xbar = _prep(data, case)
    return CriterionScore("BIC", -0.5 * math.log(n) + _log_lr(x, n, xbar, case, hyp), case)


def pbic_log(data, case: str = "normal_known", hyp: NormalKnownHyp | None = None) -> CriterionScore:
    hyp = hyp or NormalKnownHyp()
    x, n, xbar = _prep(data, case)
    v = _pbic_v(n, xbar, case, hyp)
    value = -0.5 * math.log(1 + n) + _log_lr(x, n, xbar, case, hyp) + pbic_extra(v)
    return CriterionScore("PBIC", value, case)


def pbic_star_log(data, case: str = "normal_known", hyp: NormalKnownHyp | None = None) -> CriterionScore:
    hyp = hyp or NormalKnownHyp()
    x, n, xbar = _prep(data, case)
    v = _pbic_v(n, xbar, case, hyp)
    value = -0.5 * math.log(1 + n) + _log_lr(x, n, xbar, case, hyp) + pbic_extra(v, PBIC_STAR_CAP)
    return CriterionScore("PBICstar", value, case)


def fbf_log(data, case: str = "normal_known", hyp: NormalKnownHyp | None = None) -> CriterionScore:
    """Asymptotic fractional BF with fraction ``b = k1 / n``."""
    hyp = hyp or NormalKnownHyp()
    x, n, xbar = _prep(data, case)
    k1 = 1 if case == "normal_known" else 2
    b = k1 / n
    value = (1 - b) * _log_lr(x, n, xbar, case, hyp) + 0.5 * math.log(b)
    return CriterionScore("FBF", value, case)


def aibf_log(
    data,
    case: str = "normal_known",
    hyp: NormalKnownHyp | None = None,
    plan: SplitPlan | None = None,
) -> CriterionScore:
    """log of the arithmetic mean of uncorrected IBFs over training samples.

    Known sigma averages over single points (all of them unless ``plan``
    says otherwise); unknown sigma averages over the pairs of ``plan``,
    defaulting to every pair.  Tied pairs contribute a zero Bayes factor.
    """
    hyp = hyp or NormalKnownHyp()
    x, n, _ = _prep(data, case)
    if case == "normal_known":
        vals = nk_cibf_all(x, hyp, corrected=False)
        if plan is not None:
            vals = vals[plan.train[:, 0]]
    else:
        plan = plan or nu_pair_plan(n)
        vals = nu_ibf_pairs(x, plan.train)
    return CriterionScore("AIBF", float(arithmetic_avg_log(vals)), case)


def all_criteria(data, case: str = "normal_known", hyp: NormalKnownHyp | None = None, plan=None) -> dict[str, float]:
    return {
        s.method: s.log_value
        for s in (
            bic_log(data, case, hyp),
            pbic_log(data, case, hyp),
            pbic_star_log(data, case, hyp),
            fbf_log(data, case, hyp),
            aibf_log(data, case, hyp, plan),
        )
    }


def criteria_expectation_curves(
    theta: float,
    theta0: float = 0.0,
    sigma: float = 1.0,
    n_grid: Sequence[int] = range(5, 501, 5),
    case: str = "normal_known",
) -> CurveTable:
    """Known-sigma expectation curves, the true mean substituted for the MLE.

    The PBIC terms use the standardized effect ``((theta - theta0)/sigma)**2``
    in ``v``; at the null ``v = 0`` and the limit ``-log(sqrt(2))`` is used.
    """
    if case != "normal_known":
        raise DomainError("analytic expectation curves exist only for the known-sigma case")
    hyp = NormalKnownHyp(theta0, sigma)
    d2 = ((theta - theta0) / sigma) ** 2
    table = CurveTable(
        ["n", "m_cv", "E_log_bic", "E_log_pbic", "E_log_pbic_star", "E_log_fbf", "E_log_cgibf", "E_log_cvbf"],
        config={"experiment": "criteria-expectations", "theta": theta, "theta0": theta0, "sigma": sigma,
                "n_grid": [int(n) for n in n_grid]},
    )
    for n in n_grid:
        n = int(n)
        v = d2 / (1 + n)
        extra = pbic_extra(v) if v > 0 else -0.5 * math.log(2)
        extra_star = pbic_extra(v, PBIC_STAR_CAP) if v > 0 else -0.5 * math.log(2)
        lr = n * d2 / 2
        m = bridge_m(n, 1) if n > math.e else None
        e = nk_expectations(n, m, theta, hyp) if m else None
        table.add(
            n=n,
            m_cv=m if m else 0,
            E_log_bic=-0.5 * math.log(n) + lr,
            E_log_pbic=-0.5 * math.log(1 + n) + lr + extra,
            E_log_pbic_star=-0.5 * math.log(1 + n) + lr + extra_star,
            E_log_fbf=-0.5 * math.log(n) + (1 - 1 / n) * lr,
            E_log_cgibf=(e.E_log_cgibf if e else 0.5 * math.log(math.e / n) + 0.5 * (n - 1) * d2),
            E_log_cvbf=e.E_log_cvbf if e else math.nan,
        )
    return table
