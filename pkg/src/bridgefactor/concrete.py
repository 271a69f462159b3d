"""Homoscedastic vs heteroscedastic error models for the concrete-strength
regression, compared by CVBF across training sizes.

The mean model is linear in the eight mix/age covariates plus ``sqrt(age)``.
The alternative error model lets the log variance move linearly with the
fitted mean ``Z``: ``eps_i ~ N(0, exp(a0 + a1 * Z_i))``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize

from .curves import CurveTable
from .mathcore import DomainError, make_rng
from .splitkit import make_splits

DESIGN_COLUMNS = ("intercept", "x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "sqrt_x8")
NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 200
SYNTHETIC_FILE = "concrete_synthetic.csv"
LOG_2PI = math.log(2 * math.pi)


class ConcreteRecord(NamedTuple):
    x1: float  # cement
    x2: float  # blast furnace slag
    x3: float  # fly ash
    x4: float  # water
    x5: float  # superplasticizer
    x6: float  # coarse aggregate
    x7: float  # fine aggregate
    x8: float  # age, days
    y: float  # compressive strength


class ConcreteFormatError(DomainError):
    pass


class RankDeficientError(DomainError):
    pass


def load_concrete(path: str | Path, has_header: bool = False) -> list[ConcreteRecord]:
    """Read nine numeric columns (x1..x8, y) per row from a CSV file."""
    path = Path(path)
    records = []
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if has_header and rows:
        rows = rows[1:]
    for i, row in enumerate(rows):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 9:
            raise ConcreteFormatError(f"row {i}: expected 9 columns, got {len(row)}: {row!r}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise ConcreteFormatError(f"row {i}: non-numeric field in {row!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ConcreteFormatError(f"row {i}: non-finite field in {row!r}")
        if vals[7] <= 0:
            raise ConcreteFormatError(f"row {i}: age must be positive, got {vals[7]}")
        records.append(ConcreteRecord(*vals))
    if not records:
        raise ConcreteFormatError(f"{path}: no data rows")
    return records


def as_arrays(records: Sequence[ConcreteRecord]) -> tuple[np.ndarray, np.ndarray]:
    """(design matrix, response) for a record sequence."""
    a = np.asarray(records, dtype=float)
    if a.ndim != 2 or a.shape[1] != 9:
        raise DomainError("records must have nine fields")
    X = np.column_stack([np.ones(len(a)), a[:, :8], np.sqrt(a[:, 7])])
    return X, a[:, 8]


@dataclass
class RegressionFit:
    beta: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray


def _check_rank(X: np.ndarray) -> None:
    scale = np.linalg.norm(X, axis=0)
    if np.any(scale == 0):
        j = int(np.flatnonzero(scale == 0)[0])
        raise RankDeficientError(f"design column {DESIGN_COLUMNS[j]} is identically zero")
    r = np.linalg.qr(X / scale, mode="r")
    d = np.abs(np.diag(r))
    tol = max(X.shape) * np.finfo(float).eps * d.max()
    if np.any(d <= tol):
        j = int(np.flatnonzero(d <= tol)[0])
        raise RankDeficientError(f"design is rank deficient: column {DESIGN_COLUMNS[j]} is collinear with earlier columns")


def fit_ols_arrays(X: np.ndarray, y: np.ndarray) -> RegressionFit:
    if X.shape[0] < X.shape[1] + 1:
        raise DomainError(f"need at least {X.shape[1] + 1} rows, got {X.shape[0]}")
    _check_rank(X)
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    fitted = X @ beta
    return RegressionFit(beta, y - fitted, fitted)


def fit_ols(records: Sequence[ConcreteRecord]) -> RegressionFit:
    """Least squares over the 10-column design (intercept, x1..x8, sqrt(x8))."""
    return fit_ols_arrays(*as_arrays(records))


@dataclass
class VarianceModelFit:
    a0: float
    a1: float
    loglik: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    def log_var(self, z) -> np.ndarray:
        return self.a0 + self.a1 * np.asarray(z, dtype=float)


def normal_loglik(r, log_var) -> float:
    r = np.asarray(r, dtype=float)
    lv = np.broadcast_to(np.asarray(log_var, dtype=float), r.shape)
    return float(np.sum(-0.5 * LOG_2PI - 0.5 * lv - 0.5 * r**2 * np.exp(-lv)))


def fit_homoscedastic(residuals) -> VarianceModelFit:
    r = np.asarray(residuals, dtype=float)
    if r.size < 1:
        raise DomainError("need at least one residual")
    k = r.size
    ms = float(np.mean(r**2))
    if ms == 0:
        return VarianceModelFit(-math.inf, 0.0, -math.inf, False, {"reason": "all residuals are zero"})
    a0 = math.log(ms)
    return VarianceModelFit(a0, 0.0, -0.5 * k * LOG_2PI - 0.5 * k * a0 - 0.5 * k, True)


def _het_terms(a, r2, z):
    eta = a[0] + a[1] * z
    w = r2 * np.exp(-eta)
    ll = float(np.sum(-0.5 * eta - 0.5 * w)) - 0.5 * r2.size * LOG_2PI
    u = 0.5 * (w - 1)
    grad = np.array([u.sum(), (u * z).sum()])
    hw = -0.5 * w
    hess = np.array([[hw.sum(), (hw * z).sum()], [(hw * z).sum(), (hw * z * z).sum()]])
    return ll, grad, hess


def fit_heteroscedastic(
    residuals, fitted, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER
) -> VarianceModelFit:
    """MLE of (a0, a1) by damped Newton from (log mean r^2, 0).

    Falls back to Nelder-Mead if Newton fails to reach gradient norm ``tol``.
    """
    r = np.asarray(residuals, dtype=float)
    z = np.asarray(fitted, dtype=float)
    if r.size < 2 or r.shape != z.shape:
        raise DomainError("need at least two residuals with matching fitted values")
    if np.ptp(z) == 0:
        raise DomainError("fitted values are all equal; a1 is not identified")
    r2 = r**2
    if np.all(r2 == 0):
        return VarianceModelFit(-math.inf, 0.0, -math.inf, False, {"reason": "all residuals are zero"})
    a = np.array([math.log(r2.mean()), 0.0])
    ll, grad, hess = _het_terms(a, r2, z)
    it = 0
    while np.linalg.norm(grad) >= tol and it < max_iter:
        it += 1
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        while t > 1e-10:
            cand = a + t * step
            ll_c, g_c, h_c = _het_terms(cand, r2, z)
            if np.isfinite(ll_c) and ll_c >= ll - 1e-12 * abs(ll):
                break
            t /= 2
        else:
            break
        a, ll, grad, hess = cand, ll_c, g_c, h_c
    gnorm = float(np.linalg.norm(grad))
    if gnorm < tol:
        return VarianceModelFit(float(a[0]), float(a[1]), ll, True,
                                {"method": "newton", "iterations": it, "grad_norm": gnorm})
    res = minimize(lambda p: -_het_terms(p, r2, z)[0], a, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 20_000})
    ll_nm, g_nm, _ = _het_terms(res.x, r2, z)
    if ll_nm > ll:
        a, ll, gnorm = res.x, ll_nm, float(np.linalg.norm(g_nm))
    return VarianceModelFit(float(a[0]), float(a[1]), ll, gnorm < tol,
                            {"method": "nelder-mead", "iterations": it, "grad_norm": gnorm,
                             "simplex_message": str(res.message)})


# ---------------------------------------------------------------------------


def split_log_cvbf(X, y, train, valid, beta_global=None) -> float:
    """Validation log-likelihood of the heteroscedastic model minus the homoscedastic one."""
    if beta_global is None:
        fit = fit_ols_arrays(X[train], y[train])
        beta, r_t, z_t = fit.beta, fit.residuals, fit.fitted
    else:
        beta = beta_global
        z_t = X[train] @ beta
        r_t = y[train] - z_t
    het = fit_heteroscedastic(r_t, z_t)
    hom = fit_homoscedastic(r_t)
    z_v = X[valid] @ beta
    r_v = y[valid] - z_v
    return normal_loglik(r_v, het.log_var(z_v)) - normal_loglik(r_v, hom.a0)


def concrete_cvbf(
    records: Sequence[ConcreteRecord],
    m_grid: Sequence[int] = (50, 100, 200, 300, 400, 500, 600),
    splits: int = 200,
    rng=None,
    beta_mode: str = "per-split",
    threads: int = 1,
) -> CurveTable:
    """Per-split log CVBF distribution (median, quartiles) at each training size.

    ``beta_mode="per-split"`` refits the regression on every training set;
    ``"global"`` fixes it once on the full data.  Splits whose training design
    is singular are skipped and counted.
    """
    if beta_mode not in ("per-split", "global"):
        raise DomainError(f"beta_mode must be 'per-split' or 'global', got {beta_mode!r}")
    X, y = as_arrays(records)
    n = len(y)
    m_grid = [int(m) for m in m_grid]
    if not m_grid:
        raise DomainError("empty m grid")
    bad = [m for m in m_grid if not (12 <= m <= n - 12)]
    if bad:
        raise DomainError(f"training sizes {bad} outside [12, {n - 12}]")
    rng = make_rng(0) if rng is None else rng
    beta_global = fit_ols_arrays(X, y).beta if beta_mode == "global" else None
    plans = [make_splits(n, m, "random", splits, rng) for m in m_grid]

    def one(args):
        train, valid = args
        try:
            return split_log_cvbf(X, y, train, valid, beta_global)
        except RankDeficientError:
            return None

    table = CurveTable(
        ["m", "median", "q1", "q3", "n_splits_used", "skipped"],
        config={"experiment": "concrete", "n": n, "m_grid": m_grid, "splits": splits, "beta_mode": beta_mode},
    )
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for m, plan in zip(m_grid, plans):
            jobs = list(plan)
            vals = list(pool.map(one, jobs)) if pool else [one(j) for j in jobs]
            ok = np.array([v for v in vals if v is not None])
            skipped = len(vals) - ok.size
            if ok.size:
                q1, med, q3 = np.quantile(ok, [0.25, 0.5, 0.75])
            else:
                q1 = med = q3 = math.nan
            table.add(m=m, median=float(med), q1=float(q1), q3=float(q3), n_splits_used=int(ok.size), skipped=skipped)
    finally:
        if pool:
            pool.shutdown()
    return table


def residual_table(fit: RegressionFit) -> CurveTable:
    """Residual-vs-fitted pairs, sorted by fitted value."""
    order = np.argsort(fit.fitted, kind="stable")
    table = CurveTable(["fitted", "residual"], config={"experiment": "concrete-residuals"})
    for i in order:
        table.add(fitted=float(fit.fitted[i]), residual=float(fit.residuals[i]))
    table.meta["fan_ratio"] = fan_ratio(fit)
    return table


def fan_ratio(fit: RegressionFit) -> float:
    """Residual variance in the top fitted-value quartile over the bottom quartile."""
    lo, hi = np.quantile(fit.fitted, [0.25, 0.75])
    top = fit.residuals[fit.fitted >= hi]
    bottom = fit.residuals[fit.fitted <= lo]
    return float(top.var() / bottom.var())


# ---------------------------------------------------------------------------
# synthetic stand-in with the same column layout

_SYN_BETA = np.array([4.0, 0.075, 0.055, 0.035, -0.14, 0.2, 0.006, 0.007, -0.03, 2.4])
_SYN_A = (1.5, 0.04)
_AGES = np.array([1, 3, 7, 14, 28, 56, 90, 180, 270, 365], dtype=float)
_AGE_P = np.array([0.02, 0.13, 0.12, 0.06, 0.41, 0.09, 0.06, 0.03, 0.01, 0.07])


def synthetic_concrete(n: int = 1030, seed: int = 20240607) -> list[ConcreteRecord]:
    """Mix designs in realistic ranges with strength noise variance ``exp(a0 + a1 Z)``."""
    rng = make_rng(seed)
    cement = rng.uniform(100, 540, n)
    slag = np.where(rng.random(n) < 0.55, rng.uniform(10, 360, n), 0.0)
    ash = np.where(rng.random(n) < 0.45, rng.uniform(20, 200, n), 0.0)
    water = rng.uniform(120, 247, n)
    sp = np.where(rng.random(n) < 0.65, rng.uniform(1, 32, n), 0.0)
    coarse = rng.uniform(801, 1145, n)
    fine = rng.uniform(594, 993, n)
    age = rng.choice(_AGES, size=n, p=_AGE_P)
    X = np.column_stack([np.ones(n), cement, slag, ash, water, sp, coarse, fine, age, np.sqrt(age)])
    z = X @ _SYN_BETA
    y = z + rng.normal(0, 1, n) * np.exp(0.5 * (_SYN_A[0] + _SYN_A[1] * z))
    cols = np.column_stack([cement, slag, ash, water, sp, coarse, fine, age, y])
    return [ConcreteRecord(*map(float, row)) for row in cols]


def write_concrete(records: Sequence[ConcreteRecord], path: str | Path, header: bool = True) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(ConcreteRecord._fields)
        for r in records:
            w.writerow([format(v, ".17g") for v in r])


def bundled_synthetic_path() -> Path:
    return Path(str(resources.files("bridgefactor") / "data" / SYNTHETIC_FILE))
