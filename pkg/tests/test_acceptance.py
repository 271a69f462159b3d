"""Acceptance checks, one per criterion, at the stated tolerances.

Run ``python3 tests/test_acceptance.py`` for a plain PASS/FAIL listing;
under pytest each check is a test and also prints its line to the terminal.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np
import pytest
from scipy import integrate

from bridgefactor import bridge_linear_fit, bridge_m, bridge_value
from bridgefactor.cli import main as cli_main
from bridgefactor.concrete import bundled_synthetic_path, concrete_cvbf, load_concrete
from bridgefactor.criteria import bic_log, pbic_log
from bridgefactor.exponential_case import ExpHyp, exp_ibf_log, exp_cvbf_log, exp_sweep, exponential_pair
from bridgefactor.mathcore import make_rng
from bridgefactor.normal_cases import (
    NormalKnownHyp,
    TwoMeanHyp,
    normal_known_pair,
    normal_unknown_pair,
    nk_cvbf_log,
    nu_cvbf_log,
    tm_cibf_sample,
    tm_cvbf_log_data,
    tm_cvbf_sample,
    tm_expectations,
    two_group_labels,
    two_mean_pair,
)
from bridgefactor.simlab import ExperimentConfig, run_consistency, run_roc
from bridgefactor.splitkit import cvbf_log_split, make_splits


@dataclass
class Outcome:
    passed: bool
    detail: str


def _within(x, target, tol):
    return abs(x - target) <= tol


def check_1() -> Outcome:
    import contextlib
    import io

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main(["bridge", "--n", "1030", "--k", "2"])
    first = buf.getvalue().splitlines()[0] if buf.getvalue() else ""
    ok = code == 0 and first.strip() == "165"
    return Outcome(ok, f"cli printed {first!r} (exit {code}); unrounded {bridge_value(1030, 2):.4f}")


def check_2() -> Outcome:
    intercept, slope = bridge_linear_fit(range(5, 501, 5))
    ok = _within(slope, 0.1519, 0.01) and _within(intercept, 6.2622, 0.5)
    return Outcome(ok, f"intercept {intercept:.4f} (6.2622 +/- 0.5), slope {slope:.5f} (0.1519 +/- 0.01)")


def check_3() -> Outcome:
    cv, gi, _ = run_roc(n=100, m_grid=range(5, 96, 5), reps=1000, seed=0, theta0=0.0, theta1=0.25)
    ok_cv = 0.66 <= cv.auc <= 0.76
    ok_gi = 0.98 <= gi.auc <= 1.0
    return Outcome(ok_cv and ok_gi, f"AUC CVBF {cv.auc:.4f} in [0.66, 0.76]: {ok_cv}; "
                                    f"AUC GIBF {gi.auc:.4f} in [0.98, 1.0]: {ok_gi}")


def check_4() -> Outcome:
    grid = np.round(np.arange(0.10, 0.4001, 0.0025), 6)
    t = exp_sweep(grid, n=100, reps=100, seed=0, beta0=0.2, splits=50)
    cv = t.meta["cvbf_null_interval"]
    gi = t.meta["cgibf_null_interval"]
    if cv is None or gi is None:
        return Outcome(False, f"missing interval: CVBF {cv}, GIBF {gi}")
    ok_cv = _within(cv[0], 0.1662, 0.01) and _within(cv[1], 0.2608, 0.01)
    ok_gi = _within(gi[0], 0.1636, 0.01) and _within(gi[1], 0.2640, 0.01)
    nested = gi[0] < cv[0] and cv[1] < gi[1]
    return Outcome(ok_cv and ok_gi and nested,
                   f"CVBF ({cv[0]:.4f}, {cv[1]:.4f}) ok={ok_cv}; GIBF ({gi[0]:.4f}, {gi[1]:.4f}) ok={ok_gi}; "
                   f"CVBF strictly inside GIBF: {nested}")


def _z_table(table):
    out = []
    for r in table.rows:
        z_cv = (r["cvbf_mean"] - r["E_log_cvbf"]) / r["cvbf_se"]
        z_gi = (r["gibf_mean"] - r["E_log_gibf"]) / r["gibf_se"]
        out.append((r["n"], r["m"], z_cv, z_gi))
    return out


def check_5() -> Outcome:
    parts, ok = [], True
    for theta in (0.0, 0.25):
        cfg = ExperimentConfig(case="normal_known", n_grid=[100, 300, 500], reps=1000, splits=50,
                               seed=0, theta=theta)
        for n, m, z_cv, z_gi in _z_table(run_consistency(cfg)):
            ok &= abs(z_cv) <= 3 and abs(z_gi) <= 3
            parts.append(f"theta={theta} n={n} m={m} z_cv={z_cv:+.2f} z_gi={z_gi:+.2f}")
    return Outcome(ok, "; ".join(parts))


def check_6() -> Outcome:
    cfg = ExperimentConfig(case="normal_unknown", n_grid=[100, 300], reps=1000, splits=50, seed=0, theta=0.0)
    parts, ok = [], True
    for n, m, z_cv, z_gi in _z_table(run_consistency(cfg)):
        ok &= m >= 4 and abs(z_cv) <= 3 and abs(z_gi) <= 3
        parts.append(f"n={n} m={m} z_cv={z_cv:+.2f} z_gi={z_gi:+.2f}")
    return Outcome(ok, "; ".join(parts))


def check_7(draws: int = 200_000) -> Outcome:
    n = 200
    mb = bridge_value(n, 2)
    parts, ok = [], True
    for k, (mu1, mu2) in enumerate(((0.0, 0.0), (0.0, 0.5))):
        hyp = TwoMeanHyp(mu1, mu2, 1.0)
        e = tm_expectations(n, mb, hyp)
        rng = make_rng(0, k)
        ci = tm_cibf_sample(rng, n, 2, hyp, draws)
        cv = tm_cvbf_sample(rng, n, mb, hyp, draws)
        z_ci = (ci.mean() - e.E_log_cibf) / (ci.std(ddof=1) / math.sqrt(draws))
        z_cv = (cv.mean() - e.E_log_cvbf_bridged) / (cv.std(ddof=1) / math.sqrt(draws))
        ok &= abs(z_ci) <= 3 and abs(z_cv) <= 3
        parts.append(f"mu=({mu1},{mu2}) z_cibf={z_ci:+.2f} z_cvbf_bridged={z_cv:+.2f}")
    return Outcome(ok, "; ".join(parts))


def geometric_prior_mass(theta0: float = 0.0, sigma: float = 1.0) -> float:
    """Mass of the m=1 geometric intrinsic prior by 2-d quadrature over (theta, x_l).

    The log prior at theta is the expectation, over a training point drawn
    from the alternative at theta, of the log null marginal of that point
    (the flat-prior alternative marginal of one point is 1).
    """

    def log_prior(theta):
        def integrand(x):
            dens = math.exp(-((x - theta) ** 2) / (2 * sigma**2)) / math.sqrt(2 * math.pi * sigma**2)
            log_m0 = -0.5 * math.log(2 * math.pi * sigma**2) - (x - theta0) ** 2 / (2 * sigma**2)
            return dens * log_m0

        val, _ = integrate.quad(integrand, theta - 12 * sigma, theta + 12 * sigma, epsabs=1e-13, epsrel=1e-12)
        return val

    mass, _ = integrate.quad(lambda t: math.exp(log_prior(t)), theta0 - 40 * sigma, theta0 + 40 * sigma,
                             limit=200, epsabs=1e-12)
    return mass


def check_8() -> Outcome:
    c = geometric_prior_mass()
    correction = 1 / c
    ok = _within(correction, math.sqrt(math.e), 1e-3)
    return Outcome(ok, f"prior mass c = {c:.6f}; correction 1/c = {correction:.6f} vs sqrt(e) = {math.sqrt(math.e):.6f}")


def exp_marginal_ratio_oracle(x, beta0, l):
    """IBF from numerically integrated marginals under the 1/beta prior."""
    x = np.asarray(x, dtype=float)
    S, n = x.sum(), x.size
    m1_full, _ = integrate.quad(lambda b: b ** (n - 1) * math.exp(-b * S), 0, np.inf, epsrel=1e-12)
    log_m1_full = math.log(m1_full)
    m1_train, _ = integrate.quad(lambda b: math.exp(-b * x[l]), 0, np.inf, epsrel=1e-12)
    log_m0_full = n * math.log(beta0) - beta0 * S
    log_m0_train = math.log(beta0) - beta0 * x[l]
    return (log_m1_full - log_m0_full) - (math.log(m1_train) - log_m0_train)


def oracle_equivalence(datasets: int = 100) -> tuple[dict[str, float], float]:
    """Worst closed-form vs generic-engine gap per case and the worst IBF relative error."""
    worst = {}
    rng = make_rng(0, 9)
    hyp = NormalKnownHyp(0.3, 1.5)
    eh = ExpHyp(0.2, 0.2)
    pairs = {
        "normal_known": (normal_known_pair(hyp), lambda x, s: nk_cvbf_log(x, hyp, s)),
        "normal_unknown": (normal_unknown_pair(), nu_cvbf_log),
        "exponential": (exponential_pair(eh), lambda x, s: exp_cvbf_log(x, eh, s)),
    }
    for case, (pair, closed) in pairs.items():
        gap = 0.0
        for _ in range(datasets):
            n = int(rng.integers(6, 40))
            m = int(rng.integers(2, n - 1))
            x = rng.exponential(5.0, n) if case == "exponential" else rng.normal(0.5, 2.0, n)
            for split in make_splits(n, m, "random", 3, rng):
                gap = max(gap, abs(float(closed(x, split)) - float(cvbf_log_split(pair, x, split))))
        worst[case] = gap
    gap = 0.0
    pair = two_mean_pair(1.3)
    for _ in range(datasets):
        n = 2 * int(rng.integers(4, 20))
        g = two_group_labels(n)
        y = rng.normal(0.0, 1.3, n) + 0.4 * g
        rows = np.column_stack([y, g])
        for train, valid in make_splits(n, int(rng.integers(4, n - 1)), "random", 3, rng):
            if len(set(g[train])) < 2:
                continue
            a = tm_cvbf_log_data(y, g, (train, valid), 1.3)
            b = cvbf_log_split(pair, rows, (train, valid))
            gap = max(gap, abs(a - b))
    worst["normal_two"] = gap
    rel = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 8))
        x = rng.exponential(3.0, n)
        beta0 = float(rng.uniform(0.1, 1.0))
        for l in range(n):
            a = float(exp_ibf_log(x, ExpHyp(beta0, beta0), l))
            b = exp_marginal_ratio_oracle(x, beta0, l)
            rel = max(rel, abs(math.exp(a - b) - 1))
    return worst, rel


def check_9() -> Outcome:
    worst, rel = oracle_equivalence()
    ok = all(v <= 1e-10 for v in worst.values()) and rel <= 1e-6
    detail = ", ".join(f"{k} max|diff|={v:.2e}" for k, v in worst.items())
    return Outcome(ok, f"{detail}; exponential IBF max rel err {rel:.2e}")


def check_10() -> Outcome:
    x = make_rng(0, 10).normal(1.0, 1.0, 500)
    gap = pbic_log(x).log_value - bic_log(x).log_value
    return Outcome(_within(gap, -0.35, 0.03), f"pbic - bic = {gap:.4f} (-0.35 +/- 0.03)")


def check_11() -> Outcome:
    records = load_concrete(bundled_synthetic_path(), has_header=True)
    t = concrete_cvbf(records, [50, 100, 200, 300, 400, 500, 600], splits=200, rng=make_rng(0))
    med = dict(zip(t.column("m"), t.column("median")))
    iqr = {r["m"]: r["q3"] - r["q1"] for r in t.rows}
    m_b = bridge_m(len(records), 2)
    ok = all(v > 0 for v in med.values()) and iqr[200] < iqr[50] and 100 <= m_b <= 200
    return Outcome(ok, f"bundled synthetic clone ({len(records)} rows): min median {min(med.values()):.2f}; "
                       f"IQR m=200 {iqr[200]:.2f} < m=50 {iqr[50]:.2f}; bridge m {m_b}")


CRITERIA = {i: globals()[f"check_{i}"] for i in range(1, 12)}


@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_acceptance_criterion(criterion, capsys):
    out = CRITERIA[criterion]()
    line = f"[acceptance {criterion:2d}] {'PASS' if out.passed else 'FAIL'}: {out.detail}"
    with capsys.disabled():
        print("\n" + line)
    assert out.passed, line


def main() -> int:
    failed = 0
    for i in sorted(CRITERIA):
        out = CRITERIA[i]()
        failed += not out.passed
        print(f"[acceptance {i:2d}] {'PASS' if out.passed else 'FAIL'}: {out.detail}", flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
