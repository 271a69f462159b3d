import math

import numpy as np
import pytest

from bridgefactor.concrete import (
    ConcreteFormatError,
    ConcreteRecord,
    RankDeficientError,
    as_arrays,
    bundled_synthetic_path,
    concrete_cvbf,
    fan_ratio,
    fit_heteroscedastic,
    fit_homoscedastic,
    fit_ols,
    load_concrete,
    normal_loglik,
    residual_table,
    synthetic_concrete,
    write_concrete,
)
from bridgefactor.mathcore import DomainError, make_rng


@pytest.fixture(scope="module")
def records():
    return load_concrete(bundled_synthetic_path(), has_header=True)


def test_bundled_file_matches_generator(records):
    assert len(records) == 1030
    assert records == synthetic_concrete()


def test_header_and_headerless_agree(records, tmp_path):
    a, b = tmp_path / "h.csv", tmp_path / "n.csv"
    write_concrete(records[:20], a, header=True)
    write_concrete(records[:20], b, header=False)
    assert load_concrete(a, True) == load_concrete(b, False) == records[:20]


@pytest.mark.parametrize("content,match", [
    ("", "no data"),
    ("1,2,3\n", "row 0"),
    ("1,2,3,4,5,6,7,0,9\n", "age"),
    ("1,2,3,4,5,6,7,8,9\n1,2,x,4,5,6,7,8,9\n", "row 1"),
])
def test_malformed_files(tmp_path, content, match):
    p = tmp_path / "bad.csv"
    p.write_text(content)
    with pytest.raises(ConcreteFormatError, match=match):
        load_concrete(p)


def _exact_records(beta, k=40):
    rng = make_rng(31)
    out = []
    for _ in range(k):
        x = list(rng.uniform(1, 100, 8))
        X = np.r_[1.0, x, math.sqrt(x[7])]
        out.append(ConcreteRecord(*x, float(X @ beta)))
    return out


def test_ols_recovers_exact_beta():
    beta = np.array([3.0, 0.1, -0.2, 0.3, 0.05, -0.4, 0.01, 0.02, 0.5, -1.5])
    fit = fit_ols(_exact_records(beta))
    np.testing.assert_allclose(fit.beta, beta, atol=1e-8)


def test_residuals_orthogonal(records):
    fit = fit_ols(records)
    X, _ = as_arrays(records)
    Xn = X / np.linalg.norm(X, axis=0)
    r = fit.residuals / np.linalg.norm(fit.residuals)
    assert np.max(np.abs(Xn.T @ r)) < 1e-6


def test_ols_row_order_invariance(records):
    a = fit_ols(records).beta
    b = fit_ols(records[::-1]).beta
    np.testing.assert_allclose(a, b, rtol=1e-8)


def test_rank_deficiency_names_column():
    recs = [r._replace(x3=0.0) for r in _exact_records(np.ones(10))]
    with pytest.raises(RankDeficientError, match="x3"):
        fit_ols(recs)
    recs = [r._replace(x5=2 * r.x4) for r in _exact_records(np.ones(10))]
    with pytest.raises(RankDeficientError, match="x5"):
        fit_ols(recs)


def test_fan_shape(records):
    fit = fit_ols(records)
    assert fan_ratio(fit) > 1
    t = residual_table(fit)
    assert len(t.rows) == 1030 and t.column("fitted") == sorted(t.column("fitted"))


@pytest.mark.parametrize("r,a0", [([1.0, -1.0], 0.0), ([2.0, -2.0], math.log(4))])
def test_homoscedastic_values(r, a0):
    fit = fit_homoscedastic(r)
    assert fit.a0 == pytest.approx(a0) and fit.a1 == 0
    assert fit.loglik == pytest.approx(normal_loglik(r, a0), abs=1e-10)


def test_homoscedastic_all_zero():
    fit = fit_homoscedastic([0.0, 0.0])
    assert fit.loglik == -math.inf and not fit.converged


@pytest.mark.parametrize("a1", [0.0, 0.1])
def test_heteroscedastic_recovery(a1):
    rng = make_rng(32, int(a1 * 10))
    z = rng.uniform(0, 80, 1000)
    r = rng.normal(0, 1, 1000) * np.exp(0.5 * (0.0 + a1 * z))
    fit = fit_heteroscedastic(r, z)
    assert fit.converged and fit.diagnostics["grad_norm"] < 1e-8
    if a1 == 0:
        assert abs(fit.a1) < 0.05
    else:
        assert fit.a1 == pytest.approx(a1, rel=0.1)
    assert fit.loglik == pytest.approx(normal_loglik(r, fit.log_var(z)), abs=1e-8)
    assert fit.loglik >= fit_homoscedastic(r).loglik


def test_heteroscedastic_fallback_path():
    rng = make_rng(33)
    z = rng.uniform(0, 10, 200)
    r = rng.normal(0, 1, 200) * np.exp(0.1 * z)
    fit = fit_heteroscedastic(r, z, max_iter=0)
    assert fit.diagnostics["method"] == "nelder-mead"
    full = fit_heteroscedastic(r, z)
    assert fit.loglik == pytest.approx(full.loglik, abs=1e-6)


def test_heteroscedastic_preconditions():
    with pytest.raises(DomainError):
        fit_heteroscedastic([1.0, 2.0], [3.0, 3.0])
    with pytest.raises(DomainError):
        fit_heteroscedastic([1.0], [1.0])


def test_concrete_cvbf_small(records):
    t = concrete_cvbf(records, [50, 200], splits=20, rng=make_rng(1))
    assert t.columns == ["m", "median", "q1", "q3", "n_splits_used", "skipped"]
    assert all(r["median"] > 0 for r in t.rows)
    again = concrete_cvbf(records, [50, 200], splits=20, rng=make_rng(1), threads=3)
    assert again.to_csv() == t.to_csv()
    g = concrete_cvbf(records, [100], splits=10, rng=make_rng(1), beta_mode="global")
    assert g.rows[0]["n_splits_used"] == 10


def test_concrete_cvbf_skips_singular_splits():
    recs = synthetic_concrete(60, seed=2)
    # x3 is nonzero on only two rows, so most small training sets lose the column
    recs = [r._replace(x3=(1.0 if i < 2 else 0.0)) for i, r in enumerate(recs)]
    t = concrete_cvbf(recs, [15], splits=30, rng=make_rng(3))
    r = t.rows[0]
    assert r["skipped"] > 0 and r["skipped"] + r["n_splits_used"] == 30


def test_concrete_cvbf_grid_bounds(records):
    with pytest.raises(DomainError):
        concrete_cvbf(records, [11], splits=2)
    with pytest.raises(DomainError):
        concrete_cvbf(records, [50], splits=2, beta_mode="fixed")
