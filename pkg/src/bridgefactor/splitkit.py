"""Training/validation splits and the generic cross-validation Bayes factor.

Indices are 0-based.  A split is a ``(train, valid)`` pair of index arrays;
a :class:`SplitPlan` stores ``L`` of them as two stacked integer matrices so
the closed-form case code can evaluate every split in one vectorized pass.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import logsumexp

DEFAULT_CAP = 100_000
DEFAULT_TRIM = 0.05

METHODS = ("CVBF", "IBF", "cIBF", "GIBF", "cGIBF", "BIC", "PBIC", "PBICstar", "FBF", "AIBF")


class SplitError(ValueError):
    """A split plan cannot be built or a split cannot be evaluated."""


class DegenerateSplitError(SplitError):
    """Model fit failed on a training set (e.g. zero spread)."""


class LogBF(float):
    """Log Bayes factor of model 1 over model 0, tagged with its method.

    Behaves as a plain float.  ``cause`` explains a non-finite value.
    """

    orientation = "1 over 0"

    def __new__(cls, value, method: str = "CVBF", cause: str | None = None):
        if method not in METHODS:
            raise ValueError(f"unknown method tag {method!r}")
        obj = super().__new__(cls, value)
        obj.method = method
        obj.cause = cause
        return obj

    def __repr__(self) -> str:
        extra = f", cause={self.cause!r}" if self.cause else ""
        return f"LogBF({float(self)!r}, method={self.method!r}{extra})"


def as_sample(data) -> np.ndarray:
    """Validate a sample; rows on axis 0 are observations (1-d values or 2-d records)."""
    x = np.asarray(data, dtype=float)
    if x.ndim not in (1, 2) or x.shape[0] < 1:
        raise ValueError("a sample is a nonempty sequence of observations")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample values must be finite")
    return x


@dataclass(frozen=True)
class SplitPlan:
    n: int
    m: int
    train: np.ndarray  # (L, m)
    valid: np.ndarray  # (L, n - m)
    mode: str = "exhaustive"

    def __len__(self) -> int:
        return self.train.shape[0]

    def __iter__(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        return zip(self.train, self.valid)

    def __getitem__(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self.train[i], self.valid[i]


def _complements(n: int, train: np.ndarray) -> np.ndarray:
    mask = np.ones((train.shape[0], n), dtype=bool)
    np.put_along_axis(mask, train, False, axis=1)
    L = train.shape[0]
    return np.nonzero(mask)[1].reshape(L, n - train.shape[1])


def make_splits(
    n: int,
    m: int,
    mode: str = "exhaustive",
    count: int | None = None,
    rng: np.random.Generator | None = None,
    cap: int = DEFAULT_CAP,
    min_train: int = 1,
) -> SplitPlan:
    """Build ``L`` train/validation partitions of ``range(n)`` with ``m`` training points.

    ``exhaustive`` lists all ``C(n, m)`` training sets in lexicographic order
    and refuses when that exceeds ``cap``.  ``random`` draws ``count``
    distinct training sets uniformly; asking for at least ``C(n, m)`` returns
    every set.
    """
    if not (1 <= m <= n - 1):
        raise SplitError(f"training size m={m} must satisfy 1 <= m <= n-1 (n={n})")
    if m < min_train:
        raise SplitError(f"training size m={m} is below the case minimum {min_train}")
    total = math.comb(n, m)
    if mode == "random":
        if count is None or count < 1:
            raise SplitError("random mode needs a positive split count")
        if rng is None:
            raise SplitError("random mode needs an rng")
        if count >= total and total <= cap:
            mode = "exhaustive"
        else:
            return _random_plan(n, m, min(count, total), rng)
    if mode != "exhaustive":
        raise SplitError(f"unknown split mode {mode!r}")
    if total > cap:
        raise SplitError(
            f"C({n},{m}) = {total} exceeds the exhaustive cap {cap}; use random mode"
        )
    train = np.array(list(itertools.combinations(range(n), m)), dtype=np.intp).reshape(total, m)
    return SplitPlan(n, m, train, _complements(n, train), "exhaustive")


def _random_plan(n: int, m: int, count: int, rng: np.random.Generator) -> SplitPlan:
    chosen: list[np.ndarray] = []
    seen: set[bytes] = set()
    while len(chosen) < count:
        need = count - len(chosen)
        draws = np.sort(np.argsort(rng.random((need, n)), axis=1)[:, :m], axis=1)
        for row in draws:
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                chosen.append(row)
    train = np.asarray(chosen, dtype=np.intp).reshape(count, m)
    return SplitPlan(n, m, train, _complements(n, train), "random")


@dataclass(frozen=True)
class ParametricModel:
    """MLE fit on training points plus a pointwise log-likelihood."""

    fit: Callable[[np.ndarray], tuple]
    loglik: Callable[[tuple, np.ndarray], np.ndarray]
    min_train: int = 1


@dataclass(frozen=True)
class ParametricPair:
    model0: ParametricModel
    model1: ParametricModel

    @property
    def min_train(self) -> int:
        return max(self.model0.min_train, self.model1.min_train)

    def swapped(self) -> "ParametricPair":
        return ParametricPair(self.model1, self.model0)


def cvbf_log_split(pair: ParametricPair, data, split) -> LogBF:
    """Validation log-likelihood ratio with both models fitted on the training part."""
    x = as_sample(data)
    train, valid = (np.asarray(s, dtype=np.intp) for s in split)
    if valid.size == 0:
        raise SplitError("empty validation set")
    if train.size < pair.min_train:
        raise SplitError(f"training set of {train.size} is below the pair minimum {pair.min_train}")
    xt, xv = x[train], x[valid]
    try:
        p0 = pair.model0.fit(xt)
        p1 = pair.model1.fit(xt)
    except (ZeroDivisionError, FloatingPointError) as exc:
        raise DegenerateSplitError(str(exc)) from exc
    value = np.sum(pair.model1.loglik(p1, xv)) - np.sum(pair.model0.loglik(p0, xv))
    return LogBF(value, "CVBF")


def cvbf_log(pair: ParametricPair, data, plan: SplitPlan) -> LogBF:
    """Geometric average of split-wise CVBFs over a plan."""
    return geometric_avg_log([cvbf_log_split(pair, data, s) for s in plan])


def _method_of(values: Sequence[float], default: str) -> str:
    tags = {getattr(v, "method", None) for v in values}
    return tags.pop() if len(tags) == 1 and None not in tags else default


def geometric_avg_log(values: Sequence[float]) -> LogBF:
    """Mean of log Bayes factors (log of their geometric mean)."""
    if len(values) == 0:
        raise ValueError("cannot average an empty list")
    arr = np.asarray(values, dtype=float)
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise ValueError(f"non-finite log Bayes factor at split index {int(bad[0])}")
    method = _method_of(values, "CVBF")
    return LogBF(float(np.mean(arr)), method)


def arithmetic_avg_log(values: Sequence[float]) -> LogBF:
    """log of the arithmetic mean of the Bayes factors, via log-sum-exp."""
    if len(values) == 0:
        raise ValueError("cannot average an empty list")
    arr = np.asarray(values, dtype=float)
    return LogBF(float(logsumexp(arr) - math.log(arr.size)), "AIBF")


def trimmed_mean(values: Sequence[float], trim_fraction: float = DEFAULT_TRIM) -> float:
    """Mean after dropping ``floor(trim_fraction * L)`` order statistics at each end."""
    if not (0.0 <= trim_fraction < 0.5):
        raise ValueError(f"trim_fraction must lie in [0, 0.5), got {trim_fraction}")
    arr = np.sort(np.asarray(values, dtype=float))
    k = int(math.floor(trim_fraction * arr.size))
    if arr.size - 2 * k < 1:
        raise ValueError("trimming leaves no values")
    return float(np.mean(arr[k: arr.size - k]))
