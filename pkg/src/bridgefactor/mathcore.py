"""Special functions and seeded sampling shared by the case modules.

Random streams are plain :class:`numpy.random.Generator` objects built on
PCG64.  Sub-streams are keyed by integer tuples through ``SeedSequence``
spawn keys, so replicate ``(n, r)`` gets the same draws no matter which
thread evaluates it or in what order.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

EULER_GAMMA = 0.57721566490153286061

__all__ = [
    "EULER_GAMMA",
    "DomainError",
    "digamma",
    "log_gamma",
    "make_rng",
    "sample_normal",
    "sample_chisq",
    "sample_exponential",
]


class DomainError(ValueError):
    """Argument outside the domain of a function or distribution."""


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream ``(seed, *key)``.

    ``make_rng(s)`` and ``make_rng(s, 0)`` are different streams; every
    distinct key tuple maps to an independent PCG64 state.
    """
    if seed < 0 or seed >= 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    for k in key:
        if k < 0:
            raise DomainError(f"stream key entries must be nonnegative, got {key}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def digamma(x):
    """psi(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"digamma requires x > 0, got {x!r}")
    out = special.digamma(arr)
    return float(out) if out.ndim == 0 else out


def log_gamma(x):
    """log Gamma(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    out = special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def _unwrap(draw, size):
    return float(draw) if size is None else draw


def sample_normal(rng: np.random.Generator, mean: float, sd: float, size=None):
    if not sd > 0 or not math.isfinite(mean):
        raise DomainError(f"normal needs finite mean and sd > 0, got ({mean}, {sd})")
    return _unwrap(rng.normal(mean, sd, size), size)


def sample_exponential(rng: np.random.Generator, rate: float, size=None):
    if not rate > 0:
        raise DomainError(f"exponential rate must be > 0, got {rate}")
    return _unwrap(rng.exponential(1.0 / rate, size), size)


def sample_chisq(rng: np.random.Generator, df: float, noncentrality: float = 0.0, size=None):
    """Chi-square draw with ``df`` degrees of freedom and given noncentrality.

    For ``df >= 1`` the noncentral part is ``(Z + sqrt(lam))**2`` plus an
    independent central chi-square on ``df - 1``; fractional ``df < 1`` uses
    the Poisson mixture ``chi2(df + 2K)``, ``K ~ Poisson(lam / 2)``.
    """
    if not df > 0:
        raise DomainError(f"chi-square df must be > 0, got {df}")
    if not noncentrality >= 0:
        raise DomainError(f"noncentrality must be >= 0, got {noncentrality}")
    lam = float(noncentrality)
    if lam == 0.0:
        return _unwrap(rng.chisquare(df, size), size)
    if df >= 1:
        z = rng.standard_normal(size)
        out = (z + math.sqrt(lam)) ** 2
        if df > 1:
            out = out + rng.chisquare(df - 1, size)
        return _unwrap(out, size)
    k = rng.poisson(lam / 2.0, size)
    return _unwrap(rng.chisquare(df + 2 * k, size), size)
