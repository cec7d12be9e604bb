"""Univariate densities used as priors, likelihoods, posteriors and
variational approximations.

Every distribution is an immutable record with ``log_pdf``, ``cdf``,
``sample`` and ``mean``.  Log-densities return ``-inf`` outside the support
rather than raising, so callers can detect support violations numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "Interval",
    "POSITIVE_REALS",
    "REALS",
    "RngState",
    "Distribution",
    "Exponential",
    "Gamma",
    "Normal",
    "Lognormal",
]

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Interval:
    """Open interval ``(lo, hi)``; endpoints may be infinite."""

    lo: float
    hi: float

    def contains(self, v):
        v = np.asarray(v, dtype=float)
        return (v > self.lo) & (v < self.hi)

    def issubset(self, other: Interval) -> bool:
        return self.lo >= other.lo and self.hi <= other.hi

    def __str__(self) -> str:
        return f"({_fmt_endpoint(self.lo)}, {_fmt_endpoint(self.hi)})"


def _fmt_endpoint(v: float) -> str:
    if math.isinf(v):
        return "-inf" if v < 0 else "inf"
    return f"{v:g}"


POSITIVE_REALS = Interval(0.0, math.inf)
REALS = Interval(-math.inf, math.inf)


@dataclass(frozen=True)
class RngState:
    """Explicit random state: a seed plus a substream index.

    Substreams are derived with :class:`numpy.random.SeedSequence` spawn keys,
    so ``(seed, stream)`` pairs give statistically independent PCG64 streams
    and identical pairs replay identical draws.
    """

    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not 0 <= v < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self, *path: int) -> np.random.Generator:
        """Generator for this stream, optionally narrowed by further indices."""
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream, *path))
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, stream: int) -> RngState:
        return RngState(self.seed, stream)


def _as_float(out, scalar_input):
    return float(out) if scalar_input else out


def _check_positive(**params):
    for name, v in params.items():
        if not (np.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be finite and > 0, got {v}")


def _check_finite(**params):
    for name, v in params.items():
        if not np.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v}")


class Distribution:
    """Shared evaluation plumbing; subclasses provide ``_log_pdf_inside``."""

    support: Interval = REALS

    def log_pdf(self, v):
        """Natural-log density at ``v`` (scalar or array); ``-inf`` off-support."""
        arr = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("log_pdf requires finite arguments")
        inside = self.support.contains(arr)
        out = np.full(arr.shape, -np.inf)
        if np.any(inside):
            out[inside] = self._log_pdf_inside(arr[inside])
        return _as_float(out, arr.ndim == 0)

    def pdf(self, v):
        return np.exp(self.log_pdf(v))

    def _log_pdf_inside(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, v):
        raise NotImplementedError

    def sample(self, rng: RngState, n: int) -> np.ndarray:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError


def _check_count(n):
    if int(n) != n or n < 1:
        raise ValueError(f"sample count must be a positive integer, got {n}")


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    support = POSITIVE_REALS

    def __post_init__(self):
        _check_positive(rate=self.rate)

    def _log_pdf_inside(self, v):
        return math.log(self.rate) - self.rate * v

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        return _as_float(np.where(v > 0, -np.expm1(-self.rate * np.maximum(v, 0)), 0.0), v.ndim == 0)

    def sample(self, rng, n):
        _check_count(n)
        return rng.generator().exponential(1.0 / self.rate, size=int(n))

    def mean(self):
        return 1.0 / self.rate

    def variance(self):
        return 1.0 / self.rate**2


@dataclass(frozen=True)
class Gamma(Distribution):
    """Gamma distribution in shape/rate form."""

    shape: float
    rate: float

    support = POSITIVE_REALS

    def __post_init__(self):
        _check_positive(shape=self.shape, rate=self.rate)

    def _log_pdf_inside(self, v):
        a, b = self.shape, self.rate
        return a * math.log(b) - special.gammaln(a) + (a - 1.0) * np.log(v) - b * v

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        return _as_float(special.gammainc(self.shape, self.rate * np.maximum(v, 0)), v.ndim == 0)

    def sample(self, rng, n):
        # numpy's Marsaglia-Tsang squeeze sampler, boosted for shape < 1
        _check_count(n)
        return rng.generator().gamma(self.shape, 1.0 / self.rate, size=int(n))

    def mean(self):
        return self.shape / self.rate

    def variance(self):
        return self.shape / self.rate**2


@dataclass(frozen=True)
class Normal(Distribution):
    loc: float
    scale: float

    support = REALS

    def __post_init__(self):
        _check_finite(loc=self.loc)
        _check_positive(scale=self.scale)

    def _log_pdf_inside(self, v):
        u = (v - self.loc) / self.scale
        return -0.5 * u * u - math.log(self.scale) - LOG_SQRT_2PI

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        return _as_float(special.ndtr((v - self.loc) / self.scale), v.ndim == 0)

    def sample(self, rng, n):
        _check_count(n)
        return self.loc + self.scale * rng.generator().standard_normal(int(n))

    def mean(self):
        return self.loc

    def variance(self):
        return self.scale**2


@dataclass(frozen=True)
class Lognormal(Distribution):
    """Law of ``exp(Y)`` with ``Y ~ Normal(loc, scale)``."""

    loc: float
    scale: float

    support = POSITIVE_REALS

    def __post_init__(self):
        _check_finite(loc=self.loc)
        _check_positive(scale=self.scale)

    def _log_pdf_inside(self, v):
        logv = np.log(v)
        u = (logv - self.loc) / self.scale
        return -0.5 * u * u - math.log(self.scale) - LOG_SQRT_2PI - logv

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            logv = np.log(np.maximum(v, 0))
        return _as_float(special.ndtr((logv - self.loc) / self.scale), v.ndim == 0)

    def sample(self, rng, n):
        _check_count(n)
        return np.exp(self.loc + self.scale * rng.generator().standard_normal(int(n)))

    def mean(self):
        return math.exp(self.loc + 0.5 * self.scale**2)

    def variance(self):
        s2 = self.scale**2
        return math.expm1(s2) * math.exp(2 * self.loc + s2)
