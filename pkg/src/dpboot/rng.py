"""Deterministic random streams, distribution samplers, and quantiles.

Every source of randomness in the package flows through a
:class:`RandomStream`, which is addressed by a 64-bit master seed plus a
path of non-negative integers. Identical (seed, path) pairs reproduce the
same draws bit for bit; distinct paths give statistically independent
streams, so parallel trials and bootstrap replicates can each own a
substream without sharing mutable state.

Sample vectors throughout the package are plain 1-D (or 2-D for
multivariate data) float arrays with finite entries.
"""

from __future__ import annotations

import math
from statistics import NormalDist

import numpy as np

from .errors import EmptyInputError, InvalidParameterError

__all__ = [
    "RandomStream",
    "sample_laplace",
    "sample_gaussian",
    "sample_poisson",
    "sample_gamma",
    "sample_bernoulli",
    "sample_uniform",
    "empirical_quantile",
    "std_normal_quantile",
]

_STD_NORMAL = NormalDist()


class RandomStream:
    """A reproducible random stream identified by (master_seed, path).

    The descriptor is conceptually immutable; drawing samples only
    advances an internal cursor. Create substreams freely across threads,
    but treat each individual instance as single-consumer.
    """

    def __init__(self, master_seed: int, path: tuple[int, ...] = ()):
        self.master_seed = int(master_seed)
        self.path = tuple(int(p) for p in path)
        if self.master_seed < 0:
            raise InvalidParameterError("master_seed must be non-negative")
        if any(p < 0 for p in self.path):
            raise InvalidParameterError("stream path entries must be non-negative")
        self._gen: np.random.Generator | None = None

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator, created lazily."""
        if self._gen is None:
            seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.PCG64(seq))
        return self._gen

    def substream(self, *path: int) -> "RandomStream":
        """Derive an independent stream at ``self.path + path``."""
        return RandomStream(self.master_seed, self.path + path)

    def __repr__(self) -> str:
        return f"RandomStream(master_seed={self.master_seed}, path={self.path})"


def _check_finite_scalar(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value}")
    return value


def sample_laplace(loc: float, scale: float, rng: RandomStream, size=None):
    """Draw from Laplace(loc, scale), density (2b)^-1 exp(-|z - u| / b).

    ``scale`` must be positive and finite; degenerate or infinite scales
    are the caller's business (the privacy layer handles the noiseless
    case before reaching here).
    """
    loc = _check_finite_scalar("loc", loc)
    scale = float(scale)
    if not math.isfinite(scale) or scale <= 0:
        raise InvalidParameterError(f"laplace scale must be positive and finite, got {scale}")
    return rng.generator.laplace(loc, scale, size)


def sample_gaussian(mean: float, sd: float, rng: RandomStream, size=None):
    """Draw from N(mean, sd^2); sd = 0 returns the mean exactly."""
    mean = _check_finite_scalar("mean", mean)
    sd = float(sd)
    if not math.isfinite(sd) or sd < 0:
        raise InvalidParameterError(f"sd must be non-negative and finite, got {sd}")
    if sd == 0:
        return mean if size is None else np.full(size, mean)
    return rng.generator.normal(mean, sd, size)


def sample_poisson(rate: float, rng: RandomStream, size=None):
    """Draw non-negative integer counts from Poisson(rate)."""
    rate = float(rate)
    if not math.isfinite(rate) or rate <= 0:
        raise InvalidParameterError(f"poisson rate must be positive and finite, got {rate}")
    return rng.generator.poisson(rate, size)


def sample_gamma(shape: float, scale: float, rng: RandomStream, size=None):
    """Draw from Gamma(shape, scale) with mean shape * scale."""
    shape = float(shape)
    scale = float(scale)
    if not math.isfinite(shape) or shape <= 0:
        raise InvalidParameterError(f"gamma shape must be positive and finite, got {shape}")
    if not math.isfinite(scale) or scale <= 0:
        raise InvalidParameterError(f"gamma scale must be positive and finite, got {scale}")
    return rng.generator.gamma(shape, scale, size)


def sample_bernoulli(p: float, rng: RandomStream, size=None):
    """Draw 0/1 values with success probability p."""
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise InvalidParameterError(f"bernoulli p must lie in [0, 1], got {p}")
    out = rng.generator.binomial(1, p, size)
    return int(out) if size is None else out


def sample_uniform(lo: float, hi: float, rng: RandomStream, size=None):
    """Draw uniformly from [lo, hi]."""
    lo = _check_finite_scalar("lo", lo)
    hi = _check_finite_scalar("hi", hi)
    if lo > hi:
        raise InvalidParameterError(f"uniform bounds must satisfy lo <= hi, got ({lo}, {hi})")
    if lo == hi:
        return lo if size is None else np.full(size, lo)
    return rng.generator.uniform(lo, hi, size)


def _order_statistic_index(level: float, count: int) -> int:
    # ceil(level * count) with a relative snap so that products that are
    # integers up to float rounding (0.975 * 200 and friends) do not get
    # bumped to the next order statistic.
    x = level * count
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, abs(x)):
        k = int(nearest)
    else:
        k = math.ceil(x)
    return min(max(k, 1), count)


def empirical_quantile(samples, gamma: float) -> float:
    """The 1 - gamma empirical quantile: the ceil((1-gamma)*B)-th order statistic.

    The result is always a realized element of ``samples`` (1-indexed
    ceiling convention), so interval endpoints built from it stay inside
    the sample range.
    """
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise InvalidParameterError(f"gamma must lie in (0, 1), got {gamma}")
    values = np.asarray(samples, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInputError("empirical_quantile needs at least one sample")
    if not np.all(np.isfinite(values)):
        raise InvalidParameterError("samples must be finite")
    k = _order_statistic_index(1.0 - gamma, values.size)
    return float(np.sort(values)[k - 1])


def std_normal_quantile(gamma: float) -> float:
    """The 1 - gamma quantile z of the standard normal: Phi(z) = 1 - gamma."""
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise InvalidParameterError(f"gamma must lie in (0, 1), got {gamma}")
    # Phi(z) = 1 - gamma  <=>  z = -Phi^{-1}(gamma); the negated form keeps
    # full precision for small gamma and makes the antisymmetry exact.
    return -_STD_NORMAL.inv_cdf(gamma)
