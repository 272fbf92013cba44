"""Comparison interval methods: plug-in asymptotic CIs and subsample-and-aggregate.

The subsample-and-aggregate procedure partitions the data into M disjoint
subsets after a seeded shuffle, clamps each subset estimate to rescaled
bounds, releases the clamped mean with Laplace noise at half the budget,
estimates per-subset variability with an inner resampling bootstrap, and
releases the mean of the clamped variance estimates with the other half.
The interval is a normal interval around the private mean whose variance
combines the averaged inner variance with the exact variance of the
aggregation noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError, InvalidParameterError
from .privacy import laplace_mechanism
from .rng import RandomStream, std_normal_quantile

__all__ = ["fisher_ci", "SAConfig", "subsample_aggregate_ci", "default_subset_count"]

_INNER_VAR_FLOOR = 1e-6


def fisher_ci(theta_hat_j: float, sigma_j: float, alpha: float):
    """Symmetric interval theta_j +/- z_{alpha/2} * sigma_j."""
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    sigma_j = float(sigma_j)
    if not (math.isfinite(sigma_j) and sigma_j >= 0):
        raise InvalidParameterError(f"sigma must be non-negative and finite, got {sigma_j}")
    center = float(theta_hat_j)
    half = std_normal_quantile(alpha / 2.0) * sigma_j
    return (center - half, center + half)


def default_subset_count(n: int) -> int:
    """Sublinear default for the number of subsets: ceil(n ** 0.4)."""
    return max(2, math.ceil(int(n) ** 0.4))


@dataclass(frozen=True)
class SAConfig:
    """Inputs of the subsample-and-aggregate interval procedure."""

    m_subsets: int
    x_min: float
    x_max: float
    l_min: float
    l_max: float
    var_max: float
    epsilon: float
    alpha: float
    b_inner: int = 100

    def __post_init__(self):
        if self.m_subsets < 2:
            raise InvalidConfigError(f"need at least 2 subsets, got {self.m_subsets}")
        if not self.x_min <= self.x_max:
            raise InvalidConfigError("x_min must not exceed x_max")
        if not self.l_min < self.l_max:
            raise InvalidConfigError("need l_min < l_max")
        if not self.var_max > 0:
            raise InvalidConfigError("var_max must be positive")
        if not (0.0 < self.alpha < 1.0):
            raise InvalidConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if math.isnan(self.epsilon) or self.epsilon <= 0:
            raise InvalidConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.b_inner < 2:
            raise InvalidConfigError("b_inner must be at least 2")


def _rescaled_settings(n: int, m: int, l_min: float, l_max: float, var_max: float):
    """Subset-size rescaling of the clamp bounds and the two sensitivities.

    Estimates are clamped to [l_min, l_max] / sqrt(n/m) and inner
    variances capped at var_max / (n/m); the private mean of M clamped
    estimates then has sensitivity (clamp width) / M, and the private mean
    of M capped variances has sensitivity (variance cap) / M.
    """
    ratio = n / m
    est_scale = math.sqrt(ratio)
    l_lo, l_hi = l_min / est_scale, l_max / est_scale
    var_cap = var_max / ratio
    delta_mean = (l_hi - l_lo) / m
    delta_var = var_cap / m
    return l_lo, l_hi, var_cap, delta_mean, delta_var


def subsample_aggregate_ci(data, inner_estimator, cfg: SAConfig, rng: RandomStream):
    """Private point estimate and interval by aggregating per-subset estimates.

    ``inner_estimator`` is the non-private base estimator applied to each
    subset (np.mean for mean estimation); privacy comes entirely from the
    clamping and the Laplace noise on the two aggregates. Returns
    (theta_dp, (lo, hi)).
    """
    values = np.asarray(data, dtype=float).ravel()
    n = values.size
    m = int(cfg.m_subsets)
    if m > n:
        raise InvalidConfigError(f"m_subsets={m} exceeds the {n} available observations")
    values = np.clip(values, cfg.x_min, cfg.x_max)

    # Disjoint contiguous blocks after a seeded shuffle.
    order = rng.generator.permutation(n)
    subsets = np.array_split(order, m)
    if any(idx.size == 0 for idx in subsets):
        raise InvalidConfigError("subset partition produced an empty subset")

    l_lo, l_hi, var_cap, delta_mean, delta_var = _rescaled_settings(
        n, m, cfg.l_min, cfg.l_max, cfg.var_max)

    estimates = np.array([
        float(np.clip(inner_estimator(values[idx]), l_lo, l_hi)) for idx in subsets
    ])
    half_eps = cfg.epsilon / 2.0
    theta_dp = float(laplace_mechanism(
        [estimates.mean()], delta_mean, half_eps, rng).values[0])

    inner_size = n // m
    variances = np.empty(m)
    for i, idx in enumerate(subsets):
        subset = values[idx]
        picks = rng.generator.integers(0, subset.size, size=(cfg.b_inner, inner_size))
        boot = np.array([float(inner_estimator(subset[row])) for row in picks])
        boot = np.clip(boot, l_lo, l_hi)
        variances[i] = float(np.clip(np.var(boot, ddof=1), _INNER_VAR_FLOOR, var_cap))

    noisy_var = float(laplace_mechanism(
        [variances.mean()], delta_var, half_eps, rng).values[0])
    # Noise on the variance aggregate can push it negative; keep the floor
    # the inner estimates already honor so the total stays positive.
    noisy_var = max(noisy_var, _INNER_VAR_FLOOR)

    lap_var = 0.0 if math.isinf(half_eps) else 2.0 * (delta_mean / half_eps) ** 2
    var_dp = noisy_var / m + lap_var
    half = std_normal_quantile(cfg.alpha / 2.0) * math.sqrt(var_dp)
    return theta_dp, (theta_dp - half, theta_dp + half)
