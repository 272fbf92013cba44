"""Concrete private estimators that plug into the bootstrap engine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bootstrap import FitResult
from .errors import InvalidBoundsError, NumericalFailureError, ReplicateFailureError
from .expfam import (
    ExpFamModel,
    ssp_mle,
    sufficient_statistic_total,
    target_stderrs,
)
from .ols import (
    RegressionData,
    hybrid_bootstrap_replicate,
    ols_plugin_stderrs,
    ssp_ols_release,
)
from .privacy import Bounds, additive_sensitivity, clamp_data, laplace_mechanism
from .rng import RandomStream

__all__ = ["SspExpFamEstimator", "SspOlsEstimator"]


@dataclass(frozen=True)
class SspExpFamEstimator:
    """Clamp, privatize the statistic total, and invert the mean map.

    The same pipeline (including clamping) runs on every bootstrap
    replicate, so the replicates see exactly the randomized algorithm the
    real data saw. Standard errors are delta-method plug-ins for the
    report parameters, which makes studentized intervals available.
    """

    model: ExpFamModel
    stat_bounds: Bounds
    epsilon: float
    clamp: bool = True

    def __post_init__(self):
        if self.stat_bounds.dim != self.model.dim:
            raise InvalidBoundsError(
                f"model {self.model.name!r} needs bounds for {self.model.dim} "
                f"statistic coordinates, got {self.stat_bounds.dim}")
        object.__setattr__(self, "_data_bounds", self.model.data_bounds(self.stat_bounds))
        # The sensitivity depends only on the bounds; fix it once so the
        # per-replicate refit stays cheap.
        object.__setattr__(self, "_sensitivity", additive_sensitivity(self.stat_bounds.widths))

    def fit(self, data, rng: RandomStream) -> FitResult:
        data = np.asarray(data, dtype=float)
        n = data.shape[0]
        if self.clamp:
            data = clamp_data(data, self._data_bounds)
        stat = sufficient_statistic_total(self.model, data)
        release = laplace_mechanism(stat, self._sensitivity, self.epsilon, rng)
        theta = ssp_mle(self.model, release, n)
        tau = self.model.target(theta)
        return FitResult(theta=theta, tau=tau,
                         sigma=target_stderrs(self.model, theta, n), n=n)

    def replicate(self, fit: FitResult, rng: RandomStream):
        synthetic = self.model.sample(fit.theta, fit.n, rng)
        refit = self.fit(synthetic, rng)
        return refit.tau, refit.sigma


@dataclass(frozen=True)
class SspOlsEstimator:
    """Private regression release with hybrid (covariate-free) replicates.

    Replicates come straight from the released quantities, so no
    per-replicate standard error is available and studentized intervals
    are unsupported. A singular replicate system is redrawn up to
    ``max_redraws`` times before the replicate is counted as failed.
    """

    x_bounds: Bounds
    y_bounds: Bounds
    residual_bound: float
    budget: tuple
    max_redraws: int = 10

    def fit(self, data: RegressionData, rng: RandomStream) -> FitResult:
        release = ssp_ols_release(data, self.x_bounds, self.y_bounds,
                                  self.residual_bound, self.budget, rng)
        try:
            sigma = ols_plugin_stderrs(release)
        except NumericalFailureError:
            # Gram noise can leave Q_hat indefinite; the coefficients and
            # the hybrid replicates are still well-defined without it.
            sigma = None
        return FitResult(theta=release.beta_hat, tau=release.beta_hat,
                         sigma=sigma, n=release.n, context=release)

    def replicate(self, fit: FitResult, rng: RandomStream):
        last_error = None
        for _ in range(self.max_redraws + 1):
            try:
                return hybrid_bootstrap_replicate(fit.context, rng), None
            except ReplicateFailureError as exc:
                last_error = exc
        raise ReplicateFailureError(
            f"replicate still singular after {self.max_redraws} redraws") from last_error
