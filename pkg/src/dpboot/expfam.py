"""Exponential-family models and private estimation on noisy statistics.

Each model describes a family with density h(x) exp(theta' T(x) - A(theta))
in its natural parameterization: the per-point sufficient statistic T, the
log-partition A with its gradient (the mean map) and Hessian (the Fisher
information), a sampler, and a closed-form inverse of the mean map where
one exists. Estimation from a privatized statistic total is pure
post-processing: maximize theta' s - n A(theta), which is concave in theta.

Laplace noise can push the averaged statistic outside the mean-map range
(a Bernoulli average above 1, a negative Gamma total). Before inversion
the average is projected onto the feasible mean set shrunk by
``FEASIBILITY_MARGIN`` so the estimator is defined for every noise draw.

Alongside the natural coordinates, every model designates report
parameters (``target``): the familiar quantities an analyst wants
intervals for (p, lam, mean, var, scale). Standard errors for those are
obtained from the natural-coordinate information matrix by the delta
method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    InvalidBoundsError,
    InvalidParameterError,
    NumericalFailureError,
)
from .privacy import Bounds, NoisyVector, additive_sensitivity, laplace_mechanism
from .rng import RandomStream, sample_bernoulli, sample_gamma, sample_gaussian, sample_poisson

__all__ = [
    "FEASIBILITY_MARGIN",
    "ExpFamModel",
    "bernoulli_model",
    "poisson_model",
    "gaussian_known_var_model",
    "gaussian_mean_var_model",
    "gamma_known_shape_model",
    "mv_gaussian_model",
    "make_model",
    "MODEL_NAMES",
    "sufficient_statistic_total",
    "ssp_release",
    "ssp_mle",
    "newton_mle",
    "classical_mle",
    "fisher_information",
    "plugin_stderr",
    "target_stderr",
    "target_stderrs",
]

# Margin by which the feasible mean set is shrunk before inverting the
# mean map; keeps the optimizer well-posed for every noise draw.
FEASIBILITY_MARGIN = 1e-6

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ExpFamModel:
    """An exponential family in natural coordinates plus report targets."""

    name: str
    dim: int
    data_dim: int
    suff_stat: Callable[[np.ndarray], np.ndarray]
    log_partition: Callable[[np.ndarray], float]
    grad_A: Callable[[np.ndarray], np.ndarray]
    hess_A: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[np.ndarray, int, RandomStream], np.ndarray]
    project_mean: Callable[[np.ndarray], np.ndarray]
    in_domain: Callable[[np.ndarray], bool]
    to_natural: Callable[[np.ndarray], np.ndarray]
    target: Callable[[np.ndarray], np.ndarray]
    target_jacobian: Callable[[np.ndarray], np.ndarray]
    target_names: tuple[str, ...]
    newton_start: np.ndarray
    mle_from_mean: Callable[[np.ndarray], np.ndarray] | None = None

    def sample(self, theta, n: int, rng: RandomStream) -> np.ndarray:
        return self.sampler(np.asarray(theta, dtype=float), int(n), rng)

    def data_bounds(self, stat_bounds: Bounds) -> Bounds:
        """Clamp bounds for the raw data: the leading data_dim statistic coordinates.

        Every catalog family places the data coordinates first in T, so the
        first ``data_dim`` statistic bounds double as data bounds.
        """
        return stat_bounds.take(range(self.data_dim))


def _theta(value) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=float))


def sufficient_statistic_total(model: ExpFamModel, data) -> np.ndarray:
    """Coordinatewise sum of per-point sufficient statistics."""
    stats = model.suff_stat(np.asarray(data, dtype=float))
    return np.asarray(stats, dtype=float).reshape(-1, model.dim).sum(axis=0)


def ssp_release(model: ExpFamModel, data, bounds: Bounds, epsilon: float,
                rng: RandomStream) -> NoisyVector:
    """Privatize the statistic total with Laplace noise calibrated to the bounds.

    The caller is responsible for pre-clamping the data so the statistic
    values respect the bounds; the noise scale is the width sum over the
    statistic coordinates divided by epsilon.
    """
    if bounds is None or bounds.dim != model.dim:
        got = "none" if bounds is None else bounds.dim
        raise InvalidBoundsError(
            f"model {model.name!r} needs bounds for {model.dim} statistic coordinates, got {got}")
    stat = sufficient_statistic_total(model, data)
    sensitivity = additive_sensitivity(bounds.widths)
    return laplace_mechanism(stat, sensitivity, epsilon, rng)


def ssp_mle(model: ExpFamModel, noisy_stat, n: int) -> np.ndarray:
    """Maximize theta' s - n A(theta) for a (possibly noisy) statistic total.

    Uses the closed-form mean-map inverse when the model has one and the
    Newton solver otherwise. The averaged statistic is projected into the
    feasible mean set first, so the result is always inside the parameter
    domain.
    """
    n = int(n)
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")
    stat = noisy_stat.values if isinstance(noisy_stat, NoisyVector) else noisy_stat
    stat = _theta(stat)
    if stat.size != model.dim:
        raise InvalidParameterError(
            f"statistic has {stat.size} coordinates, model {model.name!r} expects {model.dim}")
    mean = model.project_mean(stat / n)
    if model.mle_from_mean is not None:
        theta = _theta(model.mle_from_mean(mean))
    else:
        theta = newton_mle(model, mean * n, n)
    if not model.in_domain(theta):
        raise NumericalFailureError(
            f"estimate left the parameter domain for model {model.name!r}", last_iterate=theta)
    return theta


def newton_mle(model: ExpFamModel, stat_total, n: int, start=None,
               tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Newton's method on the concave objective theta' s - n A(theta).

    Steps that exit the parameter domain are halved until they land
    inside. Convergence is declared when the per-observation gradient
    s/n - A'(theta) has sup norm at most ``tol``.
    """
    mean = _theta(stat_total) / int(n)
    theta = _theta(model.newton_start if start is None else start)
    for _ in range(max_iter):
        grad = mean - _theta(model.grad_A(theta))
        if float(np.max(np.abs(grad))) <= tol:
            return theta
        hess = np.atleast_2d(np.asarray(model.hess_A(theta), dtype=float))
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailureError(
                f"singular curvature in Newton solve for model {model.name!r}",
                last_iterate=theta) from exc
        scale = 1.0
        candidate = theta + step
        halvings = 0
        while not (model.in_domain(candidate) and math.isfinite(model.log_partition(candidate))):
            halvings += 1
            if halvings > 60:
                raise NumericalFailureError(
                    f"Newton step collapsed to zero for model {model.name!r}",
                    last_iterate=theta)
            scale *= 0.5
            candidate = theta + scale * step
        theta = candidate
    grad = mean - _theta(model.grad_A(theta))
    if float(np.max(np.abs(grad))) <= tol:
        return theta
    raise NumericalFailureError(
        f"Newton did not converge in {max_iter} iterations for model {model.name!r}",
        last_iterate=theta)


def classical_mle(model: ExpFamModel, data) -> np.ndarray:
    """Non-private maximum likelihood on raw data."""
    stat = sufficient_statistic_total(model, data)
    return ssp_mle(model, stat, np.asarray(data).shape[0])


def fisher_information(model: ExpFamModel, theta) -> np.ndarray:
    """The information matrix A''(theta); symmetric positive definite on the domain."""
    theta = _theta(theta)
    if not model.in_domain(theta):
        raise InvalidParameterError(
            f"theta {theta} is outside the parameter domain of model {model.name!r}")
    hess = np.atleast_2d(np.asarray(model.hess_A(theta), dtype=float))
    return (hess + hess.T) / 2.0


def _inverse_information(model: ExpFamModel, theta) -> np.ndarray:
    info = fisher_information(model, theta)
    if info.shape == (1, 1):
        value = info[0, 0]
        if not (math.isfinite(value) and value > 0):
            raise NumericalFailureError(
                f"information matrix is singular for model {model.name!r}", last_iterate=theta)
        return np.array([[1.0 / value]])
    if not np.all(np.isfinite(info)) or np.linalg.cond(info) > _COND_LIMIT:
        raise NumericalFailureError(
            f"information matrix is singular for model {model.name!r}", last_iterate=theta)
    return np.linalg.inv(info)


def plugin_stderr(model: ExpFamModel, theta, n: int, coordinate: int = 0) -> float:
    """Plug-in standard error of natural coordinate j: sqrt((I(theta)^-1)_jj / n)."""
    inv = _inverse_information(model, theta)
    return float(math.sqrt(inv[coordinate, coordinate] / int(n)))


def target_stderr(model: ExpFamModel, theta, n: int, coordinate: int = 0) -> float:
    """Delta-method standard error of report coordinate j at the given theta."""
    return float(target_stderrs(model, theta, n)[coordinate])


def target_stderrs(model: ExpFamModel, theta, n: int) -> np.ndarray:
    """Delta-method standard errors for every report coordinate at once."""
    theta = _theta(theta)
    inv = _inverse_information(model, theta)
    jac = np.atleast_2d(np.asarray(model.target_jacobian(theta), dtype=float))
    cov = jac @ inv @ jac.T
    return np.sqrt(np.diag(cov) / int(n))


# --------------------------------------------------------------------------
# Model catalog


def _scalar_suff_stat(data: np.ndarray) -> np.ndarray:
    return np.asarray(data, dtype=float).reshape(-1, 1)


def bernoulli_model() -> ExpFamModel:
    """Bernoulli(p) with T(x) = x and natural parameter log(p / (1-p))."""

    def sigmoid(t):
        return 0.5 * (1.0 + np.tanh(0.5 * t))

    def log_partition(theta):
        return float(np.logaddexp(0.0, theta[0]))

    def grad(theta):
        return np.array([sigmoid(theta[0])])

    def hess(theta):
        p = sigmoid(theta[0])
        return np.array([[p * (1.0 - p)]])

    def sampler(theta, n, rng):
        return np.asarray(sample_bernoulli(sigmoid(theta[0]), rng, size=n), dtype=float)

    def project(mean):
        return np.clip(mean, FEASIBILITY_MARGIN, 1.0 - FEASIBILITY_MARGIN)

    def invert(mean):
        return np.array([math.log(mean[0] / (1.0 - mean[0]))])

    def to_natural(params):
        p = float(np.atleast_1d(params)[0])
        if not (0.0 < p < 1.0):
            raise InvalidParameterError(f"bernoulli p must lie in (0, 1), got {p}")
        return np.array([math.log(p / (1.0 - p))])

    def jac(theta):
        p = sigmoid(theta[0])
        return np.array([[p * (1.0 - p)]])

    return ExpFamModel(
        name="bernoulli", dim=1, data_dim=1,
        suff_stat=_scalar_suff_stat, log_partition=log_partition,
        grad_A=grad, hess_A=hess, sampler=sampler,
        project_mean=project, mle_from_mean=invert,
        in_domain=lambda theta: bool(np.all(np.isfinite(theta))),
        to_natural=to_natural,
        target=lambda theta: np.array([sigmoid(theta[0])]),
        target_jacobian=jac, target_names=("p",),
        newton_start=np.array([0.0]),
    )


def poisson_model() -> ExpFamModel:
    """Poisson(lam) with T(x) = x and natural parameter log(lam)."""

    def sampler(theta, n, rng):
        return np.asarray(sample_poisson(math.exp(theta[0]), rng, size=n), dtype=float)

    def to_natural(params):
        lam = float(np.atleast_1d(params)[0])
        if lam <= 0:
            raise InvalidParameterError(f"poisson rate must be positive, got {lam}")
        return np.array([math.log(lam)])

    return ExpFamModel(
        name="poisson", dim=1, data_dim=1,
        suff_stat=_scalar_suff_stat,
        log_partition=lambda theta: float(np.exp(theta[0])),
        grad_A=lambda theta: np.array([np.exp(theta[0])]),
        hess_A=lambda theta: np.array([[np.exp(theta[0])]]),
        sampler=sampler,
        project_mean=lambda mean: np.maximum(mean, FEASIBILITY_MARGIN),
        mle_from_mean=lambda mean: np.array([math.log(mean[0])]),
        in_domain=lambda theta: bool(np.all(np.isfinite(theta))),
        to_natural=to_natural,
        target=lambda theta: np.array([math.exp(theta[0])]),
        target_jacobian=lambda theta: np.array([[math.exp(theta[0])]]),
        target_names=("lam",),
        newton_start=np.array([0.0]),
    )


def gaussian_known_var_model(sd: float = 1.0) -> ExpFamModel:
    """Gaussian mean with known standard deviation; T(x) = x, theta = mean / sd^2."""
    sd = float(sd)
    if not (math.isfinite(sd) and sd > 0):
        raise InvalidParameterError(f"known sd must be positive and finite, got {sd}")
    var = sd * sd

    def sampler(theta, n, rng):
        return np.asarray(sample_gaussian(theta[0] * var, sd, rng, size=n), dtype=float)

    return ExpFamModel(
        name="gaussian", dim=1, data_dim=1,
        suff_stat=_scalar_suff_stat,
        log_partition=lambda theta: float(0.5 * var * theta[0] ** 2),
        grad_A=lambda theta: np.array([var * theta[0]]),
        hess_A=lambda theta: np.array([[var]]),
        sampler=sampler,
        project_mean=lambda mean: np.asarray(mean, dtype=float),
        mle_from_mean=lambda mean: np.array([mean[0] / var]),
        in_domain=lambda theta: bool(np.all(np.isfinite(theta))),
        to_natural=lambda params: np.array([float(np.atleast_1d(params)[0]) / var]),
        target=lambda theta: np.array([var * theta[0]]),
        target_jacobian=lambda theta: np.array([[var]]),
        target_names=("mean",),
        newton_start=np.array([0.0]),
    )


def gaussian_mean_var_model() -> ExpFamModel:
    """Gaussian with unknown mean and variance; T(x) = (x, x^2)."""

    def moments(theta):
        var = -1.0 / (2.0 * theta[1])
        mean = theta[0] * var
        return mean, var

    def log_partition(theta):
        mean, var = moments(theta)
        if var <= 0:
            return math.inf
        return float(mean * mean / (2.0 * var) + 0.5 * math.log(var))

    def grad(theta):
        mean, var = moments(theta)
        return np.array([mean, mean * mean + var])

    def hess(theta):
        mean, var = moments(theta)
        return np.array([
            [var, 2.0 * mean * var],
            [2.0 * mean * var, 4.0 * mean * mean * var + 2.0 * var * var],
        ])

    def sampler(theta, n, rng):
        mean, var = moments(theta)
        return np.asarray(sample_gaussian(mean, math.sqrt(var), rng, size=n), dtype=float)

    def suff_stat(data):
        x = np.asarray(data, dtype=float).ravel()
        return np.column_stack([x, x * x])

    def project(mean):
        m1 = float(mean[0])
        central_var = max(float(mean[1]) - m1 * m1, FEASIBILITY_MARGIN)
        return np.array([m1, m1 * m1 + central_var])

    def invert(mean):
        m1 = float(mean[0])
        var = float(mean[1]) - m1 * m1
        return np.array([m1 / var, -1.0 / (2.0 * var)])

    def to_natural(params):
        mean, var = (float(v) for v in np.atleast_1d(params))
        if var <= 0:
            raise InvalidParameterError(f"variance must be positive, got {var}")
        return np.array([mean / var, -1.0 / (2.0 * var)])

    def target(theta):
        mean, var = moments(theta)
        return np.array([mean, var])

    def jac(theta):
        mean, var = moments(theta)
        return np.array([[var, 2.0 * mean * var], [0.0, 2.0 * var * var]])

    return ExpFamModel(
        name="gaussian-meanvar", dim=2, data_dim=1,
        suff_stat=suff_stat, log_partition=log_partition,
        grad_A=grad, hess_A=hess, sampler=sampler,
        project_mean=project, mle_from_mean=invert,
        in_domain=lambda theta: bool(np.all(np.isfinite(theta)) and theta[1] < 0),
        to_natural=to_natural, target=target, target_jacobian=jac,
        target_names=("mean", "var"),
        newton_start=np.array([0.0, -0.5]),
    )


def gamma_known_shape_model(shape: float = 3.0) -> ExpFamModel:
    """Gamma with known shape and unknown scale; T(x) = x, theta = -1 / scale."""
    shape = float(shape)
    if not (math.isfinite(shape) and shape > 0):
        raise InvalidParameterError(f"known shape must be positive and finite, got {shape}")

    def sampler(theta, n, rng):
        return np.asarray(sample_gamma(shape, -1.0 / theta[0], rng, size=n), dtype=float)

    def to_natural(params):
        scale = float(np.atleast_1d(params)[0])
        if scale <= 0:
            raise InvalidParameterError(f"gamma scale must be positive, got {scale}")
        return np.array([-1.0 / scale])

    return ExpFamModel(
        name="gamma-scale", dim=1, data_dim=1,
        suff_stat=_scalar_suff_stat,
        log_partition=lambda theta: float(-shape * math.log(-theta[0])) if theta[0] < 0 else math.inf,
        grad_A=lambda theta: np.array([-shape / theta[0]]),
        hess_A=lambda theta: np.array([[shape / theta[0] ** 2]]),
        sampler=sampler,
        project_mean=lambda mean: np.maximum(mean, FEASIBILITY_MARGIN),
        mle_from_mean=lambda mean: np.array([-shape / mean[0]]),
        in_domain=lambda theta: bool(np.all(np.isfinite(theta)) and theta[0] < 0),
        to_natural=to_natural,
        target=lambda theta: np.array([-1.0 / theta[0]]),
        target_jacobian=lambda theta: np.array([[1.0 / theta[0] ** 2]]),
        target_names=("scale",),
        newton_start=np.array([-1.0]),
    )


def mv_gaussian_model(sds) -> ExpFamModel:
    """Independent Gaussian means in d dimensions with known per-coordinate sds.

    Interval construction treats each coordinate separately; the model is
    a product of known-variance Gaussian mean families.
    """
    sds = np.atleast_1d(np.asarray(sds, dtype=float))
    if not np.all(np.isfinite(sds)) or np.any(sds <= 0):
        raise InvalidParameterError("all known sds must be positive and finite")
    variances = sds * sds
    d = sds.size

    def sampler(theta, n, rng):
        means = theta * variances
        draws = rng.generator.normal(size=(int(n), d))
        return means + draws * sds

    def suff_stat(data):
        return np.asarray(data, dtype=float).reshape(-1, d)

    def to_natural(params):
        means = np.atleast_1d(np.asarray(params, dtype=float))
        if means.size != d:
            raise InvalidParameterError(f"expected {d} means, got {means.size}")
        return means / variances

    return ExpFamModel(
        name="mvgaussian", dim=d, data_dim=d,
        suff_stat=suff_stat,
        log_partition=lambda theta: float(0.5 * np.sum(variances * theta ** 2)),
        grad_A=lambda theta: variances * theta,
        hess_A=lambda theta: np.diag(variances),
        sampler=sampler,
        project_mean=lambda mean: np.asarray(mean, dtype=float),
        mle_from_mean=lambda mean: np.asarray(mean, dtype=float) / variances,
        in_domain=lambda theta: bool(np.all(np.isfinite(theta))),
        to_natural=to_natural,
        target=lambda theta: variances * theta,
        target_jacobian=lambda theta: np.diag(variances),
        target_names=tuple(f"mean{j}" for j in range(d)),
        newton_start=np.zeros(d),
    )


MODEL_NAMES = ("bernoulli", "poisson", "gaussian", "gaussian-meanvar", "gamma-scale", "mvgaussian")


def make_model(name: str, known: dict | None = None) -> ExpFamModel:
    """Build a catalog model by name; ``known`` holds fixed (non-estimated) constants."""
    known = dict(known or {})
    if name == "bernoulli":
        return bernoulli_model()
    if name == "poisson":
        return poisson_model()
    if name == "gaussian":
        return gaussian_known_var_model(known.pop("sd", 1.0))
    if name == "gaussian-meanvar":
        return gaussian_mean_var_model()
    if name == "gamma-scale":
        return gamma_known_shape_model(known.pop("shape", 3.0))
    if name == "mvgaussian":
        if "sds" not in known:
            raise InvalidParameterError("mvgaussian needs known={'sds': [...]}")
        return mv_gaussian_model(known.pop("sds"))
    raise InvalidParameterError(f"unknown model {name!r}; choose from {MODEL_NAMES}")
