"""Private linear regression via sufficient-statistic perturbation.

The released tuple is (X'X + V, X'y + w, beta_hat, sigma2_hat): symmetric
Laplace noise V on the Gram matrix, iid Laplace noise w on X'y, the
coefficient solve of the noisy system, and a privatized residual variance.
Widths of the features and the response, enforced by the modeler, give
the noise sensitivities

    gram:  sum over j <= k of width(x_j) * width(x_k)
    xty:   sum over j of width(x_j) * width(y)
    var:   R^2 for residuals clamped to [-R, R]

and the three epsilons compose additively.

Bootstrap replicates never touch the covariates again. A replicate
redraws the privacy noise from the recorded distributions, draws the
data-interaction term from its normal limit N(0, sigma2 * Q_hat), and
re-solves:

    beta* = (Q_hat + V*/n)^-1 [ Q_hat beta_hat + Z*/sqrt(n) + w*/n ]

with Q_hat = (X'X + V)/n held fixed at its released value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidParameterError,
    NumericalFailureError,
    ReplicateFailureError,
    SingularReleaseError,
)
from .privacy import Bounds, PrivacyBudget, drop_out_of_bounds
from .rng import RandomStream, sample_laplace, std_normal_quantile

__all__ = [
    "RegressionData",
    "RegressionRelease",
    "ssp_ols_release",
    "ols_point_estimate",
    "hybrid_bootstrap_replicate",
    "replicate_from_noise",
    "ols_plugin_stderrs",
    "ols_fisher_ci",
    "generate_synthetic_regression",
]

_COND_LIMIT = 1e12
_SIGMA2_FLOOR_FRAC = 1e-8
_EIG_FLOOR_FRAC = 1e-8


@dataclass(frozen=True)
class RegressionData:
    """Design matrix X (n rows of covariates) and response vector y."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] != y.size:
            raise InvalidParameterError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        if X.shape[0] <= X.shape[1]:
            raise InvalidParameterError(
                f"need more rows than covariates, got n={X.shape[0]}, p={X.shape[1]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidParameterError("regression data must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class RegressionRelease:
    """Everything the analyst sees after one private regression release."""

    noisy_gram: np.ndarray
    noisy_xty: np.ndarray
    beta_hat: np.ndarray
    sigma2_hat: float
    n: int
    budget: PrivacyBudget
    x_widths: np.ndarray
    y_width: float
    residual_bound: float
    gram_sensitivity: float
    xty_sensitivity: float
    gram_scale: float
    xty_scale: float
    var_scale: float

    @property
    def p(self) -> int:
        return self.beta_hat.size

    @property
    def q_hat(self) -> np.ndarray:
        """The released second-moment estimate (X'X + V) / n."""
        return self.noisy_gram / self.n


def _solve_checked(matrix: np.ndarray, rhs: np.ndarray, error_cls, what: str) -> np.ndarray:
    if not np.all(np.isfinite(matrix)) or np.linalg.cond(matrix) > _COND_LIMIT:
        raise error_cls(f"{what} is numerically singular")
    try:
        return np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise error_cls(f"{what} could not be solved") from exc


def _symmetric_laplace(p: int, scale: float, rng: RandomStream) -> np.ndarray:
    """Symmetric matrix with iid Laplace upper triangle mirrored below."""
    noise = np.zeros((p, p))
    if scale > 0:
        rows, cols = np.triu_indices(p)
        draws = sample_laplace(0.0, scale, rng, size=rows.size)
        noise[rows, cols] = draws
        noise[cols, rows] = draws
    return noise


def _noise_scale(sensitivity: float, epsilon: float) -> float:
    epsilon = float(epsilon)
    if math.isnan(epsilon) or epsilon <= 0:
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon}")
    if math.isinf(epsilon) or sensitivity == 0.0:
        return 0.0
    return sensitivity / epsilon


def ssp_ols_release(data: RegressionData, x_bounds: Bounds, y_bounds: Bounds,
                    residual_bound: float, budget, rng: RandomStream) -> RegressionRelease:
    """Release noisy sufficient statistics, coefficients, and residual variance.

    ``budget`` is the (eps_gram, eps_xty, eps_var) triple or a
    :class:`PrivacyBudget` with labels gram/xty/var. Rows are assumed
    pre-filtered and clamped to the bounds. Raises
    :class:`SingularReleaseError` when the noisy normal equations cannot
    be solved.
    """
    if not isinstance(data, RegressionData):
        data = RegressionData(*data)
    if x_bounds.dim != data.p:
        raise InvalidParameterError(
            f"x_bounds cover {x_bounds.dim} features but data has {data.p}")
    if y_bounds.dim != 1:
        raise InvalidParameterError("y_bounds must be one-dimensional")
    residual_bound = float(residual_bound)
    if not (math.isfinite(residual_bound) and residual_bound > 0):
        raise InvalidParameterError(f"residual bound must be positive, got {residual_bound}")
    if isinstance(budget, PrivacyBudget):
        eps1, eps2, eps3 = (budget["gram"], budget["xty"], budget["var"])
    else:
        eps1, eps2, eps3 = (float(e) for e in budget)
        budget = PrivacyBudget((("gram", eps1), ("xty", eps2), ("var", eps3)))

    x_widths = x_bounds.widths
    y_width = float(y_bounds.widths[0])
    rows, cols = np.triu_indices(data.p)
    gram_sensitivity = float(np.sum(x_widths[rows] * x_widths[cols]))
    xty_sensitivity = float(np.sum(x_widths) * y_width)
    var_sensitivity = residual_bound ** 2

    gram_scale = _noise_scale(gram_sensitivity, eps1)
    xty_scale = _noise_scale(xty_sensitivity, eps2)
    var_scale = _noise_scale(var_sensitivity, eps3)

    gram = data.X.T @ data.X
    gram = (gram + gram.T) / 2.0  # exact symmetry
    noisy_gram = gram + _symmetric_laplace(data.p, gram_scale, rng)
    xty = data.X.T @ data.y
    if xty_scale > 0:
        xty = xty + sample_laplace(0.0, xty_scale, rng, size=data.p)

    beta_hat = _solve_checked(noisy_gram, xty, SingularReleaseError, "noisy Gram matrix")

    residuals = np.clip(data.y - data.X @ beta_hat, -residual_bound, residual_bound)
    sigma2 = float(np.sum(residuals ** 2)) / (data.n - data.p)
    if var_scale > 0:
        sigma2 += float(sample_laplace(0.0, var_scale, rng))
    sigma2 = max(sigma2, _SIGMA2_FLOOR_FRAC * y_width ** 2)

    return RegressionRelease(
        noisy_gram=noisy_gram, noisy_xty=xty, beta_hat=beta_hat,
        sigma2_hat=sigma2, n=data.n, budget=budget,
        x_widths=x_widths, y_width=y_width, residual_bound=residual_bound,
        gram_sensitivity=gram_sensitivity, xty_sensitivity=xty_sensitivity,
        gram_scale=gram_scale, xty_scale=xty_scale, var_scale=var_scale,
    )


def ols_point_estimate(release: RegressionRelease) -> np.ndarray:
    """Coefficients from the released noisy system; matches ``release.beta_hat``."""
    return _solve_checked(release.noisy_gram, release.noisy_xty,
                          SingularReleaseError, "noisy Gram matrix")


def _conditioned_cholesky(q: np.ndarray) -> np.ndarray:
    """Cholesky factor of q with eigenvalues floored; used only for the Z* draw."""
    p = q.shape[0]
    floor = _EIG_FLOOR_FRAC * float(np.trace(q)) / p
    if floor <= 0:
        floor = _EIG_FLOOR_FRAC
    eigvals, eigvecs = np.linalg.eigh((q + q.T) / 2.0)
    eigvals = np.maximum(eigvals, floor)
    conditioned = (eigvecs * eigvals) @ eigvecs.T
    return np.linalg.cholesky((conditioned + conditioned.T) / 2.0)


def replicate_from_noise(release: RegressionRelease, v_star: np.ndarray,
                         w_star: np.ndarray, z_star: np.ndarray) -> np.ndarray:
    """Deterministic part of a hybrid replicate, given the inner noise draws.

    With all noise at zero this returns ``beta_hat`` exactly (up to the
    linear-solve tolerance).
    """
    n = release.n
    q_hat = release.q_hat
    system = q_hat + np.asarray(v_star, dtype=float) / n
    rhs = q_hat @ release.beta_hat + np.asarray(z_star, dtype=float) / math.sqrt(n) \
        + np.asarray(w_star, dtype=float) / n
    return _solve_checked(system, rhs, ReplicateFailureError, "replicate system")


def hybrid_bootstrap_replicate(release: RegressionRelease, rng: RandomStream) -> np.ndarray:
    """One coefficient replicate that never re-reads the covariate data.

    V* and w* are fresh draws from the privacy-noise distributions
    recorded in the release; Z* ~ N(0, sigma2_hat * Q_hat) stands in for
    the covariate-error interaction term via its central-limit
    approximation. Draw order (V*, w*, Z*) is fixed for reproducibility.
    """
    p = release.p
    v_star = _symmetric_laplace(p, release.gram_scale, rng)
    if release.xty_scale > 0:
        w_star = sample_laplace(0.0, release.xty_scale, rng, size=p)
    else:
        w_star = np.zeros(p)
    chol = _conditioned_cholesky(release.q_hat)
    z_star = math.sqrt(release.sigma2_hat) * (chol @ rng.generator.normal(size=p))
    return replicate_from_noise(release, v_star, w_star, z_star)


def ols_plugin_stderrs(release: RegressionRelease) -> np.ndarray:
    """Per-coordinate plug-in standard errors sqrt((sigma2 Q_hat^-1)_jj / n)."""
    q_inv = _solve_checked(release.q_hat, np.eye(release.p),
                           NumericalFailureError, "released Q_hat")
    diag = np.diag(q_inv)
    if np.any(diag <= 0):
        raise NumericalFailureError("released Q_hat is not positive definite")
    return np.sqrt(release.sigma2_hat * diag / release.n)


def ols_fisher_ci(release: RegressionRelease, coordinate: int, alpha: float):
    """Asymptotic interval beta_j +/- z_{alpha/2} sqrt((sigma2 Q_hat^-1)_jj / n)."""
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError(f"alpha must lie in (0, 1), got {alpha}")
    half = std_normal_quantile(alpha / 2.0) * float(ols_plugin_stderrs(release)[coordinate])
    center = float(release.beta_hat[coordinate])
    return (center - half, center + half)


def generate_synthetic_regression(n: int, p: int, beta, rng: RandomStream,
                                  x_half_width: float = 5.0,
                                  noise_half_width: float = 10.0,
                                  y_limit: float = 150.0):
    """Uniform covariates, uniform errors, and a hard response cut.

    x_j ~ Unif(-x_half_width, x_half_width), u ~ Unif(-noise_half_width,
    noise_half_width), y = X beta + u; rows with |y| > y_limit are
    dropped. Returns (RegressionData, dropped_count).
    """
    n = int(n)
    p = int(p)
    beta = np.asarray(beta, dtype=float).ravel()
    if n <= p:
        raise InvalidParameterError(f"need n > p, got n={n}, p={p}")
    if beta.size != p:
        raise InvalidParameterError(f"beta has {beta.size} entries, expected {p}")
    X = rng.generator.uniform(-x_half_width, x_half_width, size=(n, p))
    u = rng.generator.uniform(-noise_half_width, noise_half_width, size=n)
    y = X @ beta + u
    rows = np.column_stack([X, y])
    kept, dropped = drop_out_of_bounds(
        rows, Bounds(np.array([-y_limit]), np.array([y_limit])), columns=[p])
    return RegressionData(kept[:, :p], kept[:, p]), dropped
