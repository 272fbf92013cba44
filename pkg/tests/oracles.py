"""Independent reference computations used by the test suite.

Everything here recomputes expected values from first principles (direct
density formulas, dense grid search, finite differences, empirical CDFs)
without touching the production mean-map/solver code paths it checks.
"""

import math

import numpy as np


def normal_cdf(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + np.vectorize(math.erf)(x / math.sqrt(2.0)))


def normal_quantile_by_bisection(gamma: float) -> float:
    """The 1 - gamma standard normal quantile via bisection on the tail mass.

    Uses 1 - Phi(z) = 0.5 * erfc(z / sqrt(2)), which stays accurate deep
    in the tail; gamma > 0.5 goes through symmetry.
    """
    if gamma > 0.5:
        return -normal_quantile_by_bisection(1.0 - gamma)
    lo, hi = -12.0, 12.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(mid / math.sqrt(2.0)) > gamma:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between an empirical sample and a CDF."""
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    cdf_vals = np.asarray(cdf(xs), dtype=float)
    upper = np.max(np.abs(np.arange(1, n + 1) / n - cdf_vals))
    lower = np.max(np.abs(np.arange(0, n) / n - cdf_vals))
    return float(max(upper, lower))


def zoom_grid_argmax(objective, lo: float, hi: float, rounds: int = 3,
                     points: int = 400) -> float:
    """Maximize a vectorized scalar objective by repeatedly refined grids."""
    for _ in range(rounds):
        grid = np.linspace(lo, hi, points)
        values = objective(grid)
        best = int(np.argmax(values))
        step = grid[1] - grid[0]
        lo = grid[best] - 2.0 * step
        hi = grid[best] + 2.0 * step
    grid = np.linspace(lo, hi, points)
    return float(grid[int(np.argmax(objective(grid)))])


def zoom_grid_argmax_2d(objective, lo1, hi1, lo2, hi2, rounds: int = 4,
                        points: int = 120):
    """2-D analogue of :func:`zoom_grid_argmax` on a product grid."""
    for _ in range(rounds):
        g1 = np.linspace(lo1, hi1, points)
        g2 = np.linspace(lo2, hi2, points)
        values = objective(g1[:, None], g2[None, :])
        i, j = np.unravel_index(int(np.argmax(values)), values.shape)
        s1, s2 = g1[1] - g1[0], g2[1] - g2[0]
        lo1, hi1 = g1[i] - 2.0 * s1, g1[i] + 2.0 * s1
        lo2, hi2 = g2[j] - 2.0 * s2, g2[j] + 2.0 * s2
    g1 = np.linspace(lo1, hi1, points)
    g2 = np.linspace(lo2, hi2, points)
    values = objective(g1[:, None], g2[None, :])
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    return float(g1[i]), float(g2[j])


def grid_mle_report_params(name: str, data, known: dict | None = None) -> np.ndarray:
    """Dense grid-search maximum likelihood in report parameters.

    Likelihoods are written directly from the density formulas so the
    search shares nothing with the closed-form or Newton estimation paths.
    """
    known = dict(known or {})
    x = np.asarray(data, dtype=float)

    if name == "bernoulli":
        s = float(x.sum())
        n = x.size

        def loglik(p):
            return s * np.log(p) + (n - s) * np.log1p(-p)

        return np.array([zoom_grid_argmax(loglik, 1e-4, 1.0 - 1e-4)])

    if name == "poisson":
        s = float(x.sum())
        n = x.size
        center = max(s / n, 1e-3)

        def loglik(lam):
            return s * np.log(lam) - n * lam

        return np.array([zoom_grid_argmax(loglik, center / 5.0, center * 5.0 + 1.0)])

    if name == "gaussian":
        sd = float(known.get("sd", 1.0))
        xbar = float(x.mean())

        def loglik(mu):
            return -np.array([float(np.sum((x - m) ** 2)) for m in np.atleast_1d(mu)]) \
                / (2.0 * sd * sd)

        return np.array([zoom_grid_argmax(loglik, xbar - 5.0 * sd, xbar + 5.0 * sd)])

    if name == "gaussian-meanvar":
        n = x.size
        xbar = float(x.mean())
        sample_var = float(x.var()) + 1e-12
        spread = math.sqrt(sample_var)

        def loglik(mu, var):
            ss = np.array([float(np.sum((x - m) ** 2)) for m in np.ravel(mu)])
            ss = ss.reshape(np.shape(mu))
            return -0.5 * n * np.log(var) - ss / (2.0 * var)

        mu_hat, var_hat = zoom_grid_argmax_2d(
            loglik, xbar - 4.0 * spread, xbar + 4.0 * spread,
            sample_var / 20.0, sample_var * 20.0)
        return np.array([mu_hat, var_hat])

    if name == "gamma-scale":
        shape = float(known.get("shape", 3.0))
        s = float(x.sum())
        n = x.size
        center = max(s / (n * shape), 1e-3)

        def loglik(scale):
            return -s / scale - n * shape * np.log(scale)

        return np.array([zoom_grid_argmax(loglik, center / 10.0, center * 10.0)])

    if name == "mvgaussian":
        sds = np.asarray(known["sds"], dtype=float)
        out = []
        for j, sd in enumerate(sds):
            col = x[:, j]
            xbar = float(col.mean())

            def loglik(mu, col=col, sd=sd):
                return -np.array([float(np.sum((col - m) ** 2)) for m in np.atleast_1d(mu)]) \
                    / (2.0 * sd * sd)

            out.append(zoom_grid_argmax(loglik, xbar - 5.0 * sd, xbar + 5.0 * sd))
        return np.array(out)

    raise ValueError(f"no grid oracle for model {name!r}")


def finite_difference_gradient(f, theta, h: float = 1e-6) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        step = h * max(1.0, abs(theta[i]))
        plus = theta.copy()
        minus = theta.copy()
        plus[i] += step
        minus[i] -= step
        grad[i] = (f(plus) - f(minus)) / (2.0 * step)
    return grad


def finite_difference_hessian(f, theta, h: float = 1e-4) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    hess = np.zeros((d, d))
    steps = [h * max(1.0, abs(t)) for t in theta]
    for i in range(d):
        for j in range(i, d):
            pp = theta.copy(); pp[i] += steps[i]; pp[j] += steps[j]
            pm = theta.copy(); pm[i] += steps[i]; pm[j] -= steps[j]
            mp = theta.copy(); mp[i] -= steps[i]; mp[j] += steps[j]
            mm = theta.copy(); mm[i] -= steps[i]; mm[j] -= steps[j]
            value = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * steps[i] * steps[j])
            hess[i, j] = hess[j, i] = value
    return hess
