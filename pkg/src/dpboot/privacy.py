"""Sensitivity accounting, the Laplace mechanism, and data bounding.

An additive statistic that sums a per-record map g has L1 sensitivity at
most the sum of the per-coordinate widths of g over the data domain,
independent of the sample size. That width sum is what calibrates the
Laplace noise here. Bounding the data (clamping or dropping) is how an
analyst enforces those widths in the first place.

Epsilon may be ``inf``, which is the first-class noiseless mode: releases
pass through unchanged with noise scale 0. Tests and oracles rely on the
private pipeline collapsing onto its non-private counterpart in that mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBoundsError, InvalidBudgetError, InvalidParameterError
from .rng import RandomStream, sample_laplace

__all__ = [
    "Bounds",
    "PrivacyBudget",
    "NoisyVector",
    "additive_sensitivity",
    "laplace_mechanism",
    "clamp_data",
    "drop_out_of_bounds",
]


@dataclass(frozen=True)
class Bounds:
    """Per-dimension closed intervals [lower_j, upper_j]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise InvalidBoundsError("lower and upper must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise InvalidBoundsError("bounds must be finite")
        if np.any(lower > upper):
            raise InvalidBoundsError("every dimension needs lower <= upper")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_pairs(cls, pairs) -> "Bounds":
        """Build from an iterable of (lower, upper) pairs."""
        pairs = list(pairs)
        return cls(np.array([p[0] for p in pairs], dtype=float),
                   np.array([p[1] for p in pairs], dtype=float))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    def take(self, indices) -> "Bounds":
        """Bounds restricted to the given dimensions."""
        idx = np.atleast_1d(np.asarray(indices, dtype=int))
        return Bounds(self.lower[idx], self.upper[idx])


@dataclass(frozen=True)
class PrivacyBudget:
    """Labelled epsilon components; the total is their exact sum."""

    epsilons: tuple[tuple[str, float], ...]

    def __post_init__(self):
        eps = tuple((str(label), float(value)) for label, value in self.epsilons)
        for label, value in eps:
            if math.isnan(value) or value <= 0:
                raise InvalidBudgetError(f"epsilon {label!r} must be positive, got {value}")
        object.__setattr__(self, "epsilons", eps)

    @classmethod
    def single(cls, label: str, epsilon: float) -> "PrivacyBudget":
        return cls(((label, epsilon),))

    @classmethod
    def split_evenly(cls, total: float, labels) -> "PrivacyBudget":
        """Divide a total budget equally across the given labels."""
        labels = list(labels)
        return cls(tuple((label, total / len(labels)) for label in labels))

    @property
    def total(self) -> float:
        return sum(value for _, value in self.epsilons)

    def __getitem__(self, label: str) -> float:
        for key, value in self.epsilons:
            if key == label:
                return value
        raise KeyError(label)


@dataclass(frozen=True)
class NoisyVector:
    """A privatized vector along with the noise scale that produced it."""

    values: np.ndarray
    scale: float
    sensitivity: float
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "values", np.atleast_1d(np.asarray(self.values, dtype=float)))


def additive_sensitivity(widths) -> float:
    """L1 sensitivity bound for a sum statistic: the sum of coordinate widths."""
    widths = np.atleast_1d(np.asarray(widths, dtype=float))
    if not np.all(np.isfinite(widths)) or np.any(widths < 0):
        raise InvalidBoundsError("widths must be finite and non-negative")
    return float(np.sum(widths))


def laplace_mechanism(values, sensitivity: float, epsilon: float,
                      rng: RandomStream) -> NoisyVector:
    """Add iid Laplace(0, sensitivity/epsilon) noise to each coordinate.

    epsilon = inf is the noiseless mode and returns the values unchanged
    with scale 0, as does zero sensitivity.
    """
    values = np.atleast_1d(np.asarray(values, dtype=float))
    sensitivity = float(sensitivity)
    if not math.isfinite(sensitivity) or sensitivity < 0:
        raise InvalidParameterError(f"sensitivity must be finite and non-negative, got {sensitivity}")
    epsilon = float(epsilon)
    if math.isnan(epsilon) or epsilon <= 0:
        raise InvalidBudgetError(f"epsilon must be positive, got {epsilon}")
    if math.isinf(epsilon) or sensitivity == 0.0:
        return NoisyVector(values.copy(), 0.0, sensitivity, epsilon)
    scale = sensitivity / epsilon
    noisy = values + sample_laplace(0.0, scale, rng, size=values.shape)
    return NoisyVector(noisy, scale, sensitivity, epsilon)


def clamp_data(data, bounds: Bounds) -> np.ndarray:
    """Project values coordinatewise into the bounds; idempotent.

    1-D data pairs with 1-dimensional bounds; 2-D data of shape (n, d)
    pairs with d-dimensional bounds applied per column.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 1:
        if bounds.dim != 1:
            raise InvalidBoundsError(f"1-D data needs 1-D bounds, got dim {bounds.dim}")
        return np.clip(arr, bounds.lower[0], bounds.upper[0])
    if arr.ndim == 2:
        if bounds.dim != arr.shape[1]:
            raise InvalidBoundsError(
                f"data has {arr.shape[1]} columns but bounds have dim {bounds.dim}")
        return np.clip(arr, bounds.lower, bounds.upper)
    raise InvalidBoundsError(f"data must be 1-D or 2-D, got ndim {arr.ndim}")


def drop_out_of_bounds(rows, bounds: Bounds, columns=None):
    """Keep only rows whose designated columns fall inside the bounds.

    Returns (kept_rows, dropped_count). ``columns`` selects which columns
    the bounds refer to; by default the bounds cover all columns in order.
    An empty result is legal.
    """
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2:
        raise InvalidBoundsError("drop_out_of_bounds expects a 2-D row matrix")
    if columns is None:
        columns = np.arange(arr.shape[1])
    columns = np.atleast_1d(np.asarray(columns, dtype=int))
    if columns.size != bounds.dim:
        raise InvalidBoundsError(
            f"{columns.size} designated columns but bounds have dim {bounds.dim}")
    selected = arr[:, columns]
    keep = np.all((selected >= bounds.lower) & (selected <= bounds.upper), axis=1)
    return arr[keep], int(arr.shape[0] - np.count_nonzero(keep))
