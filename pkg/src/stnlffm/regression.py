"""Restricted least-squares fit of the per-pixel gain/offset between two dates.

The fit minimises::

    0.5 * ||c_p - (a * c_k + b)||**2 + 0.5 * gamma * (a - 1)**2

whose normal equations reduce, after centring, to::

    a = (Sxy + gamma) / (Sxx + gamma),    b = mean(c_p) - a * mean(c_k)
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

__all__ = [
    "RegressionParams",
    "RegressionCoefficients",
    "fit_restricted",
    "coefficient_limits_check",
    "objective",
]


@dataclass(frozen=True)
class RegressionParams:
    gamma: float = 0.05
    min_points: int = 5
    variance_floor: float = 1e-8
    a_min: float = 0.0
    a_max: float = 3.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ConfigError(f"gamma must be non-negative, got {self.gamma}")
        if self.min_points < 2:
            raise ConfigError(f"min_points must be >= 2, got {self.min_points}")
        if not self.variance_floor > 0:
            raise ConfigError(f"variance_floor must be positive, got {self.variance_floor}")
        if not self.a_min <= self.a_max:
            raise ConfigError("a_min must not exceed a_max")


@dataclass(frozen=True)
class RegressionCoefficients:
    a: float
    b: float
    n_used: int
    degenerate: bool = False
    mean_diff: float = 0.0


def objective(a: float, b: float, c_k, c_p, gamma: float) -> float:
    c_k = np.asarray(c_k, dtype=np.float64)
    c_p = np.asarray(c_p, dtype=np.float64)
    resid = c_p - (a * c_k + b)
    return 0.5 * float(resid @ resid) + 0.5 * gamma * (a - 1.0) ** 2


def fit_restricted(c_k, c_p, params: RegressionParams = RegressionParams()) -> RegressionCoefficients:
    """Fit ``c_p ~ a * c_k + b`` with a ridge penalty pulling ``a`` towards 1.

    Falls back to ``a = 1, b = mean(c_p - c_k)`` when there are fewer than
    ``params.min_points`` samples or ``var(c_k) < params.variance_floor``.
    """
    c_k = np.asarray(c_k, dtype=np.float64).ravel()
    c_p = np.asarray(c_p, dtype=np.float64).ravel()
    if c_k.shape != c_p.shape:
        raise ValueError("c_k and c_p must have equal length")
    n = c_k.size
    if n == 0:
        raise ValueError("cannot fit an empty sample")
    if not (np.isfinite(c_k).all() and np.isfinite(c_p).all()):
        raise ValueError("non-finite reflectance in regression input")

    mean_k = c_k.mean()
    mean_p = c_p.mean()
    mean_diff = float((c_p - c_k).mean())
    dk = c_k - mean_k
    sxx = float(dk @ dk)
    if n < params.min_points or sxx / n < params.variance_floor:
        return RegressionCoefficients(1.0, mean_diff, n, True, mean_diff)
    sxy = float(dk @ (c_p - mean_p))
    a = (sxy + params.gamma) / (sxx + params.gamma)
    b = mean_p - a * mean_k
    return RegressionCoefficients(float(a), float(b), n, False, mean_diff)


def coefficient_limits_check(coeffs: RegressionCoefficients,
                             params: RegressionParams = RegressionParams()) -> RegressionCoefficients:
    """Replace an out-of-range gain by the ``a = 1`` fallback. Bounds are inclusive."""
    if params.a_min <= coeffs.a <= params.a_max:
        return coeffs
    return replace(coeffs, a=1.0, b=coeffs.mean_diff, degenerate=True)
