"""Scalar special functions for Gaussian-mechanism calibration.

``q_function``/``q_inverse`` are the standard normal upper tail and its
inverse, ``r_threshold`` is the noise-to-sensitivity ratio R(eps, delta) and
``c_gamma`` is the radius of the prior-weighted ball that contains the
difference of two independent prior draws with probability gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ValidationError

__all__ = [
    "PrivacyBudget",
    "q_function",
    "q_inverse",
    "r_threshold",
    "chi2_cdf",
    "chi2_quantile",
    "chi_radius",
    "c_gamma",
]


@dataclass(frozen=True)
class PrivacyBudget:
    """Privacy parameters ``(epsilon, delta, gamma)``.

    ``gamma`` is only needed by the Bayesian checks and designs; it may be
    left as ``None`` for a plain (K, eps, delta) check.
    """

    epsilon: float
    delta: float
    gamma: float | None = None

    def __post_init__(self):
        eps, delta, gamma = self.epsilon, self.delta, self.gamma
        if not (math.isfinite(eps) and eps > 0):
            raise ValidationError(f"epsilon must be positive and finite, got {eps!r}")
        if not 0 < delta < 0.5:
            raise ValidationError(f"delta must lie in (0, 1/2), got {delta!r}")
        if gamma is not None and not 0 <= gamma <= 1:
            raise ValidationError(f"gamma must lie in [0, 1], got {gamma!r}")

    def require_gamma(self) -> float:
        if self.gamma is None:
            raise ValidationError("this operation needs gamma, but the budget has none")
        return float(self.gamma)


def q_function(c):
    """Upper-tail probability of the standard normal, ``P[Z >= c]``."""
    return special.ndtr(-np.asarray(c, dtype=float))[()]


def q_inverse(p):
    """Inverse of :func:`q_function` on (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise ValidationError(f"q_inverse needs p in (0, 1), got {p!r}")
    # -ndtri(p) keeps full relative accuracy for tiny p, where ndtri(1 - p) would not.
    return (-special.ndtri(p))[()]


def r_threshold(budget: PrivacyBudget) -> float:
    """``(Q^{-1}(delta) + sqrt(Q^{-1}(delta)^2 + 2 eps)) / (2 eps)``."""
    eps = float(budget.epsilon)
    qi = float(q_inverse(budget.delta))
    return (qi + math.sqrt(qi * qi + 2.0 * eps)) / (2.0 * eps)


def _check_dof(k):
    if int(k) != k or k < 1:
        raise ValidationError(f"degrees of freedom must be a positive integer, got {k!r}")
    return int(k)


def chi2_cdf(x, k):
    """Chi-square CDF, i.e. the regularized lower incomplete gamma ``P(k/2, x/2)``."""
    k = _check_dof(k)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValidationError("chi2_cdf is defined for x >= 0")
    return special.gammainc(k / 2.0, x / 2.0)[()]


def chi2_quantile(gamma: float, k: int) -> float:
    """Inverse of :func:`chi2_cdf` in x for ``0 < gamma < 1``."""
    k = _check_dof(k)
    if not 0 < gamma < 1:
        raise ValidationError(f"chi2_quantile needs gamma in (0, 1), got {gamma!r}")
    a = k / 2.0
    y = float(special.gammaincinv(a, gamma))
    # One Newton step on P(a, y) - gamma; gammaincinv alone is ~1e-15 but can
    # lose a digit or two for large a.
    dens = math.exp((a - 1.0) * math.log(y) - y - math.lgamma(a)) if y > 0 else 0.0
    if dens > 0:
        step = (float(special.gammainc(a, y)) - gamma) / dens
        if abs(step) < 1e-6 * max(y, 1.0):
            y -= step
    return 2.0 * y


def chi_radius(gamma: float, dof: int) -> float:
    """``sqrt(2 * chi2_quantile(gamma, dof))`` with ``0 -> 0`` and ``1 -> inf``."""
    dof = _check_dof(dof)
    if not 0 <= gamma <= 1:
        raise ValidationError(f"gamma must lie in [0, 1], got {gamma!r}")
    if gamma == 0:
        return 0.0
    if gamma == 1:
        return math.inf
    return math.sqrt(2.0 * chi2_quantile(gamma, dof))


def c_gamma(gamma: float, T: int, m: int = 1) -> float:
    """Threshold c(gamma, T) for a prior over (T + 1) m stacked values.

    Returns the c > 0 for which the chi-square CDF with (T + 1) m degrees of
    freedom, evaluated at c^2 / 2, equals gamma.  ``gamma == 1`` maps to
    ``math.inf``: no finite noise can reach it.
    """
    if int(T) != T or T < 0:
        raise ValidationError(f"horizon must be a nonnegative integer, got {T!r}")
    if int(m) != m or m < 1:
        raise ValidationError(f"input dimension must be a positive integer, got {m!r}")
    return chi_radius(gamma, (int(T) + 1) * int(m))
