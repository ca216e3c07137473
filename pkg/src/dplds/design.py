"""Minimum-energy noise designs and prior constructors.

The trace-minimal output noise is available in closed form,
``Sigma_w* = c^2 R^2 N Sigma N^T``, and the input-noise analogue is
``Sigma_v* = c^2 R^2 Sigma``.  Both are returned together with a post-hoc
check of the sufficient condition they are designed to meet with equality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import (
    DegeneratePriorError,
    DimensionError,
    InfeasibleError,
    NotPositiveDefiniteError,
    RankDeficientError,
    ValidationError,
)
from .privacy import (
    CheckReport,
    CovarianceMatrix,
    GaussianPrior,
    MechanismSpec,
    bdp_check,
    bdp_input_check,
)
from .specfun import PrivacyBudget, chi_radius, r_threshold
from .sysmat import LiftedOperator, StateSpaceModel, lift

__all__ = [
    "DesignResult",
    "optimal_output_noise",
    "optimal_input_noise",
    "iid_input_noise",
    "filter_prior",
    "step_prior",
    "lowpass_reference_model",
    "white_prior",
]

# N is accepted as full row rank iff sigma_min > ROW_RANK_RTOL * sigma_max.
ROW_RANK_RTOL = 1e-10


@dataclass(frozen=True)
class DesignResult:
    mechanism: MechanismSpec
    trace: float
    check: CheckReport
    formula: str
    scale: float

    @property
    def margin(self) -> float:
        return self.check.margin

    @property
    def covariance(self) -> np.ndarray:
        return self.mechanism.covariance.matrix

    def to_dict(self) -> dict:
        return {
            "formula": self.formula,
            "channel": self.mechanism.channel,
            "trace": self.trace,
            "scale": self.scale,
            "epsilon": self.check.epsilon,
            "delta": self.check.delta,
            "gamma": self.check.gamma,
            "T": self.check.T,
            "covariance": self.covariance.tolist(),
            "factor": self.mechanism.covariance.factor.tolist(),
            "check": self.check.to_dict(),
        }


def _calibration(prior: GaussianPrior, budget: PrivacyBudget, allow_degenerate: bool):
    gamma = budget.require_gamma()
    if not 0 < gamma < 1:
        raise InfeasibleError(
            f"gamma={gamma} admits no finite positive-definite noise; need 0 < gamma < 1")
    if prior.degenerate and not allow_degenerate:
        raise DegeneratePriorError(
            f"prior covariance has rank {prior.dof} < {prior.dim}; a strict prior is required")
    dof = prior.dof if prior.degenerate else prior.dim
    return chi_radius(gamma, dof) * r_threshold(budget)


def optimal_output_noise(prior: GaussianPrior, N: LiftedOperator, budget: PrivacyBudget,
                         allow_degenerate: bool = False) -> DesignResult:
    """Trace-minimal output noise ``c^2 R^2 N Sigma N^T`` meeting the Bayesian condition.

    Raises
    ------
    RankDeficientError
        If N is not full row rank; the closed form is then singular.
    """
    if prior.dim != N.shape[1]:
        raise DimensionError(f"prior dimension {prior.dim} != operator columns {N.shape[1]}",
                             matrix="N")
    s = np.linalg.svd(N.matrix, compute_uv=False)
    if N.shape[0] > N.shape[1] or s.size == 0 or s[-1] <= ROW_RANK_RTOL * s[0]:
        smin = 0.0 if N.shape[0] > N.shape[1] or s.size == 0 else s[-1]
        raise RankDeficientError(
            "the optimal output noise requires N_T to be full row rank "
            f"(sigma_min={smin:.3g}, sigma_max={s[0] if s.size else 0.0:.3g})")
    cr = _calibration(prior, budget, allow_degenerate)
    NF = N.matrix @ prior.covariance.factor
    try:
        cov = CovarianceMatrix.from_factor(cr * NF)
    except NotPositiveDefiniteError as exc:
        raise RankDeficientError(f"N Sigma N^T is singular: {exc}") from None
    if not cov.strict:
        raise RankDeficientError("N Sigma N^T is singular for this prior")
    mech = MechanismSpec.output(cov)
    check = bdp_check(prior, mech, N, budget, allow_degenerate=allow_degenerate)
    return DesignResult(mech, cov.trace, check, "c^2 R^2 N Sigma N^T", cr * cr)


def optimal_input_noise(prior: GaussianPrior, budget: PrivacyBudget,
                        allow_degenerate: bool = False) -> DesignResult:
    """Trace-minimal input noise ``c^2 R^2 Sigma``."""
    cr = _calibration(prior, budget, allow_degenerate)
    cov = prior.covariance.scaled(cr * cr)
    if not cov.strict:
        raise NotPositiveDefiniteError("input noise proportional to a degenerate prior is singular")
    mech = MechanismSpec.input(cov)
    check = bdp_input_check(prior, mech, budget, allow_degenerate=allow_degenerate)
    return DesignResult(mech, cov.trace, check, "c^2 R^2 Sigma", cr * cr)


def iid_input_noise(prior: GaussianPrior, budget: PrivacyBudget,
                    allow_degenerate: bool = False) -> DesignResult:
    """Smallest isotropic input noise ``sigma^2 I`` with ``sigma^2 = c^2 R^2 lambda_max(Sigma)``."""
    cr = _calibration(prior, budget, allow_degenerate)
    var = cr * cr * prior.covariance.lambda_max()
    cov = CovarianceMatrix.identity(prior.dim, var)
    mech = MechanismSpec.input(cov)
    check = bdp_input_check(prior, mech, budget, allow_degenerate=allow_degenerate)
    return DesignResult(mech, cov.trace, check, "c^2 R^2 lambda_max(Sigma) I", var)


def filter_prior(filt: StateSpaceModel, T: int) -> GaussianPrior:
    """Prior of a reference generated by filtering unit white noise.

    The covariance is ``Xi Xi^T`` with ``Xi = lift(filt, T)``; Xi itself is
    kept as the factor.  It is strict iff the feedthrough block is
    nonsingular (Xi is block lower triangular).
    """
    if filt.q != filt.m:
        raise DimensionError(
            f"reference filter must have as many outputs as noise inputs, got {filt.q}x{filt.m}",
            matrix="D")
    Xi = lift(filt, T).matrix
    if not np.any(Xi):
        raise NotPositiveDefiniteError("reference filter has an identically zero response")
    D = filt.D
    sv = np.linalg.svd(D, compute_uv=False)
    nonsingular = sv[-1] > D.shape[0] * np.finfo(float).eps * max(sv[0], 1.0)
    cov = CovarianceMatrix.from_factor(Xi, strict=True if nonsingular else None)
    if nonsingular and not cov.strict:
        raise NotPositiveDefiniteError("filter prior failed its strictness test")
    return GaussianPrior(cov, block_size=filt.m)


def step_prior(sigma_s, T: int) -> GaussianPrior:
    """Prior of a constant reference ``r(t) = r_bar ~ N(0, Sigma_s)`` over t = 0..T.

    Every (i, j) block of the covariance equals ``Sigma_s``; rank is m.
    """
    if int(T) != T or T < 0:
        raise ValidationError(f"horizon must be a nonnegative integer, got {T!r}")
    S = sigma_s if isinstance(sigma_s, CovarianceMatrix) else CovarianceMatrix(sigma_s)
    S.require_strict("step covariance Sigma_s")
    F = np.kron(np.ones((int(T) + 1, 1)), S.factor)
    return GaussianPrior(CovarianceMatrix.from_factor(F), block_size=S.dim)


def lowpass_reference_model(cutoff: float, order: int = 4) -> StateSpaceModel:
    """Digital Butterworth lowpass as a SISO state-space model.

    ``cutoff`` is the -3 dB frequency as a fraction of Nyquist, i.e. the
    gain is 1/sqrt(2) at ``lambda = cutoff * pi``.
    """
    if not 0 < cutoff < 1:
        raise ValidationError(f"cutoff must lie in (0, 1) (fraction of Nyquist), got {cutoff!r}")
    if int(order) != order or order < 1:
        raise ValidationError(f"order must be a positive integer, got {order!r}")
    z, p, k = signal.butter(int(order), cutoff, btype="low", output="zpk")
    A, B, C, D = signal.zpk2ss(z, p, k)
    return StateSpaceModel(A, B, C, D)


def white_prior(d: int, variance: float = 1.0, block_size: int = 1) -> GaussianPrior:
    return GaussianPrior(CovarianceMatrix.identity(d, variance), block_size=block_size)

