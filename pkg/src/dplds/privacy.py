"""Sufficient-condition checks for (Bayesian) differential privacy of LTI mechanisms.

Every spectral quantity is obtained from triangular factors and singular
values, never from explicit inverses.  For a covariance ``S = F F^T`` and a
noise covariance ``Sigma_w = L_w L_w^T`` the operator in the Bayesian
condition has ``lambda_max = sigma_max(L_w^{-1} N F)^2``; any factor F with
``F F^T = S`` gives the same value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (
    DegeneratePriorError,
    DimensionError,
    InfeasibleError,
    NotPositiveDefiniteError,
    ValidationError,
)
from .specfun import PrivacyBudget, chi_radius, q_function, r_threshold
from .sysmat import LiftedOperator, Trajectory

__all__ = [
    "CovarianceMatrix",
    "GaussianPrior",
    "MechanismSpec",
    "CheckReport",
    "EmpiricalBDP",
    "dp_check",
    "bdp_check",
    "bdp_input_check",
    "prior_matched_weight",
    "pairwise_delta",
    "empirical_bdp",
]

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10
# Strict iff every squared pivot of the factor exceeds this fraction of trace/d.
PD_RTOL = 1e-12
# Factors agreeing to this relative Frobenius residual are treated as proportional.
PROPORTIONAL_RTOL = 1e-12
# A check passes iff lhs >= (1 - VERDICT_RTOL) rhs.  The closed-form designs
# meet the condition with equality, and rounding must not flip that verdict.
VERDICT_RTOL = 1e-10


class CovarianceMatrix:
    """Symmetric positive (semi)definite matrix with a cached factor.

    Parameters
    ----------
    matrix : array_like
        Square symmetric matrix.

    Attributes
    ----------
    matrix : ndarray, shape (d, d)
    factor : ndarray, shape (d, r)
        ``factor @ factor.T == matrix``.  Lower triangular with positive
        diagonal when :attr:`strict`.
    rank : int
    strict : bool
        True when the matrix passed the strict positive-definiteness test.
    """

    def __init__(self, matrix):
        M = np.array(matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
            raise DimensionError(f"covariance must be square and nonempty, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValidationError("covariance has non-finite entries")
        scale = np.max(np.abs(M))
        if np.max(np.abs(M - M.T)) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
            raise ValidationError("covariance is not symmetric")
        M = 0.5 * (M + M.T)
        factor = None
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            L = None
        if L is not None and _pivots_ok(L, M):
            factor, rank, strict = L, M.shape[0], True
        else:
            w, V = np.linalg.eigh(M)
            lmax = max(w[-1], 0.0)
            if lmax == 0.0 or w[0] < -PSD_RTOL * lmax:
                raise NotPositiveDefiniteError(
                    f"covariance is not positive semidefinite (eigenvalues in [{w[0]:.3g}, {w[-1]:.3g}])")
            keep = w > PSD_RTOL * lmax
            rank, strict = int(keep.sum()), False
            factor = V[:, keep] * np.sqrt(w[keep])
        self._init(M, factor, rank, strict)

    def _init(self, M, factor, rank, strict):
        M.setflags(write=False)
        factor.setflags(write=False)
        self._matrix = M
        self._factor = factor
        self._rank = rank
        self._strict = strict

    @classmethod
    def from_factor(cls, F, strict: bool | None = None) -> "CovarianceMatrix":
        """Build ``F F^T`` from a factor without ever factorizing the product.

        A factor with at least as many columns as rows is re-triangularized
        by a QR of ``F^T``, which keeps full accuracy even when ``F F^T`` is
        too ill-conditioned for Cholesky.  ``strict`` overrides the pivot test
        when the caller knows the rank structurally (e.g. a block-triangular
        factor with nonsingular diagonal blocks).  Rank-deficient factors are
        compressed to ``d x rank`` so that the rank equals the column count.
        """
        F = np.array(F, dtype=float)
        if F.ndim != 2 or F.shape[0] == 0 or F.shape[1] == 0:
            raise DimensionError(f"factor must be a nonempty 2-D array, got {F.shape}")
        if not np.all(np.isfinite(F)):
            raise ValidationError("factor has non-finite entries")
        d, r = F.shape
        M = F @ F.T
        M = 0.5 * (M + M.T)
        obj = cls.__new__(cls)
        if r >= d:
            if r == d and not np.any(np.triu(F, 1)) and np.all(np.diag(F) > 0):
                L = F
            else:
                _, R = linalg.qr(F.T, mode="economic")
                L = R.T * np.where(np.diag(R) < 0, -1.0, 1.0)
            ok = bool(np.all(np.diag(L) > 0)) if strict else _pivots_ok(L, M)
            if ok:
                obj._init(M, L, d, True)
                return obj
        if strict:
            raise NotPositiveDefiniteError("factor is rank deficient but strict=True was requested")
        U, s, _ = np.linalg.svd(F, full_matrices=False)
        if s[0] == 0:
            raise NotPositiveDefiniteError("factor is identically zero")
        rank = int(np.sum(s > max(d, r) * np.finfo(float).eps * s[0]))
        obj._init(M, U[:, :rank] * s[:rank], rank, False)
        return obj

    @classmethod
    def identity(cls, d: int, scale: float = 1.0) -> "CovarianceMatrix":
        if scale <= 0:
            raise NotPositiveDefiniteError("identity scale must be positive")
        obj = cls.__new__(cls)
        obj._init(scale * np.eye(d), math.sqrt(scale) * np.eye(d), d, True)
        return obj

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def factor(self) -> np.ndarray:
        return self._factor

    @property
    def rank(self) -> int:
        return self._rank

    @property
    def strict(self) -> bool:
        return self._strict

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self._matrix))

    def lambda_max(self) -> float:
        return float(np.linalg.svd(self._factor, compute_uv=False)[0] ** 2)

    def scaled(self, alpha: float) -> "CovarianceMatrix":
        """Return ``alpha * self`` with the factor scaled by ``sqrt(alpha)``."""
        if not alpha > 0:
            raise NotPositiveDefiniteError(f"scale must be positive, got {alpha!r}")
        obj = CovarianceMatrix.__new__(CovarianceMatrix)
        obj._init(alpha * self._matrix, math.sqrt(alpha) * self._factor, self._rank,
                  self._strict)
        return obj

    def proportional_to(self, other: "CovarianceMatrix") -> float | None:
        """``alpha`` if the cached factors satisfy ``F_self = sqrt(alpha) F_other``.

        Both factors are canonical (lower triangular, positive diagonal) for
        strict matrices, so this detects ``self == alpha * other`` up to
        rounding without any solve.  Returns None otherwise.
        """
        A, B = self._factor, other._factor
        if A.shape != B.shape:
            return None
        bb = float(np.sum(B * B))
        if bb == 0.0:
            return None
        s = float(np.sum(A * B)) / bb
        if s <= 0:
            return None
        resid = np.linalg.norm(A - s * B)
        if resid > PROPORTIONAL_RTOL * np.linalg.norm(A):
            return None
        return s * s

    def require_strict(self, what: str) -> None:
        if not self._strict:
            raise NotPositiveDefiniteError(
                f"{what} must be strictly positive definite (rank {self._rank} of {self.dim})")

    def __repr__(self):
        kind = "strict" if self._strict else f"rank={self._rank}"
        return f"CovarianceMatrix(dim={self.dim}, {kind}, trace={self.trace:.6g})"


def _pivots_ok(L, M):
    d = M.shape[0]
    floor = PD_RTOL * np.trace(M) / d
    return bool(np.all(np.diag(L) ** 2 > floor))


def _as_cov(value, what) -> CovarianceMatrix:
    if isinstance(value, CovarianceMatrix):
        return value
    try:
        return CovarianceMatrix(value)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(f"{what}: {exc}") from None


@dataclass(frozen=True)
class GaussianPrior:
    """Zero-mean (by default) Gaussian prior over a stacked input sequence.

    ``block_size`` is the per-step input dimension m, so the horizon is
    ``dim // block_size - 1``.
    """

    covariance: CovarianceMatrix
    block_size: int = 1
    mean: np.ndarray | None = None

    def __post_init__(self):
        cov = _as_cov(self.covariance, "prior covariance")
        object.__setattr__(self, "covariance", cov)
        if self.block_size < 1 or cov.dim % self.block_size:
            raise DimensionError(
                f"prior dimension {cov.dim} is not a multiple of block size {self.block_size}")
        if self.mean is not None:
            mu = np.asarray(self.mean, dtype=float).ravel()
            if mu.size != cov.dim:
                raise DimensionError(f"prior mean has length {mu.size}, expected {cov.dim}")
            object.__setattr__(self, "mean", mu)

    @property
    def dim(self) -> int:
        return self.covariance.dim

    @property
    def horizon(self) -> int:
        return self.dim // self.block_size - 1

    @property
    def degenerate(self) -> bool:
        return not self.covariance.strict

    @property
    def dof(self) -> int:
        return self.covariance.rank

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` stacked sequences as rows, via ``U = F z``."""
        F = self.covariance.factor
        U = rng.standard_normal((n, F.shape[1])) @ F.T
        if self.mean is not None:
            U += self.mean
        return U


OUTPUT = "output"
INPUT = "input"


@dataclass(frozen=True)
class MechanismSpec:
    """Additive Gaussian noise on the output channel (``Y = N U + W``) or
    the input channel (``Y = N (U + V)``)."""

    channel: str
    covariance: CovarianceMatrix
    mean: np.ndarray | None = None

    def __post_init__(self):
        if self.channel not in (OUTPUT, INPUT):
            raise ValidationError(f"channel must be 'output' or 'input', got {self.channel!r}")
        cov = _as_cov(self.covariance, "noise covariance")
        cov.require_strict("noise covariance")
        object.__setattr__(self, "covariance", cov)
        if self.mean is not None:
            mu = np.asarray(self.mean, dtype=float).ravel()
            if mu.size != cov.dim:
                raise DimensionError(f"noise mean has length {mu.size}, expected {cov.dim}")
            object.__setattr__(self, "mean", mu)

    @classmethod
    def output(cls, covariance, mean=None) -> "MechanismSpec":
        return cls(OUTPUT, covariance, mean)

    @classmethod
    def input(cls, covariance, mean=None) -> "MechanismSpec":
        return cls(INPUT, covariance, mean)


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a sufficient-condition check, roughly ``satisfied`` iff ``lhs >= rhs``.

    ``margin`` is the raw ``lhs - rhs``; the verdict allows a relative slack
    of ``VERDICT_RTOL`` so that designs built at equality pass.
    ``lhs`` is ``math.inf`` when the mechanism releases nothing (zero
    operator or identical inputs).  In JSON, infinities are written as the
    strings ``"inf"``/``"-inf"``.
    """

    satisfied: bool
    lhs: float
    rhs: float
    margin: float
    epsilon: float
    delta: float
    gamma: float | None
    T: int
    kind: str = "bdp"
    samples: int | None = None
    gamma_hat: float | None = None
    ci: float | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "satisfied": bool(self.satisfied),
            "lhs": _json_float(self.lhs),
            "rhs": _json_float(self.rhs),
            "margin": _json_float(self.margin),
            "epsilon": self.epsilon,
            "delta": self.delta,
            "gamma": self.gamma,
            "T": self.T,
        }
        for key in ("samples", "gamma_hat", "ci"):
            val = getattr(self, key)
            if val is not None:
                out[key] = _json_float(val) if key != "samples" else int(val)
        out.update({k: _json_float(v) if isinstance(v, float) else v
                    for k, v in self.extra.items()})
        return out


def _report(lhs, rhs, budget, T, kind, **extra):
    if math.isinf(lhs) and lhs > 0:
        margin = math.inf
    else:
        margin = lhs - rhs
    return CheckReport(
        satisfied=bool(margin >= -VERDICT_RTOL * abs(rhs)),
        lhs=float(lhs), rhs=float(rhs), margin=float(margin),
        epsilon=float(budget.epsilon), delta=float(budget.delta),
        gamma=None if budget.gamma is None else float(budget.gamma),
        T=int(T), kind=kind, extra=extra,
    )


def _inv_sigma_max(X) -> float:
    """``1 / sigma_max(X)`` with the +inf sentinel for a zero matrix."""
    if X.size == 0 or not np.any(X):
        return math.inf
    s = np.linalg.svd(X, compute_uv=False)[0]
    return math.inf if s == 0 else 1.0 / float(s)


def _check_output_dims(N: LiftedOperator, noise: CovarianceMatrix, input_dim: int, what: str):
    rows, cols = N.shape
    if noise.dim != rows:
        raise DimensionError(
            f"noise covariance is {noise.dim}x{noise.dim}, operator has {rows} rows", matrix="Sigma_w")
    if input_dim != cols:
        raise DimensionError(f"{what} has dimension {input_dim}, operator has {cols} columns",
                             matrix=what)


def dp_check(K, mech: MechanismSpec, N: LiftedOperator, budget: PrivacyBudget) -> CheckReport:
    """(K, eps, delta)-DP sufficient condition for an output-noise mechanism.

    ``lhs = lambda_max^{-1/2}(K^{-1/2} N^T Sigma_w^{-1} N K^{-1/2})`` computed
    as ``1 / sigma_max(L_w^{-1} N L_K^{-T})``; satisfied iff ``lhs >= R(eps, delta)``.
    """
    K = _as_cov(K, "adjacency weight K")
    K.require_strict("adjacency weight K")
    if mech.channel != OUTPUT:
        raise ValidationError("dp_check expects an output-noise mechanism")
    Sw = mech.covariance
    _check_output_dims(N, Sw, K.dim, "K")
    # K^{-1} = L_K^{-T} L_K^{-1}, so L_K^{-T} is a factor of K^{-1}.
    Kinv_half = linalg.solve_triangular(K.factor, np.eye(K.dim), lower=True, trans="T")
    X = linalg.solve_triangular(Sw.factor, N.matrix @ Kinv_half, lower=True)
    return _report(_inv_sigma_max(X), r_threshold(budget), budget, N.horizon, "dp")


def _prior_dof(prior: GaussianPrior, allow_degenerate: bool) -> int:
    if prior.degenerate:
        if not allow_degenerate:
            raise DegeneratePriorError(
                f"prior covariance has rank {prior.dof} < {prior.dim}; "
                "pass allow_degenerate=True to use the rank-projected condition")
        return prior.dof
    return prior.dim


def _bdp_rhs(prior, budget, allow_degenerate):
    gamma = budget.require_gamma()
    dof = _prior_dof(prior, allow_degenerate)
    return chi_radius(gamma, dof) * r_threshold(budget), dof


def bdp_check(prior: GaussianPrior, mech: MechanismSpec, N: LiftedOperator,
              budget: PrivacyBudget, allow_degenerate: bool = False) -> CheckReport:
    """Bayesian DP sufficient condition for an output-noise mechanism.

    ``lhs = 1 / sigma_max(L_w^{-1} N F)`` with ``F F^T = Sigma`` the prior
    covariance; satisfied iff ``lhs >= c(gamma, T) R(eps, delta)``.  The noise
    mean does not enter.  A rank-r prior is accepted only with
    ``allow_degenerate=True``, in which case F spans its range and c uses r
    degrees of freedom.
    """
    if mech.channel != OUTPUT:
        raise ValidationError("bdp_check expects an output-noise mechanism; "
                              "use bdp_input_check for input noise")
    rhs, dof = _bdp_rhs(prior, budget, allow_degenerate)
    Sw = mech.covariance
    _check_output_dims(N, Sw, prior.dim, "prior")
    X = linalg.solve_triangular(Sw.factor, N.matrix @ prior.covariance.factor, lower=True)
    return _report(_inv_sigma_max(X), rhs, budget, N.horizon, "bdp", dof=dof)


def bdp_input_check(prior: GaussianPrior, mech: MechanismSpec, budget: PrivacyBudget,
                    allow_degenerate: bool = False) -> CheckReport:
    """Bayesian DP sufficient condition for input noise; independent of the system.

    ``lhs = lambda_min^{1/2}(Sigma^{-1/2} Sigma_v Sigma^{-1/2})``, evaluated as
    ``1 / sigma_max(L_v^{-1} F)``.  When the two cached factors are
    proportional (``Sigma_v = alpha Sigma``) the value ``sqrt(alpha)`` is used
    directly; this stays exact for priors far too ill-conditioned for a
    triangular solve to resolve.
    """
    if mech.channel != INPUT:
        raise ValidationError("bdp_input_check expects an input-noise mechanism")
    rhs, dof = _bdp_rhs(prior, budget, allow_degenerate)
    Sv = mech.covariance
    if Sv.dim != prior.dim:
        raise DimensionError(
            f"input noise covariance is {Sv.dim}x{Sv.dim}, prior has dimension {prior.dim}",
            matrix="Sigma_v")
    alpha = Sv.proportional_to(prior.covariance)
    if alpha is not None:
        lhs, route = math.sqrt(alpha), "proportional"
    else:
        X = linalg.solve_triangular(Sv.factor, prior.covariance.factor, lower=True)
        lhs, route = _inv_sigma_max(X), "factor"
    return _report(lhs, rhs, budget, prior.horizon, "bdp-input", dof=dof, route=route)


def prior_matched_weight(prior: GaussianPrior, gamma: float) -> CovarianceMatrix:
    """Adjacency weight ``K = Sigma^{-1} / c(gamma, T)^2`` matching a Gaussian prior."""
    prior.covariance.require_strict("prior covariance")
    if not 0 < gamma < 1:
        raise InfeasibleError(f"gamma must lie in (0, 1) for a finite weight, got {gamma!r}")
    c = chi_radius(gamma, prior.dim)
    d = prior.dim
    # Sigma^{-1}/c^2 = (L^{-T}/c)(L^{-T}/c)^T.
    F = linalg.solve_triangular(prior.covariance.factor, np.eye(d), lower=True, trans="T") / c
    return CovarianceMatrix.from_factor(F, strict=True)


def _pair_operator(mech: MechanismSpec, N: LiftedOperator, F: np.ndarray) -> np.ndarray:
    """Matrix G with ``h^{-1} = |G z|`` for an input difference ``dU = F z``."""
    if mech.channel == OUTPUT:
        if mech.covariance.dim != N.shape[0]:
            raise DimensionError("noise covariance does not match operator rows", matrix="Sigma_w")
        return linalg.solve_triangular(mech.covariance.factor, N.matrix @ F, lower=True)
    if mech.covariance.dim != N.shape[1]:
        raise DimensionError("input noise covariance does not match operator columns",
                             matrix="Sigma_v")
    # W = N V has covariance (N L_v)(N L_v)^T and N dU always lies in its
    # range, so the pseudo-inverse gives the exact weighted norm even for
    # singular N.
    NF = N.matrix @ F
    return np.linalg.pinv(N.matrix @ mech.covariance.factor) @ NF


def _prior_pair_operator(mech, N, prior):
    alpha = mech.covariance.proportional_to(prior.covariance) if mech.channel == INPUT else None
    if alpha is None:
        return _pair_operator(mech, N, prior.covariance.factor)
    # Sigma_v = alpha Sigma: the distance is the projection of z onto the row
    # space of N F, scaled by 1/sqrt(alpha); no ill-conditioned solve needed.
    _, s, Vt = np.linalg.svd(N.matrix @ prior.covariance.factor, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((1, prior.covariance.factor.shape[1]))
    rank = int(np.sum(s > max(N.shape) * np.finfo(float).eps * s[0]))
    return Vt[:rank] / math.sqrt(alpha)


def pairwise_delta(U, U2, N: LiftedOperator, noise, epsilon: float) -> float:
    """Smallest delta certified for one specific input pair at this epsilon.

    ``h = 1 / |N (U - U2)|_{Sigma_w^{-1}}`` and the result is
    ``Q(eps h - 1 / (2 h))``; identical outputs give ``h = inf`` and 0.
    ``noise`` is an output covariance or a :class:`MechanismSpec`.
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon!r}")
    mech = noise if isinstance(noise, MechanismSpec) else MechanismSpec.output(noise)
    m = N.m
    dU = _stack(U, N.horizon, m) - _stack(U2, N.horizon, m)
    dist = float(np.linalg.norm(_pair_operator(mech, N, np.eye(N.shape[1])) @ dU))
    if dist == 0.0:
        return 0.0
    h = 1.0 / dist
    return float(q_function(epsilon * h - 1.0 / (2.0 * h)))


def _stack(U, T, m):
    if isinstance(U, Trajectory):
        U = U.stacked
    U = np.asarray(U, dtype=float).ravel()
    if U.size != (T + 1) * m:
        raise DimensionError(f"input sequence has length {U.size}, expected {(T + 1) * m}")
    return U


@dataclass(frozen=True)
class EmpiricalBDP:
    """Monte-Carlo estimate of ``P[h >= R(eps, delta)]`` over prior pairs."""

    gamma_hat: float
    half_width: float
    samples: int
    hits: int
    threshold: float
    seed: int

    def to_report(self, budget: PrivacyBudget, T: int) -> CheckReport:
        gamma = budget.require_gamma()
        margin = self.gamma_hat - gamma
        return CheckReport(
            satisfied=bool(margin >= 0), lhs=self.gamma_hat, rhs=gamma, margin=margin,
            epsilon=float(budget.epsilon), delta=float(budget.delta), gamma=gamma, T=int(T),
            kind="empirical-bdp", samples=self.samples, gamma_hat=self.gamma_hat,
            ci=self.half_width, extra={"hits": self.hits, "seed": self.seed},
        )


DEFAULT_CHUNK = 8192


def _chunk_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _count_chunk(G, dist_limit, n, seed, index):
    rng = _chunk_generator(seed, index)
    r = G.shape[1]
    z1 = rng.standard_normal((n, r))
    z2 = rng.standard_normal((n, r))
    dist = np.linalg.norm((z1 - z2) @ G.T, axis=1)
    # h >= R  <=>  1/dist >= R  <=>  dist <= 1/R  (dist == 0 means h = inf).
    return int(np.count_nonzero(dist <= dist_limit))


def empirical_bdp(prior: GaussianPrior, mech: MechanismSpec, N: LiftedOperator,
                  budget: PrivacyBudget, samples: int, seed: int, *,
                  workers: int = 1, chunk_size: int = DEFAULT_CHUNK, z: float = 3.0,
                  allow_degenerate: bool = False) -> EmpiricalBDP:
    """Estimate the probability that a prior pair is (eps, delta)-indistinguishable.

    Pairs are drawn as ``U = F z1``, ``U' = F z2`` and counted when
    ``h >= R(eps, delta)``.  Input-noise mechanisms are evaluated through the
    equivalent output noise ``W = N V``.

    The sample range is cut into fixed-size chunks, each with its own
    generator derived from ``(seed, chunk index)``, so the count is identical
    for any ``workers``.  ``half_width`` is ``z`` binomial standard errors.
    """
    if int(samples) != samples or samples < 1:
        raise ValidationError(f"samples must be a positive integer, got {samples!r}")
    if prior.degenerate and not allow_degenerate:
        raise DegeneratePriorError("empirical_bdp needs a strict prior (or allow_degenerate=True)")
    if chunk_size < 1:
        raise ValidationError("chunk_size must be positive")
    samples = int(samples)
    if prior.dim != N.shape[1]:
        raise DimensionError(f"prior dimension {prior.dim} != operator columns {N.shape[1]}")
    G = _prior_pair_operator(mech, N, prior)
    R = r_threshold(budget)
    limit = 1.0 / R
    sizes = [chunk_size] * (samples // chunk_size)
    if samples % chunk_size:
        sizes.append(samples % chunk_size)
    jobs = [(G, limit, n, int(seed), i) for i, n in enumerate(sizes)]
    if workers <= 1:
        hits = sum(_count_chunk(*job) for job in jobs)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(lambda job: _count_chunk(*job), jobs))
    p = hits / samples
    return EmpiricalBDP(
        gamma_hat=p, half_width=z * math.sqrt(p * (1.0 - p) / samples),
        samples=samples, hits=hits, threshold=R, seed=int(seed),
    )
