"""Closed-loop tracking experiment: noise-free vs. i.i.d. vs. minimum-energy input noise.

The private reference r is drawn from a filtered-white-noise prior, noise v
is added before the reference enters the loop, and each mechanism is scored
by the realized tracking error and the exact error-variance trace
``Tr(Theta Sigma_v Theta^T)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .design import filter_prior, iid_input_noise, lowpass_reference_model, optimal_input_noise
from .errors import ValidationError
from .privacy import CheckReport, GaussianPrior, MechanismSpec, empirical_bdp
from .specfun import PrivacyBudget, chi_radius, r_threshold
from .sysmat import StateSpaceModel, close_loop, lift

__all__ = [
    "MECHANISMS",
    "ExperimentConfig",
    "MechanismOutcome",
    "ExperimentReport",
    "example_plant",
    "example_controller",
    "run_experiment",
    "trajectories_csv",
]

# Canonical order; also fixes each mechanism's random stream index.
MECHANISMS = ("noisefree", "iid", "optimal")


def example_plant() -> StateSpaceModel:
    """Second-order plant of the reference tracking example."""
    return StateSpaceModel(
        A=[[1.2, -0.5], [1.0, 0.0]],
        B=[[-0.3], [0.0]],
        C=[[0.2, 0.0]],
        D=[[0.0]],
    )


def example_controller() -> StateSpaceModel:
    """Controller with integral action for :func:`example_plant`."""
    return StateSpaceModel(
        A=[[1.0, 1.0], [0.0, 0.1]],
        B=[[0.0], [-1.0]],
        C=[[1.5, 0.0]],
        D=[[0.0]],
    )


@dataclass(frozen=True)
class ExperimentConfig:
    plant: StateSpaceModel = field(default_factory=example_plant)
    controller: StateSpaceModel = field(default_factory=example_controller)
    reference_filter: StateSpaceModel = field(
        default_factory=lambda: lowpass_reference_model(0.03, 4))
    budget: PrivacyBudget = field(
        default_factory=lambda: PrivacyBudget(epsilon=100.0, delta=0.1, gamma=0.5))
    horizon: int = 100
    mechanisms: tuple[str, ...] = MECHANISMS
    seeds: tuple[int, ...] = tuple(range(20))
    samples: int = 0

    def __post_init__(self):
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise ValidationError(f"horizon must be a nonnegative integer, got {self.horizon!r}")
        bad = [m for m in self.mechanisms if m not in MECHANISMS]
        if bad or not self.mechanisms:
            raise ValidationError(f"unknown mechanisms {bad}; choose from {MECHANISMS}")
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        if self.samples < 0:
            raise ValidationError("samples must be nonnegative")
        self.budget.require_gamma()
        # Keep canonical order regardless of how the selection was listed.
        picked = tuple(m for m in MECHANISMS if m in self.mechanisms)
        object.__setattr__(self, "mechanisms", picked)
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass(frozen=True)
class MechanismOutcome:
    name: str
    mse_per_seed: tuple[float, ...]
    mse_mean: float
    error_variance_trace: float
    noise_trace: float
    check: CheckReport
    empirical: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "mse_mean": self.mse_mean,
            "mse_per_seed": list(self.mse_per_seed),
            "error_variance_trace": self.error_variance_trace,
            "noise_trace": self.noise_trace,
            "check": self.check.to_dict(),
        }
        if self.empirical is not None:
            out["empirical"] = self.empirical
        return out


@dataclass(frozen=True)
class ExperimentReport:
    T: int
    c: float
    R: float
    spectral_radius: float
    unstable: bool
    theta_prior_trace: float
    iid_bound_trace: float
    prior_lambda_max: float
    prior_trace: float
    outcomes: dict[str, MechanismOutcome]
    trajectories: dict = field(repr=False, default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "c": self.c,
            "R": self.R,
            "spectral_radius": self.spectral_radius,
            "unstable": self.unstable,
            "theta_prior_trace": self.theta_prior_trace,
            "iid_bound_trace": self.iid_bound_trace,
            "prior_lambda_max": self.prior_lambda_max,
            "prior_trace": self.prior_trace,
            "mechanisms": {k: v.to_dict() for k, v in self.outcomes.items()},
        }


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _noise_free_check(prior: GaussianPrior, budget: PrivacyBudget) -> CheckReport:
    rhs = chi_radius(budget.require_gamma(), prior.dim) * r_threshold(budget)
    return CheckReport(satisfied=False, lhs=0.0, rhs=rhs, margin=-rhs,
                       epsilon=budget.epsilon, delta=budget.delta, gamma=budget.gamma,
                       T=prior.horizon, kind="bdp-input")


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    T = config.horizon
    budget = config.budget
    loop = close_loop(config.plant, config.controller)
    prior = filter_prior(config.reference_filter, T)
    if prior.block_size != loop.B.shape[1]:
        raise ValidationError(
            f"reference dimension {prior.block_size} does not match loop input {loop.B.shape[1]}")
    Theta = lift(loop.noise_to_error_model, T).matrix
    F = prior.covariance.factor
    theta_prior = float(np.sum((Theta @ F) ** 2))
    lam_max = prior.covariance.lambda_max()
    iid_bound = lam_max * float(np.sum(Theta ** 2))
    N_out = lift(loop.output_model, T)

    designs = {}
    if "iid" in config.mechanisms:
        designs["iid"] = iid_input_noise(prior, budget)
    if "optimal" in config.mechanisms:
        designs["optimal"] = optimal_input_noise(prior, budget)

    m = prior.block_size
    mse = {name: [] for name in config.mechanisms}
    trajectories = {}
    for seed in config.seeds:
        r = prior.sample(1, _stream(seed, 0))[0].reshape(T + 1, m)
        per_seed = {"r": r}
        for idx, name in enumerate(MECHANISMS):
            if name not in config.mechanisms:
                continue
            v = None
            if name in designs:
                Lv = designs[name].mechanism.covariance.factor
                z = _stream(seed, idx + 1).standard_normal(Lv.shape[1])
                v = (Lv @ z).reshape(T + 1, m)
            y, e = loop.simulate(r, v)
            mse[name].append(float(np.mean(e.values ** 2)))
            per_seed[name] = (y.values, e.values)
        trajectories[seed] = per_seed

    outcomes = {}
    for name in config.mechanisms:
        if name in designs:
            design = designs[name]
            Lv = design.mechanism.covariance.factor
            err_trace = float(np.sum((Theta @ Lv) ** 2))
            noise_trace = design.trace
            check = design.check
            empirical = None
            if config.samples:
                est = empirical_bdp(prior, design.mechanism, N_out, budget,
                                    config.samples, config.seeds[0])
                empirical = {"gamma_hat": est.gamma_hat, "half_width": est.half_width,
                             "samples": est.samples, "seed": est.seed}
        else:
            err_trace, noise_trace = 0.0, 0.0
            check = _noise_free_check(prior, budget)
            empirical = None
        vals = tuple(mse[name])
        outcomes[name] = MechanismOutcome(
            name=name, mse_per_seed=vals, mse_mean=float(np.mean(vals)),
            error_variance_trace=err_trace, noise_trace=noise_trace,
            check=check, empirical=empirical)

    rho = loop.spectral_radius()
    return ExperimentReport(
        T=T,
        c=chi_radius(budget.gamma, prior.dim),
        R=r_threshold(budget),
        spectral_radius=rho,
        unstable=bool(rho >= 1.0),
        theta_prior_trace=theta_prior,
        iid_bound_trace=iid_bound,
        prior_lambda_max=lam_max,
        prior_trace=prior.covariance.trace,
        outcomes=outcomes,
        trajectories=trajectories,
    )


def _fmt(x: float) -> str:
    # repr-exact and locale-independent.
    return repr(float(x)) if math.isfinite(x) else str(float(x))


def trajectories_csv(report: ExperimentReport) -> str:
    """Per-time CSV with columns seed, t, r, then y_p_<mech> and e_<mech> per mechanism.

    Vector-valued signals get one column per component (``r_0``, ``r_1``, ...).
    """
    names = list(report.outcomes)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    first = next(iter(report.trajectories.values()))
    m = first["r"].shape[1]
    q = first[names[0]][0].shape[1]

    def cols(prefix, k):
        return [prefix] if k == 1 else [f"{prefix}_{i}" for i in range(k)]

    header = ["seed", "t"] + cols("r", m)
    for name in names:
        header += cols(f"y_p_{name}", q) + cols(f"e_{name}", q)
    writer.writerow(header)
    for seed, data in report.trajectories.items():
        for t in range(report.T + 1):
            row = [str(seed), str(t)] + [_fmt(x) for x in data["r"][t]]
            for name in names:
                y, e = data[name]
                row += [_fmt(x) for x in y[t]] + [_fmt(x) for x in e[t]]
            writer.writerow(row)
    return buf.getvalue()
