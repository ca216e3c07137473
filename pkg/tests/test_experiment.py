import numpy as np
import pytest

from dplds import PrivacyBudget, ValidationError
from dplds.experiment import ExperimentConfig, run_experiment, trajectories_csv


@pytest.fixture(scope="module")
def small_report():
    return run_experiment(ExperimentConfig(horizon=30, seeds=(0, 1, 2)))


def test_report_shapes(small_report):
    rep = small_report
    assert rep.T == 30
    assert list(rep.outcomes) == ["noisefree", "iid", "optimal"]
    assert all(len(o.mse_per_seed) == 3 for o in rep.outcomes.values())
    assert not rep.unstable and rep.spectral_radius == pytest.approx(0.978, abs=1e-3)


def test_noise_traces_order(small_report):
    o = small_report.outcomes
    assert o["noisefree"].noise_trace == 0.0
    assert o["optimal"].noise_trace < o["iid"].noise_trace
    assert o["optimal"].check.satisfied and o["iid"].check.satisfied
    assert not o["noisefree"].check.satisfied


def test_error_trace_matches_scaled_prior_trace(small_report):
    opt = small_report.outcomes["optimal"]
    scale = opt.noise_trace / small_report.prior_trace
    assert opt.error_variance_trace == pytest.approx(scale * small_report.theta_prior_trace,
                                                     rel=1e-9)


def test_mechanism_selection_is_canonical_and_reproducible():
    a = run_experiment(ExperimentConfig(horizon=10, seeds=(4,), mechanisms=("optimal", "noisefree")))
    b = run_experiment(ExperimentConfig(horizon=10, seeds=(4,), mechanisms=("noisefree", "optimal")))
    assert list(a.outcomes) == ["noisefree", "optimal"]
    assert trajectories_csv(a) == trajectories_csv(b)
    # Dropping iid does not change the optimal stream.
    full = run_experiment(ExperimentConfig(horizon=10, seeds=(4,)))
    assert full.outcomes["optimal"].mse_per_seed == a.outcomes["optimal"].mse_per_seed


def test_csv_layout(small_report):
    text = trajectories_csv(small_report)
    lines = text.strip().split("\n")
    assert lines[0] == ("seed,t,r,y_p_noisefree,e_noisefree,y_p_iid,e_iid,"
                        "y_p_optimal,e_optimal")
    assert len(lines) == 1 + 3 * 31
    row = lines[1].split(",")
    r, y, e = float(row[2]), float(row[3]), float(row[4])
    assert e == pytest.approx(r - y, abs=1e-15)


def test_empirical_samples_attached():
    rep = run_experiment(ExperimentConfig(horizon=5, seeds=(0,), samples=2000,
                                          mechanisms=("optimal",)))
    emp = rep.outcomes["optimal"].empirical
    assert emp["samples"] == 2000 and 0 <= emp["gamma_hat"] <= 1


def test_config_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(mechanisms=("laplace",))
    with pytest.raises(ValidationError):
        ExperimentConfig(seeds=())
    with pytest.raises(ValidationError):
        ExperimentConfig(horizon=-1)
    with pytest.raises(ValidationError):
        ExperimentConfig(budget=PrivacyBudget(1.0, 0.1))


def test_report_to_dict(small_report):
    d = small_report.to_dict()
    assert set(d["mechanisms"]) == {"noisefree", "iid", "optimal"}
    assert np.isfinite(d["c"]) and d["T"] == 30
