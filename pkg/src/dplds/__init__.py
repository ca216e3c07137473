"""Bayesian differential privacy for discrete-time linear systems.

Calibration and verification of Gaussian noise mechanisms that hide the
input sequence of an LTI system, plus minimum-energy noise designs.
"""

from .design import (
    DesignResult,
    filter_prior,
    iid_input_noise,
    lowpass_reference_model,
    optimal_input_noise,
    optimal_output_noise,
    step_prior,
    white_prior,
)
from .errors import (
    DegeneratePriorError,
    DimensionError,
    DpldsError,
    InfeasibleError,
    NotPositiveDefiniteError,
    NumericalError,
    RankDeficientError,
    ValidationError,
)
from .privacy import (
    CheckReport,
    CovarianceMatrix,
    EmpiricalBDP,
    GaussianPrior,
    MechanismSpec,
    bdp_check,
    bdp_input_check,
    prior_matched_weight,
    dp_check,
    empirical_bdp,
    pairwise_delta,
)
from .specfun import (
    PrivacyBudget,
    c_gamma,
    chi2_cdf,
    chi2_quantile,
    q_function,
    q_inverse,
    r_threshold,
)
from .sysmat import (
    ClosedLoopModel,
    LiftedOperator,
    StateSpaceModel,
    Trajectory,
    bode_gain,
    close_loop,
    lift,
    load_model,
    simulate,
)

__version__ = "0.1.0"
