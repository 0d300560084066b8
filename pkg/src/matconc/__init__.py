"""Concentration bounds for sums of Markov-dependent random matrices.

The library has three layers: closed-form Hoeffding/Bernstein-type
bounds on the noncommutative moment generating function and on tail
probabilities of the largest eigenvalue (``bounds``); exact evaluation
of that MGF on finite chains via lifted transfer operators, including
sandwich eigenvalues and the resolvent fixed-point root (``lift``); and
seeded Monte Carlo estimation plus a verification suite that checks
every inequality against the exact machinery (``mc``).
"""
from .bounds import (
    BernsteinParams,
    BoundReport,
    HoeffdingParams,
    alpha,
    bernstein_mgf_bound,
    bernstein_tail_bound,
    beta,
    complex_correction,
    gt_tail_pipeline,
    hoeffding_mgf_bound,
    hoeffding_tail_bound,
    nonstationary_correction,
)
from .chain import (
    FiniteChain,
    Trajectory,
    absolute_spectral_gap,
    leon_perron,
    leon_perron_coupled_sample,
    radon_nikodym_norm,
    sample_trajectory,
    stationary_distribution,
    two_state_hoeffding_chain,
    validate_chain,
)
from .errors import NumericError, ValidationError
from .lift import (
    LiftedOperator,
    ObservableSequence,
    SpectralReport,
    build_H,
    build_T,
    eta_tilde,
    exact_mgf,
    k_theta,
    leading_eigenvalue_sandwich,
    lift_kernel,
    make_observable,
    mult_operator,
    pi_operator_norm,
    root_rstar,
    sandwich,
    validate_observable,
)
from .mc import (
    EstimateWithCI,
    VerificationRecord,
    asymptotic_variance_check,
    enumerated_mgf,
    enumerated_tail,
    estimate_mgf,
    estimate_tail,
    gt_consequence_check,
    limit_convergence_study,
    majorization_check,
    verify_all,
)

__version__ = "0.1.0"
