"""Spectral rough-path toolkit for the periodic KdV equation."""

from .spectral import (
    SpectralCoeffs,
    FLNormParams,
    fl_norm,
    airy_evolve,
    project,
    nonlinearity,
    l2_inner,
    random_state,
    random_unit_state,
    read_coeffs_csv,
    write_coeffs_csv,
)
from .increments import (
    TimeGrid,
    TwoIndexField,
    ThreeIndexField,
    delta_path,
    delta2,
    holder_norm,
    holder_norm_3,
    sew,
    grr_functional,
    SewingError,
)
from .operators import (
    RegularityPair,
    OperatorSpec,
    alpha_star,
    in_region_d,
    in_region_d_prime,
    m_integral,
    xdot_op,
    x_op,
    x2_op,
    gamma_correction,
    x3a_op,
    x3b_op,
    multiplier_norm_bound,
    operator_norm_estimate,
    holder_growth_probe,
)
from .solver import (
    SolverConfig,
    Trajectory,
    ControlledTriple,
    BlowUpError,
    NonContractionError,
    euler_solve,
    galerkin_modified_solve,
    galerkin_naive_solve,
    compute_hamiltonian,
    picard_iterate,
    global_solve_l2,
    l2_norm_sq,
    write_trajectory_csv,
)
from .stochastic import (
    NoiseSpec,
    NoisePath,
    sample_noise,
    xw_op,
    stochastic_euler_solve,
    lambda_profile,
)
from .harness import (
    ExperimentConfig,
    FitResult,
    Report,
    fit_loglog,
    run_identity_suite,
    run_convergence_study,
    run_conservation_study,
    run_noise_study,
    run_solve,
)

__version__ = "0.1.0"
