"""Optimal trading under partially observed price-pressure regimes.

The package covers the full loop: latent-regime market models
(:mod:`artifact.latent_chain`, :mod:`artifact.simulator`), regime filters
(:mod:`artifact.filtering`), closed-form optimal trading rates
(:mod:`artifact.control`), Monte Carlo strategy studies
(:mod:`artifact.simulator`) and EM calibration of the censored jump model
(:mod:`artifact.calibration`).  The ``artifact`` console script exposes
``simulate``, ``calibrate`` and ``filter`` commands.
"""

from .calibration import (
    Dataset,
    EMFit,
    EMParams,
    JumpModelCalibrator,
    backward_pass,
    bic,
    default_init,
    em_fit,
    em_step,
    emission_prob,
    forward_backward,
    forward_filter_probs,
    forward_pass,
    generator_from_transition,
    icl,
    n_free_params,
    simulate_dataset,
    sort_states_by_mu,
    viterbi,
)
from .control import (
    ControlConstants,
    CostParams,
    ac_speed,
    control_constants,
    decay_weight_integral,
    h1_jump,
    h1_ou,
    h1_weight,
    h2,
    optimal_speed,
    psi1_matrix,
    psi1_scalar,
    psi2_matrix,
    psi2_scalar,
    riccati_residual,
    twap_speed,
)
from .filtering import (
    FilterState,
    ObservationStep,
    forward_filter_as_continuous_check,
    generic_filter_step,
    jump_filter_step,
    jump_filter_stepper,
    normalize,
    ou_filter_from_path,
    ou_filter_stepper,
)
from .latent_chain import (
    ChainPath,
    LatentChainSpec,
    levels_on_grid,
    matrix_exponential,
    sample_chain_path,
    state_at,
    transition_matrix,
)
from .simulator import (
    Grid,
    JumpModel,
    MarketPath,
    OUModel,
    StudyConfig,
    StudySummary,
    TraderState,
    TrajectoryRecord,
    excess_return,
    h0_estimate,
    monte_carlo_study,
    run_strategy,
    simulate_jump_path,
    simulate_ou_path,
)

__version__ = "0.1.0"

__all__ = [
    "ChainPath", "ControlConstants", "CostParams", "Dataset", "EMFit",
    "EMParams", "FilterState", "Grid", "JumpModel", "JumpModelCalibrator",
    "LatentChainSpec", "MarketPath", "OUModel", "ObservationStep",
    "StudyConfig", "StudySummary", "TraderState", "TrajectoryRecord",
    "ac_speed", "backward_pass", "bic", "control_constants",
    "decay_weight_integral", "default_init", "em_fit", "em_step",
    "emission_prob", "excess_return", "forward_backward",
    "forward_filter_as_continuous_check", "forward_filter_probs",
    "forward_pass", "generator_from_transition", "generic_filter_step",
    "h0_estimate", "h1_jump", "h1_ou", "h1_weight", "h2", "icl",
    "jump_filter_step", "jump_filter_stepper", "levels_on_grid",
    "matrix_exponential", "monte_carlo_study", "n_free_params", "normalize",
    "optimal_speed", "ou_filter_from_path", "ou_filter_stepper",
    "psi1_matrix", "psi1_scalar", "psi2_matrix", "psi2_scalar",
    "riccati_residual", "run_strategy", "sample_chain_path",
    "simulate_dataset", "simulate_jump_path", "simulate_ou_path",
    "sort_states_by_mu", "state_at", "transition_matrix", "twap_speed",
    "viterbi",
]
