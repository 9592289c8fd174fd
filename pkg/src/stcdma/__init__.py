"""Blind adaptive linear multiuser receivers for space-time block-coded
DS-CDMA downlinks: signal model, constrained receivers, blind channel
estimators, and a seeded Monte Carlo harness with a CSV-emitting CLI.
"""

from .channel_estimation import (
    ChannelEstimate,
    CovarianceEstimate,
    PsiEstimate,
    align_phase,
    canonical_phase,
    estimate_channel_exact,
    phase_aligned_mse,
    scaled_inverse_power,
    sg_channel_step,
    sg_psi_step,
)
from .errors import (
    ConditioningError,
    ScenarioError,
    SingularConstraintError,
    StepSizeError,
)
from .fading import clarke_fading_sequence
from .harness import (
    MetricRow,
    MetricsSeries,
    TrialResult,
    channel_mse,
    half_width,
    run_trial,
    smooth_series,
    sweep,
    trial_seed,
)
from .receivers import (
    CcmStatistics,
    CombinerGains,
    FilterPair,
    ProjectionPair,
    ccm_exact_filter,
    ccm_sg_step,
    cmv_exact_filter,
    cmv_sg_step,
    combine,
    constrained_quadratic_filter,
    constraint_projector,
    constraint_restorer,
    detect,
    min_norm_feasible_pair,
    projection_pair,
    trained_lms_step,
)
from .scenario import (
    ALGORITHMS,
    ESTIMATORS,
    Scenario,
    parse_scenario,
    parse_scenario_file,
    serialize_scenario,
)
from .signal_model import (
    SpaceTimeChannel,
    SymbolStream,
    alamouti_encode,
    assemble_received_block,
    flat_unit_channel,
    random_multipath_channel,
    random_qpsk,
    random_symbol_stream,
    simulate_packet,
    three_path_placement,
)
from .spreading import (
    SIGN_FLIPPED,
    ZERO_PADDED,
    ConstraintMatrices,
    SpreadingSet,
    build_constraint_matrices,
    build_convolution_matrix,
    random_spreading_set,
    user_constraint_matrices,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "ESTIMATORS",
    "CcmStatistics",
    "ChannelEstimate",
    "CombinerGains",
    "ConditioningError",
    "ConstraintMatrices",
    "CovarianceEstimate",
    "FilterPair",
    "MetricRow",
    "MetricsSeries",
    "ProjectionPair",
    "PsiEstimate",
    "ScenarioError",
    "Scenario",
    "SIGN_FLIPPED",
    "SingularConstraintError",
    "SpaceTimeChannel",
    "SpreadingSet",
    "StepSizeError",
    "SymbolStream",
    "TrialResult",
    "ZERO_PADDED",
    "alamouti_encode",
    "align_phase",
    "assemble_received_block",
    "build_constraint_matrices",
    "build_convolution_matrix",
    "canonical_phase",
    "ccm_exact_filter",
    "ccm_sg_step",
    "channel_mse",
    "clarke_fading_sequence",
    "cmv_exact_filter",
    "cmv_sg_step",
    "combine",
    "constrained_quadratic_filter",
    "constraint_projector",
    "constraint_restorer",
    "detect",
    "estimate_channel_exact",
    "flat_unit_channel",
    "half_width",
    "min_norm_feasible_pair",
    "parse_scenario",
    "parse_scenario_file",
    "phase_aligned_mse",
    "projection_pair",
    "random_multipath_channel",
    "random_qpsk",
    "random_spreading_set",
    "random_symbol_stream",
    "run_trial",
    "scaled_inverse_power",
    "serialize_scenario",
    "sg_channel_step",
    "sg_psi_step",
    "simulate_packet",
    "smooth_series",
    "sweep",
    "three_path_placement",
    "trained_lms_step",
    "trial_seed",
]
