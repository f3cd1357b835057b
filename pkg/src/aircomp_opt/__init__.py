"""Task-oriented over-the-air computation for multi-device split inference.

Library plus CLI harness that designs analog-aggregation transceivers
(receive beamformer, per-device steering powers, zero-forcing precoders)
to maximize the classification discriminant gain of the aggregated
features, and evaluates the resulting inference accuracy by Monte-Carlo
simulation against MMSE-style baselines.
"""

from .aircomp import (
    AggregationResult,
    BeamformerNullsDevice,
    TransceiverDesign,
    aggregate,
    aggregate_batch,
    check_design,
    make_design,
    max_precoding_power,
    pack_symbol,
    zf_precoders,
)
from .channel import (
    ChannelRealization,
    DeviceProfile,
    NoiseModel,
    path_loss_db,
    place_devices,
    sample_channels,
    sample_observation,
    sample_observation_batch,
    sample_rx_noise,
)
from .features import (
    FeatureStatistics,
    PcaProjection,
    ReceivedElementStats,
    element_gains,
    fit_feature_statistics,
    pairwise_element_gain,
    pca_fit,
    pca_project,
    received_element_stats,
    received_gain,
    symbol_second_moment,
    synthetic_mixture,
    total_gain,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    PointResult,
    emit_report,
    map_classify,
    run_point,
    run_sweep,
)
from .optimizer import (
    ConvexSubproblem,
    GainProblem,
    KktDiagnostics,
    ScaOptions,
    ScaState,
    baseline_mmse_centroid,
    baseline_random,
    build_gain_problem,
    build_subproblem,
    initialize_reference,
    kkt_check,
    sca_optimize,
    solve_subproblem,
    state_feasibility,
)

__version__ = "0.1.0"
