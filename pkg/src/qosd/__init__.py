"""Quaternary BP + ordered-statistics decoding for stabilizer codes."""

from .bp4 import (
    BeliefState,
    BpConfig,
    BpOutcome,
    Bp4Decoder,
    alpha_of_epsilon,
    alpha_sequence,
    bp4_decode,
    bp4_decode_adaptive,
    soft_reliability,
    soft_reliability_arrays,
)
from .codes import (
    CodeSpec,
    StabilizerCode,
    build_bb_preset,
    build_bivariate_bicycle,
    build_rotated_surface,
    build_rotated_toric,
    load_code,
    save_code,
)
from .osd import (
    OsdSystem,
    ReliabilityOrder,
    build_order,
    build_system,
    flip_candidate,
    order_from_budget,
    osd2_budget,
    osd_w,
    osd0_solution,
)
from .reduction import (
    ReducedSystem,
    adosd,
    corollary_check,
    hrsr,
    lift,
    stabilizer_flip_check,
)
from .sim import (
    AggregateStats,
    ChannelModel,
    Decoder,
    PipelineConfig,
    run_trials,
    sample_error,
    threshold_scan,
    timing_probe,
    wilson_interval,
)
from .symplectic import (
    pauli_to_bits,
    pauli_weight,
    symplectic_product,
    syndrome_of,
)

__version__ = "0.1.0"
