"""Capacity-distortion tradeoffs for channels with state at the encoder.

A library and CLI for computing how much independent information a
discrete memoryless channel with i.i.d. state can carry while the decoder
estimates the state within a distortion budget, when the encoder learns
the state strictly causally or causally.  Includes closed forms for the
Gaussian and binary-symmetric families, a numeric Lagrangian-sweep solver,
a Monte Carlo simulator of the block Markov achievability scheme, and the
K-card trick as exact zero-distortion causal state communication.
"""

__version__ = "0.1.0"

from .blockmarkov import (
    BlockCodebook,
    CodeRates,
    SimReport,
    TypicalityParams,
    build_codebook,
    is_typical,
    simulate,
)
from .cardtrick import (
    Arrangement,
    CardTrickInstance,
    decode_trick,
    encode_trick,
    max_deck,
    rank_permutation,
    unrank_permutation,
    verify_roundtrip,
)
from .cdsolve import (
    CausalDesign,
    JointDesign,
    LosslessReport,
    NoncausalDesign,
    SolverOptions,
    TradeoffRegion,
    arimoto_capacity,
    evaluate_design,
    lossless_feasible,
    noncausal_lower_bound,
    rate_delta_region,
    shannon_expand,
    solve_cd_curve,
    solve_dstar,
    strategy_map,
    unconstrained_capacity,
    uncertainty_reduction_rate,
)
from .closedform import (
    BSC_WZ_DISCREPANCY_NOTE,
    BscParams,
    GaussianParams,
    bsc_cd_causal,
    bsc_cd_strictly_causal,
    bsc_dstar,
    bsc_wz_rate,
    bsc_wz_rate_raw,
    gaussian_cd_strictly_causal,
    gaussian_dstar,
    gaussian_wz_distortion_rate,
    injective_capacity,
)
from .curves import CdCurve, upper_envelope
from .errors import (
    CodebookMemoryError,
    EncodingInfeasibleError,
    ExpansionTooLargeError,
    InjectivityError,
    ParseError,
    StatecommError,
    UndecodableArrangementError,
    ValidationError,
)
from .estimator import (
    DistortionTable,
    EstimatorTable,
    expected_distortion,
    optimal_estimator,
    optimal_expected_distortion,
)
from .probcore import (
    JointPmf,
    SimplexVector,
    StateChannel,
    StochasticTable,
    assemble_joint,
    binary_convolution,
    binary_entropy,
    bsc_channel,
    channel_from_map,
    entropy,
    gaussian_capacity_fn,
    mutual_information,
    parse_channel,
    serialize_channel,
)
