"""pmqcc: simulation and analysis engine for N-party phase-matching
quantum cryptographic conferencing.

Computes asymptotic conference-key rates from a physical channel and
detector model, certifies decoy-state bounds, cross-validates the
analytics against a round-level Monte Carlo protocol simulator, and
optimizes protocol parameters.
"""

from .core import (
    ChannelParams,
    ParitySplit,
    ProtocolParams,
    binary_entropy,
    intrinsic_misalignment,
    parity_split,
    poisson_weight,
    transmittance,
    truncation_order,
)
from .decoy import (
    DecoyBounds,
    DecoyGains,
    decoy_bounds,
    n_cut_for,
    phase_error_upper,
    rate_lower,
    simulate_decoy_gains,
    y2_lower_3party,
    yields_lower_general,
)
from .errors import (
    DegenerateGeometryError,
    EnumerationLimitError,
    InsufficientDataError,
    InsufficientIntensitiesError,
    ParameterError,
    PMQCCError,
)
from .interference import (
    BranchStats,
    ClickProbabilities,
    branch_gain_avg,
    branch_qber_avg,
    branch_success,
    click_probabilities,
    exact_branch_average,
    phase_delta_density,
)
from .keyrate import (
    RateReport,
    marginal_qber,
    qber_star,
    rate_pmqcc,
    rate_pmqcc_star,
    rate_reduced,
    scaling_exponent,
)
from .montecarlo import EmpiricalEstimates, SimConfig, SimTally, estimate, run_rounds
from .optimize import OptimizationResult, optimize_decoys, optimize_signal
from .yields import (
    BranchSpec,
    BranchTopology,
    YieldTable,
    gain_from_yields,
    phase_error_rate,
    yield_probability,
    yield_table,
)

__version__ = "0.1.0"
