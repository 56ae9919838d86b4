"""Block-completion delay of broadcast over independent erasure channels.

Computes, bounds, simulates, and cross-validates the number of slots until
every receiver decodes a block of packets, for uncoded rebroadcast and for
random linear combinations over a finite or infinite field.
"""

from .asymptotics import (
    EvtContext,
    bn_sequence,
    evt_moment_sandwich,
    gamma_max_moment,
    m1_rbc_approx,
    scaling_ratio,
    tight_sequences,
)
from .bounds import (
    BoundInterval,
    TailFunction,
    bounds_a1,
    bounds_a2,
    bounds_a3,
    delacal_lower,
    exponential_tail,
    gamma_tail,
    per_packet_bounds,
    ross_upper,
    ross_upper_optimized,
)
from .channel import (
    Assumption,
    Channel,
    INFINITE,
    classify,
    homogenize,
    is_infinite,
    success_matrix,
)
from .exceptions import (
    DegenerateRates,
    GuardError,
    NoCounterexample,
    NonConvergence,
    NonPrimeField,
    QuadratureError,
)
from .rlc import (
    MomentTable,
    SeriesResult,
    per_packet_limit,
    rlc_moment_series,
    rlc_recurrence_min,
    rlc_recurrence_moments,
)
from .sim import InnovationStats, SimEstimate, pooled_z, simulate_geometric, simulate_gf
from .special import (
    BetaParams,
    EULER_GAMMA,
    RateVector,
    SumExpCCDF,
    gamma_ccdf,
    gamma_ccdf_inv,
    gumbel_moment,
    harmonic,
    hypoexp_cdf,
    phi,
    reg_inc_beta,
    stirling2,
)
from .traces import (
    ErasureTrace,
    adversarial_trace,
    load_trace,
    random_traces,
    save_trace,
    shared_trace_experiment,
    trace_delay,
)
from .ut import (
    MomentQuery,
    geo_moment,
    ut_max_moment_bounds,
    ut_max_moment_exact,
    ut_mean_eisenberg,
)

__version__ = "0.1.0"
