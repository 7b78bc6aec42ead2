"""Exact values, rigorous bounds, and Gaussian approximations for the
minimum average length of variable-length coding with an error budget,
lossless and lossy."""

__version__ = "0.1.0"

from .errors import (
    AtomCapExceeded,
    DpStateCapExceeded,
    Infeasible,
    InvalidEpsilon,
    NoValidParameter,
    NotConverged,
    OutOfRange,
    RankOutOfSupport,
    ScaleExceeded,
    TypeCapExceeded,
    UnknownSymbol,
    VlcLimitsError,
)
from .source import (
    Pmf,
    ProductSource,
    binary_entropy,
    entropy,
    info_distribution,
    phi,
    sum_iid_distribution,
    varentropy,
)
from .cutoff import CutoffSpec, cutoff_expectation_variational, solve_cutoff
from .optcode import (
    Codeword,
    OptimalCode,
    bits_to_rank,
    build_code,
    decode,
    deterministic_length,
    encode,
    mc_validate,
    rank_to_bits,
    theorem2_bounds,
    zero_error_length,
)
from .erokhin import (
    ErokhinPoint,
    erokhin_exact,
    erokhin_oracle,
    hamming_h0eps_bounds,
    psi,
    psi_inv,
    theorem1_bounds,
    theorem3_bounds,
)
from .iidlimits import (
    GaussApprox,
    TypeTable,
    build_type_table,
    dispersion_smalleps_check,
    einfo_cutoff_exact,
    erokhin_block_exact,
    gaussian_approx,
    lemma1_check,
    length_class_pmf,
    lstar_exact,
    qinv,
    theorem1_bounds_block,
    theorem2_bounds_block,
)
from .lossy import (
    DistortionSpec,
    RdSolution,
    ball_log_prob,
    default_output,
    hamming,
    hdeps_exact,
    lemma3_mc_check,
    rd_excess_solve,
    rd_solve,
    rplus,
    theorem5_and_hdeps,
    theorem6_bounds,
    tilted_cutoff_expansion,
)

__all__ = [
    "__version__",
    "VlcLimitsError", "InvalidEpsilon", "AtomCapExceeded", "UnknownSymbol",
    "RankOutOfSupport", "NoValidParameter", "NotConverged", "TypeCapExceeded",
    "Infeasible", "OutOfRange", "DpStateCapExceeded", "ScaleExceeded",
    "Pmf", "ProductSource", "entropy", "varentropy", "binary_entropy", "phi",
    "sum_iid_distribution", "info_distribution",
    "CutoffSpec", "solve_cutoff", "cutoff_expectation_variational",
    "Codeword", "OptimalCode", "build_code", "encode", "decode",
    "rank_to_bits", "bits_to_rank", "zero_error_length",
    "deterministic_length", "theorem2_bounds", "mc_validate",
    "ErokhinPoint", "erokhin_exact", "erokhin_oracle", "theorem1_bounds",
    "theorem3_bounds", "psi", "psi_inv", "hamming_h0eps_bounds",
    "TypeTable", "build_type_table", "lstar_exact", "einfo_cutoff_exact",
    "length_class_pmf", "theorem1_bounds_block", "theorem2_bounds_block",
    "erokhin_block_exact", "GaussApprox", "gaussian_approx", "qinv",
    "lemma1_check", "dispersion_smalleps_check",
    "DistortionSpec", "hamming", "RdSolution", "rd_solve", "rd_excess_solve",
    "rplus", "default_output", "ball_log_prob", "theorem6_bounds",
    "hdeps_exact", "theorem5_and_hdeps", "tilted_cutoff_expansion",
    "lemma3_mc_check",
]
