"""Numerical toolkit for arbitrarily varying classical-quantum wiretap channels.

The package models finite families of paired (legal, eavesdropper)
cq channels whose shared state is chosen adversarially per letter, and
provides: symmetrizability detection with a matching grid oracle, the
trace-norm defect functional, secrecy-rate evaluation and optimization,
key-assisted capacity, super-activation and perturbation analyses, small
random wiretap codes with exact worst-pattern error and leakage, and
empirical verifiers for the supporting operator lemmas.
"""

from .capacity import (
    CapacityReport,
    EavesTerm,
    KeyRateReport,
    LegalTerm,
    PerturbationReport,
    RateObjective,
    SuperactivationReport,
    conditional_entropy,
    eaves_term,
    holevo_chi,
    key_assisted_capacity,
    legal_term,
    maximize_legal_term,
    optimize_rate,
    perturbation_probe,
    rate_trend,
    secrecy_rate,
    superactivation_check,
)
from .channels import (
    AVWiretapChannel,
    ChannelFamily,
    ClassicalChannel,
    CQChannel,
    HatBlock,
    ProbabilityDistribution,
    apply,
    hat_precompose,
    load_channel,
    load_classical,
    mix_states,
    n_fold_output,
    precompose,
    precompose_family,
    save_channel,
    save_classical,
    tensor_channels,
)
from .codesim import (
    CoveringReport,
    DichotomyReport,
    SimReport,
    TypicalSampler,
    WiretapCode,
    build_code,
    concatenate_codes,
    covering_experiment,
    dichotomy_witness,
    error_probability,
    error_trend,
    pgm_decoder,
    sample_codebook,
    truncated_type_distribution,
    typical_projector,
    verify_typicality,
    worst_case,
)
from .config import DEFAULT_CONFIG, RunConfig
from .errors import (
    AlphabetMismatch,
    BadBlockLength,
    BudgetError,
    DimensionCap,
    DimensionMismatch,
    EmptyTypicalSet,
    EnumerationTooLarge,
    GridTooLarge,
    HypothesisViolated,
    LengthMismatch,
    NonConvergence,
    NotHermitian,
    NotPSD,
    NotSymmetrizable,
    OutOfRange,
    ParseError,
    SymmetrizableHypothesisViolated,
    ToolkitError,
    TraceNotOne,
    ValidationError,
)
from .quantum import (
    DensityMatrix,
    PovmElement,
    basis_projector,
    batch_von_neumann,
    binary_entropy,
    fannes_audenaert_bound,
    gentle_operator_check,
    maximally_mixed,
    partial_trace,
    pure_state,
    random_density,
    random_pure,
    tensor,
    trace_norm_distance,
    validate_density,
    von_neumann_entropy,
)
from .symmetrize import (
    INCONCLUSIVE,
    NOT_SYMMETRIZABLE,
    SYMMETRIZABLE,
    SymmetrizabilityReport,
    SymmetrizingMap,
    f_functional,
    grid_oracle,
    residual,
    solve_symmetrizability,
)

__version__ = "0.1.0"
