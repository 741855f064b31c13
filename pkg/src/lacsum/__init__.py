"""Rectangular partial sums of multiple Fourier series at desk scale.

Lacunary index families, log-product convergence weights, weighted maximal
sweeps over finite index spaces, and the exact summation identities that
back them, with a CLI for convergence and maximal-ratio experiments.
"""

__version__ = "0.1.0"

from .errors import AliasingError, DegenerateInputError, EmptyFamilyError, LacsumError
from .lattice import (
    JkIndexSpace,
    LacunaryFamily,
    SampleJk,
    enumerate_jk_indices,
    make_lacunary,
    make_lacunary_covering,
    validate_lacunary,
)
from .spectral import (
    GridFunction,
    ShellTensor,
    Spectrum,
    TorusGrid,
    analyze,
    build_shell_tensor,
    cesaro_mean,
    dirichlet_kernel,
    fejer_kernel,
    grid_l2,
    grid_linf,
    partial_sum,
    restrict,
    single_mode_spectrum,
    split_lacunary_blocks,
    synthesize,
    zero_spectrum,
)
from .weyl import (
    WeylWeight,
    check_weyl_conditions,
    full_product_weight,
    min_pair_weight,
    product_weight,
    table_weight,
    unit_weight,
    weighted_energy,
)
from .maximal import (
    MaximalReport,
    diagonal_maximal,
    gather_max,
    level_set_measure,
    single_free_maximal,
    sweep_space,
    weak_type_table,
    weighted_maximal,
)
from .seqcalc import (
    AbelCheck,
    ConvexWeight,
    SlowSequence,
    abel_identity_check,
    build_convex_b,
    build_slow_sequence,
    difference,
    dyadic_square_anchor,
    iterated_prefix_sum,
    telescope_split,
)
from .decomp import (
    DecompositionResult,
    apply_pair_weight,
    coefficient_transfer,
    decompose_free_pair,
    min_log_inverse,
    min_log_inverse_diffs,
    summed_partial_sums,
)
from .suites import (
    ExperimentConfig,
    Report,
    emit_report,
    gen_test_function,
    run_convergence_suite,
    run_identity_suite,
    run_maximal_suite,
)
