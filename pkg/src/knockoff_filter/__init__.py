"""FDR-controlled variable selection for Gaussian linear models.

Build knockoff copies of a design matrix, score each feature against its
knockoff with an antisymmetric statistic, and select everything above a
data-dependent threshold that keeps the estimated false discovery
proportion below a target level.  Baseline selectors (BHq and variants,
permuted designs), the underlying sequential testing procedures, and a
reproducible simulation harness round out the toolchain.
"""

from .construction import (
    AugmentedDesign,
    CycleRound,
    DesignMatrix,
    GapKind,
    GapVector,
    construct_knockoffs,
    duplicate_cycle_plan,
    equicorrelated_s,
    fallback_gap,
    normalize_design,
    row_augment,
    sdp_s,
)
from .data import LoadReport, load_dataset
from .errors import (
    DegenerateResiduals,
    DimensionError,
    InfeasibleGap,
    KnockoffError,
    MaxIterations,
    ParseError,
    ShapeMismatch,
    SingularAugmentedGram,
    SingularGram,
    SolverDiverged,
    TooManyFeatures,
    ZeroColumn,
)
from .lasso import EntryProfile, LambdaGrid, entry_values, lambda_max, lasso_solve
from .baselines import (
    Correction,
    ZScores,
    ZSource,
    bhq_select,
    bhq_whitened,
    ls_zscores,
    permute_design,
)
from .selection import SelectionResult, fdp_hat, threshold, write_selection_csv
from .sequential import (
    PValueSequence,
    SequentialResult,
    binomial_ratio_expectation,
    fstp,
    null_experiment,
    one_bit_reduction,
    sstp,
)
from .simulate import (
    ExperimentSpec,
    ExperimentSummary,
    TrialOutcome,
    generate_instance,
    mix_seed,
    run_experiment,
    run_methods,
    run_trial,
    write_results_csv,
)
from .stats import (
    StatisticKind,
    WVector,
    check_antisymmetry,
    compute_statistic,
    w_fixed_penalty,
    w_from_entries,
    w_entry_difference,
    w_inner_product,
    w_least_squares,
)

__version__ = "0.1.0"
