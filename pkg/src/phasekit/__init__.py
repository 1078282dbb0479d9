"""Phase retrieval from sub-Gaussian rank-one measurements."""

from .ensembles import (
    BUILTIN_ENTRIES,
    GAUSSIAN,
    TERNARY,
    UNIFORM,
    DerivedConstants,
    Ensemble,
    EntryDistribution,
    Field,
    MeasurementSet,
    MomentProfile,
    custom_entry,
    derived_constants,
    entry_moments,
    moment_profile,
    sample_measurements,
)
from .solver import (
    AlignedDistance,
    BarzilaiBorwein,
    FixedStep,
    SolveReport,
    SolveStatus,
    SolverConfig,
    bb_step,
    dist,
    gradient,
    objective,
    phase_align,
    solve,
)
from .spectral import (
    InitResult,
    baseline_si,
    build_M,
    build_Y,
    gsi,
    measure,
    power_method,
    rho_from_intensities,
)
from .verify import (
    ConcentrationRow,
    ResidualReport,
    concentration_curve,
    condition_expectation,
    convergence_rate_fit,
    f_block_expectation,
    hermitian_opnorm,
    mc_F_residual,
    mc_condition_residual,
    mc_scalar_identities,
    project_admissible,
    scalar_identity_expectations,
)
from .bench import (
    ExperimentConfig,
    ExperimentKind,
    ResultTable,
    TrialRecord,
    export,
    generate_signal,
    run_init_experiment,
    run_recovery_experiment,
    run_recovery_trial,
    trial_seed,
)

__version__ = "0.1.0"
