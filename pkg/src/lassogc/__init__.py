"""Granger-causality detection in sparse VAR time series.

The package pairs the classical log-ratio causality measure (with its
chi-square test) with an l1-regularized counterpart whose thresholding rule
carries a closed-form finite-sample false-positive bound, plus a calculator
for every population constant behind that bound and a reproducible sweep
harness.
"""

__version__ = "0.1.0"

from .causality import (
    Chi2Test,
    GcResult,
    ThresholdRule,
    attach_p_values,
    chi2_sf,
    classical_gc_test,
    conditional_lgc,
    corollary_sampling_requirement,
    fp_probability,
    gc_pipeline,
    lgc_p_value,
    lgc_statistic,
    threshold_for_fpr,
)
from .errors import (
    InfeasibleThresholdError,
    InputError,
    NumericalError,
    StructuralError,
    UnstableModelError,
)
from .experiments import (
    PairAnalysis,
    Psth,
    SweepConfig,
    SweepRecord,
    SweepResult,
    analyze_pair,
    bin_spikes,
    builtin_sim_model,
    ingest_csv,
    load_model,
    render_plots,
    run_sweep,
)
from .regression import (
    CvReport,
    DesignProblem,
    LassoFit,
    build_design,
    cross_validate_lambda,
    default_lambda_grid,
    fit_lasso,
    fit_ols,
    lambda_max,
    lasso_path,
    restrict,
    soft_threshold,
)
from .theory import (
    AbsoluteConstants,
    PopulationBlocks,
    TheoryInputs,
    TheoryReport,
    deviation_radii,
    inputs_from_model,
    normal_concentration_bound,
    population_blocks,
    population_gram,
    quadratic_positivity_bound,
    theory_report,
    theory_report_from_inputs,
)
from .var_model import (
    CompanionForm,
    SpectralSummary,
    Stability,
    Trajectory,
    VarModel,
    autocovariance,
    companion_form,
    is_stable,
    simulate,
    spectral_density,
    spectral_summary,
)
