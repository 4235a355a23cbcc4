"""Outlier-robust Gromov-Wasserstein alignment via trimmed partial couplings."""

from .measures import (
    DiscreteMeasure,
    MMSpace,
    apply_isometry,
    load_measure,
    measure_min,
    normalize,
    point_mass,
    random_rotation,
    save_measure,
    scale_points,
    tv_distance,
)
from .objective import (
    ObjectiveReport,
    PartialCoupling,
    distortion,
    gradient,
    gw_to_point,
    gw_to_point_from_samples,
    line_search,
    objective_report,
    pgw_to_point,
)
from .solvers import (
    SolveReport,
    SolverConfig,
    brute_force_gw,
    partial_lmo,
    solve_gw,
    solve_pgw,
    transport_lp,
)
from .contamination import (
    ContaminationSpec,
    FamilySpec,
    TwoPointPair,
    corrupt_samples,
    far_outlier,
    mirror_blend,
    sample_family,
    two_point_pair,
)
from .estimators import (
    EstimatorSpec,
    ResilienceQuery,
    estimate,
    resilience_bound,
    resilience_search,
    sandwich_bound,
)
from .experiments import (
    MetricSuiteReport,
    RiskRecord,
    SlopeFit,
    SweepConfig,
    convergence_study,
    fit_exponent,
    metric_suite,
    run_sweep,
    write_records_csv,
    write_summary_json,
)

__version__ = "0.1.0"
