"""Robust linear system identification by l1 decoding.

Sliding-window Gaussian observation matrices, an exact least-absolute-
deviation simplex, correctable-fraction thresholds, exact recoverability
certificates for small instances, and Monte Carlo experiments.
"""
from .certifier import (
    CertResult,
    adversarial_error,
    balancedness_margin,
    certification_report,
    certify_all_supports,
    certify_support,
)
from .experiments import (
    CurvePoint,
    TrialConfig,
    TrialResult,
    concentration_probe,
    consistency_experiment,
    run_recovery_trial,
    threshold_curve,
    weak_recovery_curve,
)
from .lad_solver import LadSolution, OptimalityCertificate, check_optimality, objective, solve_lad
from .signal_model import (
    GaussSequence,
    NoiseSpec,
    ProblemInstance,
    SparseVector,
    ToeplitzMatrix,
    build_matrix,
    generate_sequence,
    observe,
    read_instance,
    sample_noise,
    sample_outliers,
    write_instance,
)
from .thresholds import (
    ThresholdParams,
    ThresholdResult,
    expected_abs_gain,
    is_feasible,
    log_gauss_tail,
    std_normal_cdf,
    strong_threshold,
    theorem1_lhs,
)

__version__ = "0.1.0"
