"""Pseudo-spectral solver for the parabolic complex Monge-Ampere flow on tori."""

from .background import (
    AdmissibilityError,
    TorusBackground,
    metric_determinant_and_eigs,
    metric_inverse,
)
from .estimates import (
    EstimateReport,
    GapCheck,
    TraceCheck,
    Verdict,
    estimate_report,
    fit_decay_rate,
    gap_constant,
    matrix_gap_check,
    relative_eigenvalues,
    trace_inequalities_check,
)
from .solver import (
    CONVERGENCE_TOL,
    DIAGNOSTIC_COLUMNS,
    EPS_POS,
    MODES,
    NORMALIZED,
    UNNORMALIZED,
    DiagnosticsRecord,
    DiagnosticsSeries,
    FlowState,
    RunConfig,
    SpectralTailError,
    StepFailure,
    cfl_bound,
    current_cfl_bound,
    initial_state,
    ma_rhs,
    ricci_and_scalar,
    run,
    snapshot,
    step,
)


def complex_hessian(bg: TorusBackground, phi):
    """Mixed complex Hessian of a real grid field (spectral differentiation)."""
    return bg.complex_hessian(phi)


__all__ = [
    "complex_hessian",
    "AdmissibilityError",
    "TorusBackground",
    "metric_determinant_and_eigs",
    "metric_inverse",
    "EstimateReport",
    "GapCheck",
    "TraceCheck",
    "Verdict",
    "estimate_report",
    "fit_decay_rate",
    "gap_constant",
    "matrix_gap_check",
    "relative_eigenvalues",
    "trace_inequalities_check",
    "CONVERGENCE_TOL",
    "DIAGNOSTIC_COLUMNS",
    "EPS_POS",
    "MODES",
    "NORMALIZED",
    "UNNORMALIZED",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "FlowState",
    "RunConfig",
    "SpectralTailError",
    "StepFailure",
    "cfl_bound",
    "current_cfl_bound",
    "initial_state",
    "ma_rhs",
    "ricci_and_scalar",
    "run",
    "snapshot",
    "step",
]
