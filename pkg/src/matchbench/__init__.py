"""Matched-budget solver benchmarking, readiness scoring and stage-timing audits."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DomainError  # noqa: E402
from .metrics import (  # noqa: E402
    UNREACHABLE, QualityTimeSeries, ReadinessAssessment, ReadinessResult, Rubric,
    SpeedupOutcome, drift_bonus, load_rubric, normalized_speedup, readiness_score,
    stage_map, tau_sweep,
)
from .audit import AuditReport, StageTrace, audit_bottlenecks, record_stage, stage_shares  # noqa: E402
from .harness import (  # noqa: E402
    Budget, RunManifest, RunRecord, SolverSpec, budget_guard, derive_seed, run_benchmark,
)
from .stats import ConfidenceInterval, SummaryTable, paired_bootstrap_ci, summarize  # noqa: E402

__all__ = [
    "ConfigurationError", "DomainError",
    "UNREACHABLE", "QualityTimeSeries", "ReadinessAssessment", "ReadinessResult", "Rubric",
    "SpeedupOutcome", "drift_bonus", "load_rubric", "normalized_speedup", "readiness_score",
    "stage_map", "tau_sweep",
    "AuditReport", "StageTrace", "audit_bottlenecks", "record_stage", "stage_shares",
    "Budget", "RunManifest", "RunRecord", "SolverSpec", "budget_guard", "derive_seed",
    "run_benchmark",
    "ConfidenceInterval", "SummaryTable", "paired_bootstrap_ci", "summarize",
]
