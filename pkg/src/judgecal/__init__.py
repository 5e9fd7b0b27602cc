"""Gradient-free calibration of scoring criteria for LLM-based evaluation."""

from .calibrate import (
    AuditLog,
    CalibrationConfig,
    CalibrationResult,
    CandidateRecord,
    Criteria,
    calibrate,
    collect_misaligned,
    draft_pool,
    rank_candidates,
    refine_pool,
    score_pool,
    score_records,
    select_top_k,
)
from .corpus import (
    Aspect,
    GoldenLabel,
    GoldenSet,
    Sample,
    ingest_golden_set,
    load_aspect,
    load_aspect_manifest,
    partition_by_source,
    write_golden_set,
)
from .errors import (
    BackendError,
    ConfigError,
    DataError,
    JudgecalError,
    TemplateError,
    UnparseableScoreError,
)
from .llm import (
    Backend,
    BackendConfig,
    GenerationRequest,
    GenerationResponse,
    HttpBackend,
    MockBackend,
    PlantedWorld,
    ResponseCache,
    mock_score_function,
    planted_criteria_text,
)
from .metrics import (
    CorrelationReport,
    Objective,
    PairedScores,
    kendall,
    meta_eval_dataset_level,
    meta_eval_sample_level,
    pearson,
    spearman,
)
from .records import NO_CRITERIA_ID, EvaluationRecord
from .runio import (
    prepare_out_dir,
    read_criteria_file,
    read_records,
    render_correlation_text,
    render_report_text,
    report_payload,
    write_criteria_file,
    write_records,
    write_run_dir,
)

__version__ = "0.1.0"

__all__ = [
    "Aspect",
    "AuditLog",
    "Backend",
    "BackendConfig",
    "BackendError",
    "CalibrationConfig",
    "CalibrationResult",
    "CandidateRecord",
    "ConfigError",
    "CorrelationReport",
    "Criteria",
    "DataError",
    "EvaluationRecord",
    "GenerationRequest",
    "GenerationResponse",
    "GoldenLabel",
    "GoldenSet",
    "HttpBackend",
    "JudgecalError",
    "MockBackend",
    "NO_CRITERIA_ID",
    "Objective",
    "PairedScores",
    "PlantedWorld",
    "ResponseCache",
    "Sample",
    "TemplateError",
    "UnparseableScoreError",
    "calibrate",
    "collect_misaligned",
    "draft_pool",
    "ingest_golden_set",
    "kendall",
    "load_aspect",
    "load_aspect_manifest",
    "meta_eval_dataset_level",
    "meta_eval_sample_level",
    "mock_score_function",
    "partition_by_source",
    "pearson",
    "planted_criteria_text",
    "prepare_out_dir",
    "rank_candidates",
    "read_criteria_file",
    "read_records",
    "refine_pool",
    "render_correlation_text",
    "render_report_text",
    "report_payload",
    "score_pool",
    "score_records",
    "select_top_k",
    "spearman",
    "write_criteria_file",
    "write_golden_set",
    "write_records",
    "write_run_dir",
    "__version__",
]
