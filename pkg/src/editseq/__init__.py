"""Toolkit for building and scoring next-edit prediction data.

The pipeline runs commit records through shape filtering, splits each
surviving edit into a history plus one target chunk, serializes samples
with sentinel markers, supports labeling and human curation, and scores
prediction endpoints with exact/partial/position matching plus an
optional LLM judge.
"""

__version__ = "0.1.0"

from .diffcore import (
    DiffError,
    DiffOp,
    EditChunk,
    Hunk,
    MalformedDiff,
    apply_chunks,
    build_hunks,
    compute_line_diff,
    diff_chunks,
    hunks_to_chunks,
    parse_unified,
    render_unified,
)
from .filtering import FilterConfig, FilterVerdict, apply_filters, compute_span
from .formatter import (
    EditSequenceSample,
    MalformedTaskText,
    ReconstructionMismatch,
    SampleMeta,
    SentinelCollision,
    TaskText,
    TooFewChunks,
    make_sequence_sample,
    parse_task_text,
    render_task_text,
    split_history_target,
    stable_id,
)
from .client import (
    AuthFailure,
    Endpoint,
    EndpointConfig,
    EndpointError,
    EndpointUnreachable,
    Prediction,
    extract_next_contents,
    load_predictions,
    predict_batch,
)
from .labeler import (
    LabelRecord,
    heuristic_label,
    label_with_endpoint,
    label_with_heuristic,
    parse_label,
)
from .evaluator import (
    ChunkKey,
    EvalRecord,
    InvariantViolation,
    PositionKey,
    Report,
    aggregate,
    canonical_text,
    evaluate_batch,
    evaluate_sample,
    exact_match,
    judge_batch,
    parse_judge_verdict,
    partial_match,
    position_match,
)
from .ingest import CommitSample, IngestConfig, crawl_git_repo, read_commit_jsonl
from .review import QuotaFull, ReviewSession, create_app

__all__ = [
    "__version__",
    "DiffError",
    "DiffOp",
    "EditChunk",
    "Hunk",
    "MalformedDiff",
    "apply_chunks",
    "build_hunks",
    "compute_line_diff",
    "diff_chunks",
    "hunks_to_chunks",
    "parse_unified",
    "render_unified",
    "FilterConfig",
    "FilterVerdict",
    "apply_filters",
    "compute_span",
    "EditSequenceSample",
    "MalformedTaskText",
    "ReconstructionMismatch",
    "SampleMeta",
    "SentinelCollision",
    "TaskText",
    "TooFewChunks",
    "make_sequence_sample",
    "parse_task_text",
    "render_task_text",
    "split_history_target",
    "stable_id",
    "AuthFailure",
    "Endpoint",
    "EndpointConfig",
    "EndpointError",
    "EndpointUnreachable",
    "Prediction",
    "extract_next_contents",
    "load_predictions",
    "predict_batch",
    "LabelRecord",
    "heuristic_label",
    "label_with_endpoint",
    "label_with_heuristic",
    "parse_label",
    "ChunkKey",
    "EvalRecord",
    "InvariantViolation",
    "PositionKey",
    "Report",
    "aggregate",
    "canonical_text",
    "evaluate_batch",
    "evaluate_sample",
    "exact_match",
    "judge_batch",
    "parse_judge_verdict",
    "partial_match",
    "position_match",
    "CommitSample",
    "IngestConfig",
    "crawl_git_repo",
    "read_commit_jsonl",
    "QuotaFull",
    "ReviewSession",
    "create_app",
]
