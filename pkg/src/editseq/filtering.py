"""Rule-based screening of a commit's chunk decomposition.

Four rules, each reported independently so rejected samples are auditable:
a minimum chunk count, a per-chunk line bound, a bound on the new-file span
covered by all chunks, and a no-pure-deletion (or, in strict mode,
no-removed-lines) rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diffcore import EditChunk

MULTIPLE_CHUNKS = "MultipleChunks"
BOUNDED_LENGTH = "BoundedLength"
LIMITED_SCOPE = "LimitedScope"
ADDITIVE_ONLY = "AdditiveOnly"

ALL_RULES = (MULTIPLE_CHUNKS, BOUNDED_LENGTH, LIMITED_SCOPE, ADDITIVE_ONLY)

LENIENT = "lenient"
STRICT = "strict"

ADDITIVE_MODES = (LENIENT, STRICT)


class EmptyChunkList(ValueError):
    """Span is undefined for an empty chunk list."""


@dataclass(frozen=True)
class FilterConfig:
    min_chunks: int = 2
    max_chunk_lines: int = 5
    max_span_lines: int = 80
    additive_mode: str = LENIENT

    def __post_init__(self):
        if self.min_chunks < 2:
            raise ValueError("min_chunks must be >= 2")
        if self.max_chunk_lines < 1 or self.max_span_lines < 1:
            raise ValueError("all line bounds must be >= 1")
        if self.additive_mode not in ADDITIVE_MODES:
            raise ValueError(f"unknown additive_mode {self.additive_mode!r}")


@dataclass(frozen=True)
class FilterVerdict:
    passed: bool
    failed_rules: frozenset[str]
    chunk_count: int
    span: int | None

    def __post_init__(self):
        if self.passed != (not self.failed_rules):
            raise ValueError("passed must mirror failed_rules")


def _first_new_line(chunk: EditChunk) -> int:
    # A pure deletion sits between new lines; anchor it at the line it
    # follows, clamped so a deletion at file start still yields line 1.
    if chunk.new_lines:
        return chunk.new_start
    return max(1, chunk.new_start)


def _last_new_line(chunk: EditChunk) -> int:
    if chunk.new_lines:
        return chunk.new_start + len(chunk.new_lines) - 1
    return max(1, chunk.new_start)


def compute_span(chunks: list[EditChunk]) -> int:
    """Inclusive distance, in new-file line coordinates, from the first
    line of the first chunk to the last line of the last chunk."""
    if not chunks:
        raise EmptyChunkList("span requires at least one chunk")
    first = _first_new_line(chunks[0])
    last = _last_new_line(chunks[-1])
    return max(1, last - first + 1)


def chunk_length(chunk: EditChunk) -> int:
    """Chunk size = max of removed and added line counts."""
    return max(len(chunk.old_lines), len(chunk.new_lines))


def apply_filters(chunks: list[EditChunk], config: FilterConfig | None = None) -> FilterVerdict:
    """Evaluate every rule and report all failures, not just the first."""
    config = config or FilterConfig()
    failed: set[str] = set()

    if len(chunks) < config.min_chunks:
        failed.add(MULTIPLE_CHUNKS)

    if any(chunk_length(c) > config.max_chunk_lines for c in chunks):
        failed.add(BOUNDED_LENGTH)

    span: int | None = None
    if chunks:
        span = compute_span(chunks)
        if span > config.max_span_lines:
            failed.add(LIMITED_SCOPE)

    if config.additive_mode == LENIENT:
        if any(c.is_deletion for c in chunks):
            failed.add(ADDITIVE_ONLY)
    else:
        if any(c.old_lines for c in chunks):
            failed.add(ADDITIVE_ONLY)

    return FilterVerdict(
        passed=not failed,
        failed_rules=frozenset(failed),
        chunk_count=len(chunks),
        span=span,
    )
