"""Label edit-sequence samples as predictable or not.

Two labelers share one output shape: an LLM labeler that asks an endpoint
to classify the candidate edit, and an offline heuristic that checks for
identifier overlap between the target edit and the edit history. The
heuristic exists so the pipeline can run end to end without network
access; it is deliberately crude and errs toward keeping samples.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .client import Endpoint
from .formatter import EditSequenceSample
from .prompts import (
    LABEL_PROMPT_VERSION,
    LABEL_TEMPLATE_SHA256,
    build_label_prompt,
    prompt_hash,
)

LABEL_POSITIVE = "positive"
LABEL_NEGATIVE = "negative"
LABEL_UNPARSEABLE = "unparseable"

LABELS = (LABEL_POSITIVE, LABEL_NEGATIVE, LABEL_UNPARSEABLE)

SOURCE_LLM = "llm"
SOURCE_HEURISTIC = "heuristic"

_VERDICT_RE = re.compile(r"\b(positive|negative|yes|no)\b", re.IGNORECASE)

# identifier fragments: runs of letters/digits, underscores split them
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")
MIN_TOKEN_LEN = 3


def parse_label(text: str) -> str:
    """First standalone verdict word wins; anything else is unparseable."""
    m = _VERDICT_RE.search(text)
    if m is None:
        return LABEL_UNPARSEABLE
    word = m.group(1).lower()
    return LABEL_POSITIVE if word in ("positive", "yes") else LABEL_NEGATIVE


def _line_tokens(lines) -> set[str]:
    tokens: set[str] = set()
    for line in lines:
        for tok in _TOKEN_RE.findall(line):
            if len(tok) >= MIN_TOKEN_LEN:
                tokens.add(tok)
    return tokens


def heuristic_label(sample: EditSequenceSample) -> str:
    """Positive iff the target edit shares an identifier token with the history.

    Tokens are case sensitive: `Scenario` and `scenario` are different
    names, and conflating them would link edits that merely reuse a common
    English word in different roles.
    """
    target = sample.target_chunk()
    target_tokens = _line_tokens(target.old_lines + target.new_lines)
    history_tokens: set[str] = set()
    for chunk in sample.history_chunks():
        history_tokens |= _line_tokens(chunk.old_lines + chunk.new_lines)
    overlap = target_tokens & history_tokens
    return LABEL_POSITIVE if overlap else LABEL_NEGATIVE


@dataclass(frozen=True)
class LabelRecord:
    sample_id: str
    label: str
    source: str
    raw_response: str | None = None
    error: str | None = None
    prompt_version: str | None = None
    prompt_sha256: str | None = None
    model: str | None = None
    attempts: int = 0

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "label": self.label,
            "source": self.source,
            "raw_response": self.raw_response,
            "error": self.error,
            "prompt_version": self.prompt_version,
            "prompt_sha256": self.prompt_sha256,
            "model": self.model,
            "attempts": self.attempts,
        }


@dataclass
class LabelCounts:
    positive: int = 0
    negative: int = 0
    unparseable: int = 0

    @property
    def total(self) -> int:
        return self.positive + self.negative + self.unparseable

    def add(self, label: str):
        if label == LABEL_POSITIVE:
            self.positive += 1
        elif label == LABEL_NEGATIVE:
            self.negative += 1
        elif label == LABEL_UNPARSEABLE:
            self.unparseable += 1
        else:
            raise ValueError(f"unknown label {label!r}")


def count_labels(records: list[LabelRecord]) -> LabelCounts:
    """Tally labels; every record lands in exactly one bucket."""
    counts = LabelCounts()
    for rec in records:
        counts.add(rec.label)
    assert counts.total == len(records)
    return counts


def label_with_heuristic(samples: list[EditSequenceSample]) -> list[LabelRecord]:
    return [
        LabelRecord(
            sample_id=s.sample_id,
            label=heuristic_label(s),
            source=SOURCE_HEURISTIC,
        )
        for s in samples
    ]


def label_with_endpoint(
    endpoint: Endpoint,
    samples: list[EditSequenceSample],
    demos: list[tuple[EditSequenceSample, str]] | None = None,
    template: str | None = None,
) -> list[LabelRecord]:
    """LLM labeling over a batch.

    A reply that names no verdict is re-requested (the endpoint's retry
    budget bounds the extra rounds) and stays unparseable only if every
    round failed to produce one. Request errors also become unparseable
    records, so the caller's bookkeeping accounts for every input sample.
    """
    items = [(s.sample_id, build_label_prompt(s, demos, template)) for s in samples]
    prompt_sha = LABEL_TEMPLATE_SHA256 if template is None else prompt_hash(template)
    results = endpoint.run_batch(
        items, validate=lambda text: parse_label(text) != LABEL_UNPARSEABLE
    )
    records = []
    for res in results:
        if res.error is not None:
            label, raw = LABEL_UNPARSEABLE, None
        else:
            raw = res.text or ""
            label = parse_label(raw)
        records.append(
            LabelRecord(
                sample_id=res.key,
                label=label,
                source=SOURCE_LLM,
                raw_response=raw,
                error=res.error,
                prompt_version=LABEL_PROMPT_VERSION,
                prompt_sha256=prompt_sha,
                model=endpoint.config.model,
                attempts=res.attempts,
            )
        )
    return records
