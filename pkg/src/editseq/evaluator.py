"""Score predicted next versions against reference versions.

Four metrics, strictly ordered from hardest to easiest to satisfy:

* exact: the predicted file equals the reference file after newline
  canonicalization.
* partial: the reference edit chunk appears verbatim (position and
  content) among the chunks of the predicted edit.
* position: some predicted chunk touches the same location as the
  reference chunk, regardless of what it writes there.
* judge: an LLM decides whether the predicted change is equivalent.

The first three form a strictness chain (exact implies partial implies
position). Newline canonicalization can break the literal chain in corner
cases where extra blank lines merge into an end-of-file chunk, so the
chain is enforced by construction: each metric is OR-ed with the stricter
one before it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .client import Endpoint, Prediction
from .diffcore import EditChunk, diff_chunks, split_lines
from .formatter import EditSequenceSample
from .prompts import (
    JUDGE_PROMPT_VERSION,
    JUDGE_TEMPLATE_SHA256,
    build_judge_prompt,
    prompt_hash,
)

CONTEXT_LINES = 3

_JUDGE_RE = re.compile(r"\b(incorrect|correct|yes|no)\b", re.IGNORECASE)


def parse_judge_verdict(text: str) -> bool | None:
    """First standalone verdict word wins; None when there is none."""
    m = _JUDGE_RE.search(text)
    if m is None:
        return None
    return m.group(1).lower() in ("correct", "yes")


class InvariantViolation(ValueError):
    """An eval input sample does not have exactly one pending chunk."""


def canonical_text(text: str) -> str:
    """Universal newlines (CRLF and lone CR to LF), then exactly one
    trailing newline.

    Lone CRs must not survive: a pass that only rewrote CRLF pairs could
    leave a bare CR adjacent to an LF, forming a new CRLF that a second
    canonicalization would collapse differently.
    """
    return text.replace("\r\n", "\n").replace("\r", "\n").rstrip("\n") + "\n"


def exact_match(predicted: str, reference: str) -> bool:
    return canonical_text(predicted) == canonical_text(reference)


@dataclass(frozen=True)
class ChunkKey:
    """Chunk identity for matching: anchor plus line texts.

    End-of-line presence flags are dropped on purpose; a missing final
    newline is newline bookkeeping, not a different edit.
    """

    old_start: int
    old_lines: tuple[str, ...]
    new_lines: tuple[str, ...]

    @classmethod
    def of(cls, chunk: EditChunk, content_only: bool = False) -> "ChunkKey":
        return cls(
            old_start=0 if content_only else chunk.old_start,
            old_lines=chunk.old_lines,
            new_lines=chunk.new_lines,
        )


@dataclass(frozen=True)
class PositionKey:
    """Where an edit lands, independent of what it writes.

    Identified by the anchor line plus up to CONTEXT_LINES unchanged lines
    on each side, clipped at file boundaries.
    """

    old_start: int
    context_before: tuple[str, ...]
    context_after: tuple[str, ...]

    @classmethod
    def of(cls, chunk: EditChunk, current_lines: list[str]) -> "PositionKey":
        if chunk.old_lines:
            lo = chunk.old_start - 1  # 0-based first removed line
        else:
            lo = chunk.old_start  # insertion point
        hi = lo + len(chunk.old_lines)
        before = tuple(current_lines[max(0, lo - CONTEXT_LINES) : lo])
        after = tuple(current_lines[hi : hi + CONTEXT_LINES])
        return cls(old_start=chunk.old_start, context_before=before, context_after=after)


def gold_chunk(sample: EditSequenceSample) -> EditChunk:
    chunks = diff_chunks(sample.current_contents, sample.new_contents)
    if len(chunks) != 1:
        raise InvariantViolation(
            f"sample {sample.sample_id}: expected 1 pending chunk, found {len(chunks)}"
        )
    return chunks[0]


def _current_line_texts(sample: EditSequenceSample) -> list[str]:
    return [text for text, _ in split_lines(sample.current_contents)]


def partial_match(
    sample: EditSequenceSample, predicted: str, content_only: bool = False
) -> bool:
    gold = ChunkKey.of(gold_chunk(sample), content_only)
    candidates = {
        ChunkKey.of(c, content_only)
        for c in diff_chunks(sample.current_contents, predicted)
    }
    return gold in candidates


def position_match(sample: EditSequenceSample, predicted: str) -> bool:
    lines = _current_line_texts(sample)
    gold = PositionKey.of(gold_chunk(sample), lines)
    candidates = {
        PositionKey.of(c, lines)
        for c in diff_chunks(sample.current_contents, predicted)
    }
    return gold in candidates


@dataclass
class EvalRecord:
    sample_id: str
    language: str
    exact: bool = False
    partial: bool = False
    position: bool = False
    judge: bool | None = None
    judge_raw: str | None = None
    error: str | None = None
    # diagnostics: what the prediction's edit looked like, and where the
    # reference edit actually was, for reading failures without re-diffing
    candidate_chunks: int | None = None
    gold_key: ChunkKey | None = None

    def to_dict(self) -> dict:
        gold = None
        if self.gold_key is not None:
            gold = {
                "old_start": self.gold_key.old_start,
                "old_lines": list(self.gold_key.old_lines),
                "new_lines": list(self.gold_key.new_lines),
            }
        return {
            "sample_id": self.sample_id,
            "language": self.language,
            "exact": self.exact,
            "partial": self.partial,
            "position": self.position,
            "judge": self.judge,
            "judge_raw": self.judge_raw,
            "error": self.error,
            "candidate_chunks": self.candidate_chunks,
            "gold_key": gold,
        }


def evaluate_sample(
    sample: EditSequenceSample,
    predicted: str,
    content_only: bool = False,
) -> EvalRecord:
    """Score one prediction. The strictness chain is enforced here."""
    rec = EvalRecord(sample_id=sample.sample_id, language=sample.metadata.language)
    gold = gold_chunk(sample)
    candidates = diff_chunks(sample.current_contents, predicted)
    rec.gold_key = ChunkKey.of(gold)
    rec.candidate_chunks = len(candidates)
    rec.exact = exact_match(predicted, sample.new_contents)
    gold_ck = ChunkKey.of(gold, content_only)
    rec.partial = rec.exact or gold_ck in {
        ChunkKey.of(c, content_only) for c in candidates
    }
    lines = _current_line_texts(sample)
    rec.position = rec.partial or PositionKey.of(gold, lines) in {
        PositionKey.of(c, lines) for c in candidates
    }
    return rec


def _zero_record(sample: EditSequenceSample, error: str) -> EvalRecord:
    rec = EvalRecord(
        sample_id=sample.sample_id,
        language=sample.metadata.language,
        error=error,
    )
    try:
        rec.gold_key = ChunkKey.of(gold_chunk(sample))
    except InvariantViolation:
        pass
    return rec


def evaluate_batch(
    samples: list[EditSequenceSample],
    predictions: dict[str, Prediction],
    content_only: bool = False,
) -> list[EvalRecord]:
    """Score every sample; a missing or failed prediction scores zero
    everywhere rather than dropping the sample from the denominator."""
    records = []
    for sample in samples:
        pred = predictions.get(sample.sample_id)
        if pred is None:
            records.append(_zero_record(sample, "missing prediction"))
        elif pred.extracted is None:
            records.append(
                _zero_record(sample, pred.error or "prediction has no contents")
            )
        else:
            records.append(evaluate_sample(sample, pred.extracted, content_only))
    return records


def judge_batch(
    endpoint: Endpoint,
    samples: list[EditSequenceSample],
    predictions: dict[str, Prediction],
    records: list[EvalRecord],
    template: str | None = None,
) -> None:
    """Fill the judge field in place for records that have a prediction.

    A reply with no recognizable verdict is re-requested like an
    unparseable label; if every round fails, or the request itself fails,
    the judge field stays None so aggregate() drops the record from the
    judge denominator instead of counting it as a rejection.
    """
    by_id = {r.sample_id: r for r in records}
    items = []
    for sample in samples:
        pred = predictions.get(sample.sample_id)
        rec = by_id.get(sample.sample_id)
        if pred is None or rec is None or pred.extracted is None:
            continue
        prompt = build_judge_prompt(sample, pred.extracted, template)
        items.append((sample.sample_id, prompt))
    if not items:
        return
    results = endpoint.run_batch(
        items, validate=lambda text: parse_judge_verdict(text) is not None
    )
    for res in results:
        rec = by_id[res.key]
        if res.error is not None:
            rec.judge = None
            rec.judge_raw = None
            continue
        rec.judge_raw = res.text or ""
        rec.judge = parse_judge_verdict(rec.judge_raw)


ALL_LANGUAGES = "All"


def judge_metadata(template: str | None = None) -> dict:
    """Which judge prompt produced the verdicts in a report."""
    if template is None:
        return {
            "prompt_version": JUDGE_PROMPT_VERSION,
            "prompt_sha256": JUDGE_TEMPLATE_SHA256,
        }
    return {"prompt_version": "custom", "prompt_sha256": prompt_hash(template)}


JUDGE_METADATA = judge_metadata()


@dataclass
class Report:
    """Aggregated scores for one language bucket (or the All row).

    judge_pct is taken over records that actually received a verdict;
    judge_unjudged counts the ones that did not (request failed, reply
    unparseable, or judging skipped for that record).
    """

    language: str
    count: int
    exact_pct: float
    partial_pct: float
    position_pct: float
    judge_pct: float | None = None
    judge_yes: int = 0
    judge_no: int = 0
    judge_unjudged: int = 0

    def to_dict(self) -> dict:
        return {
            "language": self.language,
            "count": self.count,
            "exact_pct": self.exact_pct,
            "partial_pct": self.partial_pct,
            "position_pct": self.position_pct,
            "judge_pct": self.judge_pct,
            "judge_yes": self.judge_yes,
            "judge_no": self.judge_no,
            "judge_unjudged": self.judge_unjudged,
        }


def _bucket_report(language: str, recs: list[EvalRecord], judging_ran: bool) -> Report:
    n = len(recs)
    pct = lambda k: 100.0 * sum(1 for r in recs if getattr(r, k)) / n
    yes = sum(1 for r in recs if r.judge is True)
    no = sum(1 for r in recs if r.judge is False)
    judged = yes + no
    judge_pct = 100.0 * yes / judged if judged else None
    return Report(
        language=language,
        count=n,
        exact_pct=pct("exact"),
        partial_pct=pct("partial"),
        position_pct=pct("position"),
        judge_pct=judge_pct,
        judge_yes=yes,
        judge_no=no,
        judge_unjudged=n - judged if judging_ran else 0,
    )


def aggregate(records: list[EvalRecord]) -> list[Report]:
    """Per-language rows sorted by name, then an All row over everything."""
    if not records:
        return []
    # Whether any judging happened at all decides how to read judge=None:
    # with no judge pass it means nothing; with one it means "not judged".
    judging_ran = any(r.judge is not None or r.judge_raw is not None for r in records)
    buckets: dict[str, list[EvalRecord]] = {}
    for rec in records:
        buckets.setdefault(rec.language or "Unknown", []).append(rec)
    reports = [
        _bucket_report(lang, recs, judging_ran)
        for lang, recs in sorted(buckets.items())
    ]
    reports.append(_bucket_report(ALL_LANGUAGES, records, judging_ran))
    return reports
