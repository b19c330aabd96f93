"""Build edit-sequence samples from filtered commits and serialize them.

A commit's chunks are split into history (everything but the last chunk)
and a single target chunk. The sample then carries four file states:
the original file, the unified diff of the history edits, the file with
only the history applied, and the full post-commit file the model must
predict. Serialization wraps those fields in four sentinel markers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict

from .diffcore import (
    EditChunk,
    apply_chunks,
    diff_chunks,
    hunks_to_chunks,
    parse_unified,
    render_unified,
)

SENT_ORIGINAL = "<|original_code|>"
SENT_EDITS = "<|edits_diff|>"
SENT_CURRENT = "<|current_version|>"
SENT_NEXT = "<|next_version|>"

SENTINELS = (SENT_ORIGINAL, SENT_EDITS, SENT_CURRENT, SENT_NEXT)

HISTORY_CONTEXT_WIDTH = 3


class TooFewChunks(ValueError):
    """A sample needs at least one history chunk plus the target."""


class ReconstructionMismatch(ValueError):
    """Applying the history did not leave exactly one pending chunk."""


class SentinelCollision(ValueError):
    """Sample content already contains a sentinel marker."""


class MalformedTaskText(ValueError):
    """Serialized task text violates the sentinel layout."""


@dataclass(frozen=True)
class SampleMeta:
    repo_id: str = ""
    commit_id: str = ""
    file_path: str = ""
    language: str = ""
    message: str = ""


@dataclass(frozen=True)
class EditSequenceSample:
    old_contents: str
    history_diff: str
    current_contents: str
    new_contents: str
    metadata: SampleMeta = SampleMeta()

    @property
    def sample_id(self) -> str:
        return stable_id(self.metadata.repo_id, self.metadata.commit_id, self.metadata.file_path)

    def history_chunks(self) -> list[EditChunk]:
        return hunks_to_chunks(parse_unified(self.history_diff))

    def target_chunk(self) -> EditChunk:
        chunks = diff_chunks(self.current_contents, self.new_contents)
        if len(chunks) != 1:
            raise ReconstructionMismatch(
                f"expected exactly 1 pending chunk, found {len(chunks)}"
            )
        return chunks[0]

    def target_diff(self, context_width: int = HISTORY_CONTEXT_WIDTH) -> str:
        return render_unified(
            self.current_contents,
            diff_chunks(self.current_contents, self.new_contents),
            context_width,
        )

    def to_dict(self) -> dict:
        d = asdict(self.metadata)
        d["sample_id"] = self.sample_id
        d.update(
            old_contents=self.old_contents,
            history_diff=self.history_diff,
            current_contents=self.current_contents,
            new_contents=self.new_contents,
        )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EditSequenceSample":
        meta = SampleMeta(
            repo_id=d.get("repo_id", ""),
            commit_id=d.get("commit_id", ""),
            file_path=d.get("file_path", ""),
            language=d.get("language", ""),
            message=d.get("message", ""),
        )
        return cls(
            old_contents=d["old_contents"],
            history_diff=d["history_diff"],
            current_contents=d["current_contents"],
            new_contents=d["new_contents"],
            metadata=meta,
        )


@dataclass(frozen=True)
class TaskText:
    text: str
    prompt_prefix: str
    completion: str

    def __post_init__(self):
        if self.prompt_prefix + self.completion != self.text:
            raise ValueError("text must equal prompt_prefix + completion")


def stable_id(repo_id: str, commit_id: str, file_path: str) -> str:
    """Stable sample/review id: hash of (repo, commit, path)."""
    digest = hashlib.sha256(
        "\x00".join((repo_id, commit_id, file_path)).encode("utf-8")
    ).hexdigest()
    return digest[:16]


def split_history_target(chunks: list[EditChunk]) -> tuple[list[EditChunk], EditChunk]:
    """History = all chunks but the last; target = the last chunk.

    The corpus carries no edit timestamps, so document order stands in for
    time: edits are assumed to proceed top to bottom.
    """
    if len(chunks) < 2:
        raise TooFewChunks(f"need >= 2 chunks, got {len(chunks)}")
    return list(chunks[:-1]), chunks[-1]


def make_sequence_sample(
    old_contents: str,
    new_contents: str,
    chunks: list[EditChunk],
    metadata: SampleMeta = SampleMeta(),
) -> EditSequenceSample:
    """Construct a sample and verify its single-pending-chunk invariant.

    Raises ReconstructionMismatch when re-diffing the intermediate state
    against the final file does not isolate exactly one chunk (adjacent
    regions can merge once the history is applied); callers discard and
    audit those.
    """
    history, _target = split_history_target(chunks)
    current = apply_chunks(old_contents, history)
    pending = diff_chunks(current, new_contents)
    if len(pending) != 1:
        raise ReconstructionMismatch(
            f"history application left {len(pending)} pending chunks, expected 1"
        )
    history_diff = render_unified(old_contents, history, HISTORY_CONTEXT_WIDTH)
    return EditSequenceSample(
        old_contents=old_contents,
        history_diff=history_diff,
        current_contents=current,
        new_contents=new_contents,
        metadata=metadata,
    )


def _check_no_sentinels(sample: EditSequenceSample):
    for name, content in (
        ("old_contents", sample.old_contents),
        ("history_diff", sample.history_diff),
        ("current_contents", sample.current_contents),
        ("new_contents", sample.new_contents),
    ):
        for sentinel in SENTINELS:
            if sentinel in content:
                raise SentinelCollision(f"{name} contains {sentinel}")


def render_task_text(sample: EditSequenceSample) -> TaskText:
    """Serialize a sample into the four-sentinel layout.

    Each field is followed by a single "\\n" separator before the next
    sentinel, so parsing recovers every field verbatim.
    """
    _check_no_sentinels(sample)
    prefix = (
        f"{SENT_ORIGINAL}\n{sample.old_contents}\n"
        f"{SENT_EDITS}\n{sample.history_diff}\n"
        f"{SENT_CURRENT}\n{sample.current_contents}\n"
        f"{SENT_NEXT}\n"
    )
    return TaskText(
        text=prefix + sample.new_contents,
        prompt_prefix=prefix,
        completion=sample.new_contents,
    )


def parse_task_text(text: str, metadata: SampleMeta = SampleMeta()) -> EditSequenceSample:
    """Recover a sample from its serialized form. Inverse of render_task_text."""
    for sentinel in SENTINELS:
        count = text.count(sentinel)
        if count != 1:
            raise MalformedTaskText(
                f"expected exactly one {sentinel}, found {count}"
            )
    if not text.startswith(SENT_ORIGINAL + "\n"):
        raise MalformedTaskText(f"text must start with {SENT_ORIGINAL}")

    fields = []
    rest = text[len(SENT_ORIGINAL) + 1 :]
    for sentinel in (SENT_EDITS, SENT_CURRENT, SENT_NEXT):
        marker = "\n" + sentinel + "\n"
        idx = rest.find(marker)
        if idx < 0:
            raise MalformedTaskText(f"{sentinel} not found on its own line")
        fields.append(rest[:idx])
        rest = rest[idx + len(marker) :]
    fields.append(rest)

    old, history_diff, current, new = fields
    return EditSequenceSample(
        old_contents=old,
        history_diff=history_diff,
        current_contents=current,
        new_contents=new,
        metadata=metadata,
    )


ONESHOT_INSTRUCTION = (
    "You are assisting with code editing. Given a file's original version, "
    "the unified diff of the edits made so far, and the file's current "
    "version, produce the complete next version of the file after the "
    "developer's most likely next edit. Reply with the file contents only.\n"
)


def build_oneshot_prompt(sample: EditSequenceSample, demo: EditSequenceSample) -> str:
    """Instruction + one fully worked demonstration + the open query.

    The prompt always ends with the final sentinel so the expected reply is
    exactly the next file version.
    """
    if demo == sample:
        raise ValueError("demo must differ from the query sample")
    demo_text = render_task_text(demo)
    query = render_task_text(sample)
    return (
        ONESHOT_INSTRUCTION
        + "\nExample:\n"
        + demo_text.text
        + "\n\nNow complete this one:\n"
        + query.prompt_prefix
    )


def sft_record(sample: EditSequenceSample, task: TaskText) -> dict:
    """One SFT-export JSONL record."""
    return {
        "sample_id": sample.sample_id,
        "text": task.text,
        "prompt_prefix": task.prompt_prefix,
        "completion": task.completion,
        "metadata": asdict(sample.metadata),
    }


def write_jsonl_line(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False) + "\n"
