"""Line-level diff primitives.

Everything downstream (filtering, sample construction, metrics) works on
*edit chunks*: maximal contiguous runs of changed lines in a minimal line
diff. This module computes those diffs, segments them into chunks, renders
and parses unified-diff text, and splices chunks back onto a file.

Lines are split on "\\n" only. A missing final newline is tracked as a flag
on the last line so round trips are byte-exact for files that do not end
with a newline; the flag is rendered as the conventional
"\\ No newline at end of file" marker.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

KEEP = "keep"
DELETE = "delete"
INSERT = "insert"

NO_EOL_MARKER = "\\ No newline at end of file"

_HUNK_HEADER_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


class DiffError(Exception):
    """Base class for diff/patch failures."""


class InconsistentChunk(DiffError):
    """A chunk's old_lines do not match the text it claims to edit."""


class AnchorMismatch(DiffError):
    """A chunk cannot be applied because its anchor does not match."""


class MalformedDiff(DiffError):
    """Unified diff text violates the format. Carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class DiffOp:
    """One step of a line diff: keep/delete/insert a single line.

    ``has_eol`` is False only when the line is the last line of its file
    and that file does not end with a newline.
    """

    tag: str
    text: str
    has_eol: bool = True


@dataclass(frozen=True)
class EditChunk:
    """A maximal contiguous run of changed lines.

    ``old_start`` is the 1-based index (in the old text) of the first
    removed line; for pure insertions it is the index of the line *after
    which* the insertion occurs (0 at file start). ``new_start`` mirrors
    this in new-text coordinates for added lines / pure deletions.
    """

    old_start: int
    old_lines: tuple[str, ...]
    new_start: int
    new_lines: tuple[str, ...]
    old_noeol: bool = False
    new_noeol: bool = False

    def __post_init__(self):
        if not self.old_lines and not self.new_lines:
            raise ValueError("chunk must remove or add at least one line")

    @property
    def is_insertion(self) -> bool:
        return not self.old_lines

    @property
    def is_deletion(self) -> bool:
        return not self.new_lines

    def old_interval(self) -> tuple[int, int]:
        """Occupied old-line interval [lo, hi]; empty (lo = hi + 1) for insertions."""
        if self.old_lines:
            return self.old_start, self.old_start + len(self.old_lines) - 1
        return self.old_start + 1, self.old_start

    def new_interval(self) -> tuple[int, int]:
        if self.new_lines:
            return self.new_start, self.new_start + len(self.new_lines) - 1
        return self.new_start + 1, self.new_start


@dataclass(frozen=True)
class HunkLine:
    tag: str  # "context" | "removed" | "added"
    text: str
    has_eol: bool = True


@dataclass(frozen=True)
class Hunk:
    old_start: int
    old_count: int
    new_start: int
    new_count: int
    lines: tuple[HunkLine, ...]
    context_width: int | None = None  # known when rendered, None when parsed

    def __post_init__(self):
        ctx = sum(1 for l in self.lines if l.tag == "context")
        removed = sum(1 for l in self.lines if l.tag == "removed")
        added = sum(1 for l in self.lines if l.tag == "added")
        if self.old_count != ctx + removed or self.new_count != ctx + added:
            raise ValueError("hunk header counts do not match its lines")


Line = tuple[str, bool]  # (text, has_eol)


def split_lines(text: str) -> list[Line]:
    """Split on "\\n"; the last line carries has_eol=False when unterminated."""
    if text == "":
        return []
    parts = text.split("\n")
    if parts[-1] == "":
        return [(p, True) for p in parts[:-1]]
    lines = [(p, True) for p in parts]
    last, _ = lines[-1]
    lines[-1] = (last, False)
    return lines


def join_lines(lines: list[Line]) -> str:
    if not lines:
        return ""
    parts = [t + "\n" for t, _ in lines[:-1]]
    last_text, last_eol = lines[-1]
    parts.append(last_text + ("\n" if last_eol else ""))
    return "".join(parts)


def compute_line_diff(old: str, new: str) -> list[DiffOp]:
    """Minimal (LCS-length) line edit script, deterministic.

    Ties are broken by matching equal lines as early as possible and by
    emitting deletions before insertions, so output is stable across runs
    and matches conventional diff tooling.
    """
    return _diff_lines(split_lines(old), split_lines(new))


def _diff_lines(a: list[Line], b: list[Line]) -> list[DiffOp]:
    # Stripping the common prefix first is exactly the earliest-match rule,
    # so it never changes the result; it just keeps the search small.
    p = 0
    limit = min(len(a), len(b))
    while p < limit and a[p] == b[p]:
        p += 1
    ops = [DiffOp(KEEP, t, e) for t, e in a[:p]]
    rest_a, rest_b = a[p:], b[p:]
    if not rest_a:
        ops.extend(DiffOp(INSERT, t, e) for t, e in rest_b)
    elif not rest_b:
        ops.extend(DiffOp(DELETE, t, e) for t, e in rest_a)
    else:
        ops.extend(_myers(rest_a, rest_b))
    return ops


def _myers(a: list[Line], b: list[Line]) -> list[DiffOp]:
    """Greedy O(ND) shortest-edit-script search (Myers 1986)."""
    n, m = len(a), len(b)
    v: dict[int, int] = {1: 0}
    trace: list[dict[int, int]] = []
    for d in range(n + m + 1):
        trace.append(dict(v))
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[k - 1] < v[k + 1]):
                x = v[k + 1]
            else:
                x = v[k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[k] = x
            if x >= n and y >= m:
                return _backtrack(a, b, trace, d)
    raise AssertionError("Myers search failed to terminate")


def _backtrack(a: list[Line], b: list[Line], trace: list[dict[int, int]], d_final: int) -> list[DiffOp]:
    ops: list[DiffOp] = []
    x, y = len(a), len(b)
    for d in range(d_final, -1, -1):
        v = trace[d]
        k = x - y
        if k == -d or (k != d and v[k - 1] < v[k + 1]):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = v.get(prev_k, 0)
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            text, eol = a[x - 1]
            ops.append(DiffOp(KEEP, text, eol))
            x -= 1
            y -= 1
        if d > 0:
            if x == prev_x:
                text, eol = b[prev_y]
                ops.append(DiffOp(INSERT, text, eol))
            else:
                text, eol = a[prev_x]
                ops.append(DiffOp(DELETE, text, eol))
        x, y = prev_x, prev_y
    ops.reverse()
    return ops


def segment_chunks(ops: list[DiffOp]) -> list[EditChunk]:
    """Group the diff into maximal runs of non-keep ops, in document order."""
    chunks: list[EditChunk] = []
    old_i = new_i = 0  # lines consumed so far on each side
    run_old: list[Line] = []
    run_new: list[Line] = []
    run_old_at = run_new_at = 0

    def flush():
        if not run_old and not run_new:
            return
        chunks.append(
            EditChunk(
                old_start=run_old_at + 1 if run_old else run_old_at,
                old_lines=tuple(t for t, _ in run_old),
                new_start=run_new_at + 1 if run_new else run_new_at,
                new_lines=tuple(t for t, _ in run_new),
                old_noeol=bool(run_old) and not run_old[-1][1],
                new_noeol=bool(run_new) and not run_new[-1][1],
            )
        )
        run_old.clear()
        run_new.clear()

    for op in ops:
        if op.tag == KEEP:
            flush()
            old_i += 1
            new_i += 1
        else:
            if not run_old and not run_new:
                run_old_at, run_new_at = old_i, new_i
            if op.tag == DELETE:
                run_old.append((op.text, op.has_eol))
                old_i += 1
            elif op.tag == INSERT:
                run_new.append((op.text, op.has_eol))
                new_i += 1
            else:
                raise ValueError(f"unknown op tag {op.tag!r}")
    flush()
    return chunks


def diff_chunks(old: str, new: str) -> list[EditChunk]:
    """Convenience: segment_chunks(compute_line_diff(old, new))."""
    return segment_chunks(compute_line_diff(old, new))


def _check_anchor(lines: list[Line], chunk: EditChunk, exc: type[DiffError]) -> tuple[int, int]:
    """Validate a chunk against the old text; return its 0-based slice [i0, i1)."""
    if chunk.old_lines:
        i0 = chunk.old_start - 1
        i1 = i0 + len(chunk.old_lines)
    else:
        i0 = i1 = chunk.old_start
    if i0 < 0 or i1 > len(lines):
        raise exc(
            f"chunk at old line {chunk.old_start} falls outside the "
            f"{len(lines)}-line text"
        )
    got = [t for t, _ in lines[i0:i1]]
    if got != list(chunk.old_lines):
        raise exc(
            f"old lines at {chunk.old_start} do not match chunk "
            f"(expected {list(chunk.old_lines)!r}, found {got!r})"
        )
    return i0, i1


def apply_chunks(old: str, chunks: list[EditChunk]) -> str:
    """Splice chunks onto ``old``. Anchors are old-text coordinates.

    Applying every chunk of diff(old, new) reproduces ``new`` byte-for-byte,
    including its trailing-newline state; applying a prefix yields the
    intermediate file version.
    """
    lines = split_lines(old)
    spans: list[tuple[int, int, EditChunk]] = []
    prev_end = 0
    for chunk in chunks:
        i0, i1 = _check_anchor(lines, chunk, AnchorMismatch)
        if i0 < prev_end:
            raise AnchorMismatch(
                f"chunk at old line {chunk.old_start} overlaps or precedes an earlier chunk"
            )
        spans.append((i0, i1, chunk))
        prev_end = max(prev_end, i1)

    out = list(lines)
    for i0, i1, chunk in reversed(spans):
        replacement: list[Line] = [(t, True) for t in chunk.new_lines]
        if replacement and chunk.new_noeol:
            replacement[-1] = (replacement[-1][0], False)
        out[i0:i1] = replacement
    return join_lines(out)


def _chunk_shift(chunk: EditChunk) -> int:
    """Cumulative (new - old) line shift in effect just before this chunk."""
    if chunk.old_lines and chunk.new_lines:
        return chunk.new_start - chunk.old_start
    if chunk.new_lines:  # pure insertion
        return chunk.new_start - chunk.old_start - 1
    return chunk.new_start - chunk.old_start + 1  # pure deletion


def _format_range(start: int, count: int) -> str:
    # GNU convention: omit the count when it is exactly 1.
    return str(start) if count == 1 else f"{start},{count}"


def build_hunks(old: str, chunks: list[EditChunk], context_width: int = 3) -> list[Hunk]:
    """Group chunks into hunks with ``context_width`` lines of context.

    Chunks whose context regions overlap or touch share a hunk.
    """
    if context_width < 0:
        raise ValueError("context_width must be >= 0")
    lines = split_lines(old)
    n = len(lines)
    prev_end = 0
    for chunk in chunks:
        i0, i1 = _check_anchor(lines, chunk, InconsistentChunk)
        if i0 < prev_end:
            raise InconsistentChunk(
                f"chunk at old line {chunk.old_start} is out of document order"
            )
        prev_end = max(prev_end, i1)
    if not chunks:
        return []

    groups: list[list[EditChunk]] = [[chunks[0]]]
    for chunk in chunks[1:]:
        prev = groups[-1][-1]
        _, prev_hi = prev.old_interval()
        lo, _ = chunk.old_interval()
        if lo - context_width <= prev_hi + context_width + 1:
            groups[-1].append(chunk)
        else:
            groups.append([chunk])

    hunks = []
    for group in groups:
        first, last = group[0], group[-1]
        lo = max(1, first.old_interval()[0] - context_width)
        hi = min(n, last.old_interval()[1] + context_width)

        body: list[HunkLine] = []
        old_count = new_count = 0
        pos = lo  # next old line to emit as context
        for chunk in group:
            c_lo, _ = chunk.old_interval()
            while pos < c_lo:
                text, eol = lines[pos - 1]
                body.append(HunkLine("context", text, eol))
                old_count += 1
                new_count += 1
                pos += 1
            for idx, text in enumerate(chunk.old_lines):
                eol = not (chunk.old_noeol and idx == len(chunk.old_lines) - 1)
                body.append(HunkLine("removed", text, eol))
                old_count += 1
            pos += len(chunk.old_lines)
            for idx, text in enumerate(chunk.new_lines):
                eol = not (chunk.new_noeol and idx == len(chunk.new_lines) - 1)
                body.append(HunkLine("added", text, eol))
                new_count += 1
        while pos <= hi:
            text, eol = lines[pos - 1]
            body.append(HunkLine("context", text, eol))
            old_count += 1
            new_count += 1
            pos += 1

        old_hdr = lo if old_count > 0 else first.old_start
        if new_count > 0:
            new_hdr = lo + _chunk_shift(first)
        else:
            new_hdr = first.new_start
        hunks.append(
            Hunk(old_hdr, old_count, new_hdr, new_count, tuple(body), context_width)
        )
    return hunks


_PREFIX = {"context": " ", "removed": "-", "added": "+"}


def render_hunks(hunks: list[Hunk]) -> str:
    out: list[str] = []
    for hunk in hunks:
        out.append(
            f"@@ -{_format_range(hunk.old_start, hunk.old_count)} "
            f"+{_format_range(hunk.new_start, hunk.new_count)} @@\n"
        )
        for line in hunk.lines:
            out.append(_PREFIX[line.tag] + line.text + "\n")
            if not line.has_eol:
                out.append(NO_EOL_MARKER + "\n")
    return "".join(out)


def render_unified(old: str, chunks: list[EditChunk], context_width: int = 3) -> str:
    """Render chunks as unified-diff text (no ---/+++ file headers).

    Raises InconsistentChunk when a chunk's old_lines do not match ``old``.
    """
    return render_hunks(build_hunks(old, chunks, context_width))


def parse_unified(diff_text: str) -> list[Hunk]:
    """Parse unified-diff text (without file headers) into hunks.

    Raises MalformedDiff with the offending 1-based line number on bad
    headers, unknown prefixes, or header counts that disagree with the body.
    """
    if diff_text == "":
        return []
    raw = diff_text.split("\n")
    if raw and raw[-1] == "":
        raw.pop()

    hunks: list[Hunk] = []
    header: tuple[int, int, int, int] | None = None
    header_line = 0
    body: list[HunkLine] = []

    def close(at_line: int):
        nonlocal header, body
        if header is None:
            return
        try:
            hunks.append(Hunk(*header, tuple(body)))
        except ValueError as exc:
            raise MalformedDiff(str(exc), header_line) from None
        header = None
        body = []

    for i, line in enumerate(raw, start=1):
        if line.startswith("@@"):
            close(i)
            m = _HUNK_HEADER_RE.match(line)
            if not m:
                raise MalformedDiff(f"bad hunk header {line!r}", i)
            old_start = int(m.group(1))
            old_count = int(m.group(2)) if m.group(2) is not None else 1
            new_start = int(m.group(3))
            new_count = int(m.group(4)) if m.group(4) is not None else 1
            header = (old_start, old_count, new_start, new_count)
            header_line = i
            continue
        if header is None:
            raise MalformedDiff(f"content before any hunk header: {line!r}", i)
        if line.startswith("\\"):
            if not body:
                raise MalformedDiff("no-newline marker with no preceding line", i)
            last = body[-1]
            body[-1] = HunkLine(last.tag, last.text, has_eol=False)
            continue
        if line.startswith(" "):
            body.append(HunkLine("context", line[1:]))
        elif line.startswith("-"):
            body.append(HunkLine("removed", line[1:]))
        elif line.startswith("+"):
            body.append(HunkLine("added", line[1:]))
        else:
            raise MalformedDiff(f"unknown line prefix {line[:1]!r}", i)
    close(len(raw) + 1)
    return hunks


def hunks_to_chunks(hunks: list[Hunk]) -> list[EditChunk]:
    """Recover edit chunks (with anchors) from parsed hunks.

    Inverse of rendering: hunks_to_chunks(parse_unified(render_unified(old,
    chunks, w))) == chunks.
    """
    chunks: list[EditChunk] = []
    for hunk in hunks:
        old_ln = hunk.old_start if hunk.old_count > 0 else hunk.old_start + 1
        new_ln = hunk.new_start if hunk.new_count > 0 else hunk.new_start + 1
        run_old: list[Line] = []
        run_new: list[Line] = []
        run_old_at = run_new_at = 0  # line number of the run's first removed/added line

        def flush():
            if not run_old and not run_new:
                return
            chunks.append(
                EditChunk(
                    old_start=run_old_at if run_old else run_old_at - 1,
                    old_lines=tuple(t for t, _ in run_old),
                    new_start=run_new_at if run_new else run_new_at - 1,
                    new_lines=tuple(t for t, _ in run_new),
                    old_noeol=bool(run_old) and not run_old[-1][1],
                    new_noeol=bool(run_new) and not run_new[-1][1],
                )
            )
            run_old.clear()
            run_new.clear()

        for line in hunk.lines:
            if line.tag == "context":
                flush()
                old_ln += 1
                new_ln += 1
            else:
                if not run_old and not run_new:
                    run_old_at, run_new_at = old_ln, new_ln
                if line.tag == "removed":
                    run_old.append((line.text, line.has_eol))
                    old_ln += 1
                else:
                    run_new.append((line.text, line.has_eol))
                    new_ln += 1
        flush()
    return chunks
