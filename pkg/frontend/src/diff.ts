/** Unified diff parsing and DOM rendering for the review panels. */

export type LineTag = 'context' | 'removed' | 'added';

export type DiffLine = {
  tag: LineTag;
  text: string;
  /** 1-based position in the old file, null for added lines. */
  oldNo: number | null;
  /** 1-based position in the new file, null for removed lines. */
  newNo: number | null;
  /** The old/new side ends here without a trailing newline. */
  noEol: boolean;
};

export type DiffHunk = {
  oldStart: number;
  oldCount: number;
  newStart: number;
  newCount: number;
  lines: DiffLine[];
};

export class DiffParseError extends Error {}

// count defaults to 1 when omitted, as in "@@ -3 +4,2 @@"
const HUNK_HEADER = /^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@/;
const NO_EOL = '\\ No newline at end of file';

/**
 * Parse hunk-only unified diff text (no ---/+++ file headers). Every
 * content line must carry a space/-/+ prefix; the no-newline marker
 * attaches to the line above it.
 */
export function parseUnifiedDiff(text: string): DiffHunk[] {
  const hunks: DiffHunk[] = [];
  let hunk: DiffHunk | null = null;
  let oldNo = 0;
  let newNo = 0;
  const raw = text.split('\n');
  if (raw.length && raw[raw.length - 1] === '') raw.pop();
  for (const line of raw) {
    const header = HUNK_HEADER.exec(line);
    if (header) {
      hunk = {
        oldStart: Number(header[1]),
        oldCount: header[2] === undefined ? 1 : Number(header[2]),
        newStart: Number(header[3]),
        newCount: header[4] === undefined ? 1 : Number(header[4]),
        lines: [],
      };
      hunks.push(hunk);
      oldNo = hunk.oldStart;
      newNo = hunk.newStart;
      continue;
    }
    if (hunk === null) {
      if (line.trim() === '') continue;
      throw new DiffParseError(`content before first hunk header: ${line}`);
    }
    if (line === NO_EOL) {
      const prev = hunk.lines[hunk.lines.length - 1];
      if (!prev) throw new DiffParseError('no-newline marker with no line above');
      prev.noEol = true;
      continue;
    }
    const tag = line[0];
    const body = line.slice(1);
    if (tag === ' ') {
      hunk.lines.push({ tag: 'context', text: body, oldNo: oldNo++, newNo: newNo++, noEol: false });
    } else if (tag === '-') {
      hunk.lines.push({ tag: 'removed', text: body, oldNo: oldNo++, newNo: null, noEol: false });
    } else if (tag === '+') {
      hunk.lines.push({ tag: 'added', text: body, oldNo: null, newNo: newNo++, noEol: false });
    } else {
      throw new DiffParseError(`unrecognized diff line: ${line}`);
    }
  }
  return hunks;
}

function el(tagName: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tagName);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function lineCell(no: number | null): HTMLElement {
  return el('span', 'diff-lineno', no === null ? '' : String(no));
}

function headerText(h: DiffHunk): string {
  return `@@ -${h.oldStart},${h.oldCount} +${h.newStart},${h.newCount} @@`;
}

/** Render hunks as a single-column unified view, one row per diff line. */
export function renderUnified(hunks: DiffHunk[]): HTMLElement {
  const root = el('div', 'diff diff-unified');
  for (const hunk of hunks) {
    root.appendChild(el('div', 'diff-hunk-header', headerText(hunk)));
    for (const line of hunk.lines) {
      const row = el('div', `diff-line diff-${line.tag}`);
      row.appendChild(lineCell(line.oldNo));
      row.appendChild(lineCell(line.newNo));
      const marker = line.tag === 'added' ? '+' : line.tag === 'removed' ? '-' : ' ';
      row.appendChild(el('span', 'diff-text', marker + line.text + (line.noEol ? ' ∅' : '')));
      root.appendChild(row);
    }
  }
  return root;
}

type SplitRow = { left: DiffLine | null; right: DiffLine | null };

/** Pair removed lines with added lines for the two-column view. */
export function splitRows(lines: DiffLine[]): SplitRow[] {
  const rows: SplitRow[] = [];
  let i = 0;
  while (i < lines.length) {
    const line = lines[i];
    if (line.tag === 'context') {
      rows.push({ left: line, right: line });
      i += 1;
      continue;
    }
    // a run of removals followed by a run of additions zips into rows
    const removed: DiffLine[] = [];
    const added: DiffLine[] = [];
    while (i < lines.length && lines[i].tag === 'removed') removed.push(lines[i++]);
    while (i < lines.length && lines[i].tag === 'added') added.push(lines[i++]);
    for (let k = 0; k < Math.max(removed.length, added.length); k++) {
      rows.push({ left: removed[k] ?? null, right: added[k] ?? null });
    }
  }
  return rows;
}

function splitCell(line: DiffLine | null, side: 'left' | 'right'): HTMLElement {
  const tag = line === null ? 'empty' : line.tag;
  const cell = el('div', `diff-cell diff-${tag}`);
  cell.appendChild(lineCell(line === null ? null : side === 'left' ? line.oldNo : line.newNo));
  cell.appendChild(el('span', 'diff-text', line === null ? '' : line.text + (line.noEol ? ' ∅' : '')));
  return cell;
}

/** Render hunks as a side-by-side view: old on the left, new on the right. */
export function renderSplit(hunks: DiffHunk[]): HTMLElement {
  const root = el('div', 'diff diff-split');
  for (const hunk of hunks) {
    root.appendChild(el('div', 'diff-hunk-header', headerText(hunk)));
    for (const row of splitRows(hunk.lines)) {
      const rowEl = el('div', 'diff-row');
      rowEl.appendChild(splitCell(row.left, 'left'));
      rowEl.appendChild(splitCell(row.right, 'right'));
      root.appendChild(rowEl);
    }
  }
  return root;
}
