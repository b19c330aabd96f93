import { describe, expect, it } from 'vitest';
import {
  DiffParseError,
  parseUnifiedDiff,
  renderSplit,
  renderUnified,
  splitRows,
  type DiffLine,
} from '../src/diff';

const SAMPLE = [
  '@@ -1,9 +1,9 @@',
  '-from app.storage import filestore',
  '+from app.storage import blobstore',
  ' ',
  ' from app.util import timing',
  ' ',
  ' ',
  '-class AssetStore(filestore.Store):',
  '+class AssetStore(blobstore.Store):',
  ' ',
  '     @filestore.register()',
  '     def fetch(self, asset_id):',
  '',
].join('\n');

describe('parseUnifiedDiff', () => {
  it('parses hunks with tagged, numbered lines', () => {
    const hunks = parseUnifiedDiff(SAMPLE);
    expect(hunks).toHaveLength(1);
    const [hunk] = hunks;
    expect(hunk.oldStart).toBe(1);
    expect(hunk.oldCount).toBe(9);
    expect(hunk.newCount).toBe(9);
    expect(hunk.lines).toHaveLength(11);
    expect(hunk.lines[0]).toMatchObject({
      tag: 'removed',
      text: 'from app.storage import filestore',
      oldNo: 1,
      newNo: null,
    });
    expect(hunk.lines[1]).toMatchObject({ tag: 'added', oldNo: null, newNo: 1 });
    expect(hunk.lines[2]).toMatchObject({ tag: 'context', oldNo: 2, newNo: 2 });
  });

  it('numbers lines independently per side', () => {
    const hunks = parseUnifiedDiff(SAMPLE);
    const lines = hunks[0].lines;
    const oldNos = lines.filter((l) => l.oldNo !== null).map((l) => l.oldNo);
    const newNos = lines.filter((l) => l.newNo !== null).map((l) => l.newNo);
    expect(oldNos).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9]);
    expect(newNos).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9]);
  });

  it('defaults an omitted count to 1', () => {
    const hunks = parseUnifiedDiff('@@ -3 +4,2 @@\n-x\n+y\n+z\n');
    expect(hunks[0].oldCount).toBe(1);
    expect(hunks[0].newCount).toBe(2);
    expect(hunks[0].lines.map((l) => l.tag)).toEqual(['removed', 'added', 'added']);
  });

  it('attaches the no-newline marker to the line above', () => {
    const text = '@@ -1,2 +1,2 @@\n a\n-b\n\\ No newline at end of file\n+B\n\\ No newline at end of file\n';
    const [hunk] = parseUnifiedDiff(text);
    expect(hunk.lines.map((l) => l.noEol)).toEqual([false, true, true]);
  });

  it('handles multiple hunks', () => {
    const text = '@@ -1,2 +1,2 @@\n-a\n+A\n b\n@@ -9,2 +9,2 @@\n c\n-d\n+D\n';
    const hunks = parseUnifiedDiff(text);
    expect(hunks).toHaveLength(2);
    expect(hunks[1].lines[1]).toMatchObject({ tag: 'removed', oldNo: 10 });
  });

  it('returns no hunks for empty text', () => {
    expect(parseUnifiedDiff('')).toEqual([]);
    expect(parseUnifiedDiff('\n')).toEqual([]);
  });

  it('rejects content before any header and unknown tags', () => {
    expect(() => parseUnifiedDiff('hello\n')).toThrow(DiffParseError);
    expect(() => parseUnifiedDiff('@@ -1 +1 @@\n*x\n')).toThrow(DiffParseError);
  });
});

describe('renderUnified', () => {
  it('renders every parsed line exactly once with its tag', () => {
    const hunks = parseUnifiedDiff(SAMPLE);
    const root = renderUnified(hunks);
    const rows = Array.from(root.querySelectorAll('.diff-line'));
    expect(rows).toHaveLength(hunks[0].lines.length);
    hunks[0].lines.forEach((line, i) => {
      expect(rows[i].classList.contains(`diff-${line.tag}`)).toBe(true);
      const marker = line.tag === 'added' ? '+' : line.tag === 'removed' ? '-' : ' ';
      expect(rows[i].querySelector('.diff-text')?.textContent).toBe(marker + line.text);
    });
  });

  it('renders one header per hunk', () => {
    const text = '@@ -1,2 +1,2 @@\n-a\n+A\n b\n@@ -9,2 +9,2 @@\n c\n-d\n+D\n';
    const root = renderUnified(parseUnifiedDiff(text));
    const headers = Array.from(root.querySelectorAll('.diff-hunk-header'));
    expect(headers.map((h) => h.textContent)).toEqual(['@@ -1,2 +1,2 @@', '@@ -9,2 +9,2 @@']);
  });
});

describe('splitRows', () => {
  const line = (tag: DiffLine['tag'], text: string): DiffLine => ({
    tag,
    text,
    oldNo: tag === 'added' ? null : 1,
    newNo: tag === 'removed' ? null : 1,
    noEol: false,
  });

  it('zips removal runs against addition runs', () => {
    const rows = splitRows([
      line('context', 'c'),
      line('removed', 'x'),
      line('removed', 'y'),
      line('added', 'X'),
    ]);
    expect(rows).toHaveLength(3);
    expect(rows[0].left?.text).toBe('c');
    expect(rows[0].right?.text).toBe('c');
    expect(rows[1]).toMatchObject({ left: { text: 'x' }, right: { text: 'X' } });
    expect(rows[2].left?.text).toBe('y');
    expect(rows[2].right).toBeNull();
  });

  it('puts a pure insertion on the right with an empty left cell', () => {
    const rows = splitRows([line('added', 'n')]);
    expect(rows).toEqual([{ left: null, right: expect.objectContaining({ text: 'n' }) }]);
  });
});

describe('renderSplit', () => {
  it('keeps every line visible on its side', () => {
    const root = renderSplit(parseUnifiedDiff(SAMPLE));
    const cells = Array.from(root.querySelectorAll('.diff-cell'));
    const texts = cells.map((c) => c.querySelector('.diff-text')?.textContent);
    expect(texts).toContain('from app.storage import filestore');
    expect(texts).toContain('from app.storage import blobstore');
    // 7 context lines render twice, 2 replacement pairs once per side
    expect(cells.filter((c) => c.classList.contains('diff-context'))).toHaveLength(14);
    expect(cells.filter((c) => c.classList.contains('diff-removed'))).toHaveLength(2);
    expect(cells.filter((c) => c.classList.contains('diff-added'))).toHaveLength(2);
  });
});
