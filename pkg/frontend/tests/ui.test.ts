import { beforeEach, describe, expect, it, vi } from 'vitest';
import { ReviewStore } from '../src/state';
import { render, type UiCallbacks } from '../src/ui';
import type { ItemDetail, Progress, ReviewState } from '../src/types';

function makeDetail(id: string, language: string, state: ReviewState = 'pending'): ItemDetail {
  return {
    sample_id: id,
    language,
    repo_id: 'acme/demo',
    commit_id: `c-${id}`,
    file_path: `src/${id}.py`,
    message: `change ${id}`,
    state,
    old_contents: 'a\n',
    history_diff: '@@ -1 +1 @@\n-a\n+b\n',
    current_contents: 'b\n',
    new_contents: 'c\n',
    target_diff: '@@ -1 +1 @@\n-b\n+c\n',
    task_text: '<|original_code|>\na\n',
  };
}

function makeProgress(): Progress {
  return {
    languages: {
      Python: { pending: 1, accepted: 2, rejected: 0, skipped: 0, total: 3, quota: 2 },
      Go: { pending: 1, accepted: 1, rejected: 0, skipped: 0, total: 2, quota: 2 },
    },
    overall: { pending: 2, accepted: 3, rejected: 0, skipped: 0, total: 5 },
    quota: 2,
  };
}

function noopCallbacks(): UiCallbacks {
  return {
    onSelect: vi.fn(),
    onFilterLang: vi.fn(),
    onFilterStatus: vi.fn(),
    onPage: vi.fn(),
    onViewMode: vi.fn(),
    onRetry: vi.fn(),
    onDismissToast: vi.fn(),
  };
}

// a store whose fields are poked directly; render only reads them
function bareStore(): ReviewStore {
  return new ReviewStore({
    listItems: async () => ({ items: [], total: 0 }),
    getItem: async () => makeDetail('x', 'Python'),
    decide: async () => ({ item: makeDetail('x', 'Python'), progress: makeProgress() }),
    progress: async () => makeProgress(),
  });
}

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById('app') as HTMLElement;
});

describe('render', () => {
  it('shows the empty state when there is nothing to review', () => {
    const store = bareStore();
    render(root, store, 'unified', noopCallbacks());
    expect(root.textContent).toContain('nothing to review');
  });

  it('distinguishes an empty page from an empty candidate set', () => {
    const store = bareStore();
    store.total = 60;
    store.filters.page = 9;
    render(root, store, 'unified', noopCallbacks());
    expect(root.textContent).toContain('empty page');
  });

  it('lists items with status badges and marks the selection', () => {
    const store = bareStore();
    store.items = [makeDetail('s1', 'Python', 'accepted'), makeDetail('s2', 'Go')];
    store.total = 2;
    store.selectedId = 's2';
    render(root, store, 'unified', noopCallbacks());
    const rows = root.querySelectorAll('.item-row');
    expect(rows).toHaveLength(2);
    expect(rows[0].querySelector('.badge')?.textContent).toBe('accepted');
    expect(rows[0].classList.contains('selected')).toBe(false);
    expect(rows[1].classList.contains('selected')).toBe(true);
  });

  it('clicking a row selects it', () => {
    const store = bareStore();
    store.items = [makeDetail('s1', 'Python')];
    store.total = 1;
    const cb = noopCallbacks();
    render(root, store, 'unified', cb);
    (root.querySelector('.item-row') as HTMLElement).click();
    expect(cb.onSelect).toHaveBeenCalledWith('s1');
  });

  it('renders one quota bar per language with the accepted count', () => {
    const store = bareStore();
    store.progress = makeProgress();
    render(root, store, 'unified', noopCallbacks());
    const labels = Array.from(root.querySelectorAll('.quota-label')).map((n) => n.textContent);
    expect(labels).toEqual(['Go 1/2', 'Python 2/2']);
    const fills = root.querySelectorAll('.quota-fill');
    expect((fills[1] as HTMLElement).classList.contains('full')).toBe(true);
  });

  it('renders both diff panels for the selected item', () => {
    const store = bareStore();
    store.items = [makeDetail('s1', 'Python')];
    store.total = 1;
    store.selectedId = 's1';
    store.detail = makeDetail('s1', 'Python');
    render(root, store, 'unified', noopCallbacks());
    const titles = Array.from(root.querySelectorAll('.panel-title')).map((n) => n.textContent);
    expect(titles).toEqual(['edit history', 'target edit']);
    // the target panel holds the sample's single hunk
    const panels = root.querySelectorAll('.diff-panel');
    expect(panels[1].querySelectorAll('.diff-hunk-header')).toHaveLength(1);
    expect(panels[1].querySelectorAll('.diff-removed')).toHaveLength(1);
    expect(panels[1].querySelectorAll('.diff-added')).toHaveLength(1);
  });

  it('switches the diff panels to split view', () => {
    const store = bareStore();
    store.items = [makeDetail('s1', 'Python')];
    store.selectedId = 's1';
    store.detail = makeDetail('s1', 'Python');
    render(root, store, 'split', noopCallbacks());
    expect(root.querySelectorAll('.diff-split').length).toBeGreaterThan(0);
    expect(root.querySelectorAll('.diff-unified')).toHaveLength(0);
  });

  it('shows the offline banner and wires the retry button', () => {
    const store = bareStore();
    store.offline = true;
    const cb = noopCallbacks();
    render(root, store, 'unified', cb);
    expect(root.textContent).toContain('review service unreachable');
    (root.querySelector('.retry-btn') as HTMLElement).click();
    expect(cb.onRetry).toHaveBeenCalled();
  });

  it('shows the toast text and dismisses on click', () => {
    const store = bareStore();
    store.toast = { kind: 'error', text: 'Python quota of 2 reached' };
    const cb = noopCallbacks();
    render(root, store, 'unified', cb);
    const toast = root.querySelector('.toast') as HTMLElement;
    expect(toast.textContent).toContain('Python');
    toast.click();
    expect(cb.onDismissToast).toHaveBeenCalled();
  });

  it('pager reports the page position and requests neighbors', () => {
    const store = bareStore();
    store.items = [makeDetail('s1', 'Python')];
    store.total = 120;
    store.filters.page = 2;
    const cb = noopCallbacks();
    render(root, store, 'unified', cb);
    expect(root.querySelector('.pager-label')?.textContent).toBe('page 2 of 3');
    (root.querySelector('.pager-prev') as HTMLElement).click();
    expect(cb.onPage).toHaveBeenCalledWith(1);
    (root.querySelector('.pager-next') as HTMLElement).click();
    expect(cb.onPage).toHaveBeenCalledWith(3);
  });

  it('language filter change reports the chosen language', () => {
    const store = bareStore();
    store.progress = makeProgress();
    const cb = noopCallbacks();
    render(root, store, 'unified', cb);
    const sel = root.querySelector('.filter-lang') as HTMLSelectElement;
    sel.value = 'Go';
    sel.dispatchEvent(new Event('change'));
    expect(cb.onFilterLang).toHaveBeenCalledWith('Go');
    sel.value = '';
    sel.dispatchEvent(new Event('change'));
    expect(cb.onFilterLang).toHaveBeenCalledWith(null);
  });
});
