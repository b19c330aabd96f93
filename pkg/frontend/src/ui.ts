import { parseUnifiedDiff, renderSplit, renderUnified, type DiffHunk } from './diff';
import { PAGE_SIZE, type ReviewStore } from './state';
import { REVIEW_STATES, type ItemSummary, type Progress, type ReviewState } from './types';

export type ViewMode = 'unified' | 'split';

function el(tagName: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tagName);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function badge(state: ReviewState): HTMLElement {
  return el('span', `badge badge-${state}`, state);
}

function listRow(item: ItemSummary, selected: boolean, onSelect: (id: string) => void): HTMLElement {
  const row = el('div', `item-row${selected ? ' selected' : ''}`);
  row.dataset.id = item.sample_id;
  const head = el('div', 'item-row-head');
  head.appendChild(el('span', 'item-path', item.file_path));
  head.appendChild(badge(item.state));
  row.appendChild(head);
  const sub = el('div', 'item-row-sub');
  sub.appendChild(el('span', 'item-lang', item.language));
  sub.appendChild(el('span', 'item-repo', item.repo_id));
  row.appendChild(sub);
  row.addEventListener('click', () => onSelect(item.sample_id));
  return row;
}

function quotaBars(progress: Progress): HTMLElement {
  const wrap = el('div', 'quota-bars');
  const languages = Object.keys(progress.languages).sort();
  for (const lang of languages) {
    const p = progress.languages[lang];
    const bar = el('div', 'quota-bar');
    bar.appendChild(el('span', 'quota-label', `${lang} ${p.accepted}/${p.quota}`));
    const track = el('div', 'quota-track');
    const fill = el('div', `quota-fill${p.accepted >= p.quota ? ' full' : ''}`);
    fill.style.width = `${Math.min(100, (p.accepted / p.quota) * 100)}%`;
    track.appendChild(fill);
    bar.appendChild(track);
    wrap.appendChild(bar);
  }
  return wrap;
}

function diffPanel(title: string, diffText: string, mode: ViewMode): HTMLElement {
  const panel = el('section', 'diff-panel');
  panel.appendChild(el('h3', 'panel-title', title));
  let hunks: DiffHunk[];
  try {
    hunks = parseUnifiedDiff(diffText);
  } catch {
    // malformed diff text still has to be inspectable
    panel.appendChild(el('pre', 'diff-raw', diffText));
    return panel;
  }
  if (hunks.length === 0) {
    panel.appendChild(el('p', 'empty-note', 'no edits'));
    return panel;
  }
  panel.appendChild(mode === 'split' ? renderSplit(hunks) : renderUnified(hunks));
  return panel;
}

export type UiCallbacks = {
  onSelect: (id: string) => void;
  onFilterLang: (lang: string | null) => void;
  onFilterStatus: (status: ReviewState | null) => void;
  onPage: (page: number) => void;
  onViewMode: (mode: ViewMode) => void;
  onRetry: () => void;
  onDismissToast: () => void;
};

/** Rebuild the whole app DOM from the store snapshot. */
export function render(
  root: HTMLElement,
  store: ReviewStore,
  mode: ViewMode,
  cb: UiCallbacks,
): void {
  root.textContent = '';

  if (store.offline) {
    const banner = el('div', 'banner banner-error');
    banner.appendChild(el('span', undefined, 'review service unreachable'));
    const retry = el('button', 'retry-btn', 'retry');
    retry.addEventListener('click', cb.onRetry);
    banner.appendChild(retry);
    root.appendChild(banner);
  }

  if (store.toast !== null) {
    const toast = el('div', `toast toast-${store.toast.kind}`, store.toast.text);
    toast.addEventListener('click', cb.onDismissToast);
    root.appendChild(toast);
  }

  const header = el('header', 'app-header');
  header.appendChild(el('h1', 'app-title', 'edit review'));

  const langSel = document.createElement('select');
  langSel.className = 'filter-lang';
  langSel.appendChild(new Option('all languages', ''));
  const langs = store.progress === null ? [] : Object.keys(store.progress.languages).sort();
  for (const lang of langs) {
    langSel.appendChild(new Option(lang, lang, false, lang === store.filters.lang));
  }
  langSel.addEventListener('change', () => cb.onFilterLang(langSel.value || null));
  header.appendChild(langSel);

  const statusSel = document.createElement('select');
  statusSel.className = 'filter-status';
  statusSel.appendChild(new Option('all statuses', ''));
  for (const state of REVIEW_STATES) {
    statusSel.appendChild(new Option(state, state, false, state === store.filters.status));
  }
  statusSel.addEventListener('change', () =>
    cb.onFilterStatus((statusSel.value || null) as ReviewState | null),
  );
  header.appendChild(statusSel);

  const toggle = el('button', 'view-toggle', mode === 'unified' ? 'split view' : 'unified view');
  toggle.addEventListener('click', () => cb.onViewMode(mode === 'unified' ? 'split' : 'unified'));
  header.appendChild(toggle);

  if (store.progress !== null) header.appendChild(quotaBars(store.progress));
  root.appendChild(header);

  const main = el('main', 'app-main');

  const list = el('aside', 'item-list');
  if (store.items.length === 0 && !store.loading) {
    list.appendChild(
      el('p', 'empty-note', store.total === 0 ? 'nothing to review' : 'empty page'),
    );
  }
  for (const item of store.items) {
    list.appendChild(listRow(item, item.sample_id === store.selectedId, cb.onSelect));
  }
  const pages = Math.max(1, Math.ceil(store.total / PAGE_SIZE));
  const pager = el('div', 'pager');
  const prev = el('button', 'pager-prev', 'prev');
  prev.addEventListener('click', () => cb.onPage(Math.max(1, store.filters.page - 1)));
  const next = el('button', 'pager-next', 'next');
  next.addEventListener('click', () => cb.onPage(store.filters.page + 1));
  pager.appendChild(prev);
  pager.appendChild(el('span', 'pager-label', `page ${store.filters.page} of ${pages}`));
  pager.appendChild(next);
  list.appendChild(pager);
  main.appendChild(list);

  const detailPane = el('section', 'detail-pane');
  const detail = store.detail;
  if (detail === null) {
    detailPane.appendChild(el('p', 'empty-note', 'select an item'));
  } else {
    const meta = el('div', 'detail-meta');
    const top = el('div', 'detail-top');
    top.appendChild(el('span', 'detail-path', detail.file_path));
    top.appendChild(badge(detail.state));
    meta.appendChild(top);
    meta.appendChild(
      el('div', 'detail-sub', `${detail.language} · ${detail.repo_id} @ ${detail.commit_id}`),
    );
    if (detail.message) meta.appendChild(el('p', 'detail-message', detail.message));
    detailPane.appendChild(meta);
    detailPane.appendChild(diffPanel('edit history', detail.history_diff, mode));
    detailPane.appendChild(diffPanel('target edit', detail.target_diff, mode));
    detailPane.appendChild(
      el('p', 'key-hints', 'a accept · r reject · s skip · j/k move'),
    );
  }
  main.appendChild(detailPane);
  root.appendChild(main);
}
