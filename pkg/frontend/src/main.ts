import './style.css';
import { ReviewApi } from './api';
import { ReviewStore } from './state';
import { render, type ViewMode } from './ui';
import type { ReviewState } from './types';

const store = new ReviewStore(new ReviewApi());
let mode: ViewMode = 'unified';

const root = document.getElementById('app');
if (root === null) throw new Error('missing #app mount point');

const callbacks = {
  onSelect: (id: string) => void store.select(id),
  onFilterLang: (lang: string | null) => void store.setFilters({ lang }),
  onFilterStatus: (status: ReviewState | null) => void store.setFilters({ status }),
  onPage: (page: number) => void store.setFilters({ page }),
  onViewMode: (next: ViewMode) => {
    mode = next;
    render(root, store, mode, callbacks);
  },
  onRetry: () => void store.refresh(),
  onDismissToast: () => store.dismissToast(),
};

store.subscribe(() => render(root, store, mode, callbacks));

document.addEventListener('keydown', (ev) => {
  // decisions are keyboard-first; stay out of the way of form controls
  const target = ev.target as HTMLElement | null;
  if (target && ['INPUT', 'SELECT', 'TEXTAREA'].includes(target.tagName)) return;
  if (ev.metaKey || ev.ctrlKey || ev.altKey) return;
  switch (ev.key) {
    case 'a':
      void store.decide('accept');
      break;
    case 'r':
      void store.decide('reject');
      break;
    case 's':
      void store.decide('skip');
      break;
    case 'j':
    case 'ArrowDown':
      ev.preventDefault();
      void store.moveSelection(1);
      break;
    case 'k':
    case 'ArrowUp':
      ev.preventDefault();
      void store.moveSelection(-1);
      break;
  }
});

// reconcile with the service whenever the tab regains focus
window.addEventListener('focus', () => void store.refresh());

void store.refresh();
