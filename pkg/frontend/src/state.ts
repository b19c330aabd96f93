import { ApiError, type ListQuery, type ReviewClient } from './api';
import type { Decision, ItemDetail, ItemSummary, Progress, ReviewState } from './types';

export type Toast = { kind: 'error' | 'info'; text: string };

export type Filters = {
  lang: string | null;
  status: ReviewState | null;
  page: number;
};

export const PAGE_SIZE = 50;

const DECIDED_STATE: Record<Decision, ReviewState> = {
  accept: 'accepted',
  reject: 'rejected',
  skip: 'skipped',
};

/**
 * Client-side session state. Decisions render optimistically and are
 * reconciled against the service reply: success applies the returned
 * item and progress verbatim, failure rolls the item back, so the UI
 * never shows an accept the service refused.
 */
export class ReviewStore {
  items: ItemSummary[] = [];
  total = 0;
  progress: Progress | null = null;
  filters: Filters = { lang: null, status: null, page: 1 };
  selectedId: string | null = null;
  detail: ItemDetail | null = null;
  /** Service unreachable; set by any failed fetch, cleared by a retry. */
  offline = false;
  toast: Toast | null = null;
  loading = false;

  private inFlight = false;
  private listeners: Array<() => void> = [];

  constructor(private readonly api: ReviewClient) {}

  subscribe(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  private listQuery(): ListQuery {
    return {
      lang: this.filters.lang,
      status: this.filters.status,
      page: this.filters.page,
      pageSize: PAGE_SIZE,
    };
  }

  /** Fetch list and progress; the service is the source of truth. */
  async refresh(): Promise<void> {
    this.loading = true;
    this.emit();
    try {
      const [list, progress] = await Promise.all([
        this.api.listItems(this.listQuery()),
        this.api.progress(),
      ]);
      this.items = list.items;
      this.total = list.total;
      this.progress = progress;
      this.offline = false;
      if (this.selectedId !== null && !this.items.some((it) => it.sample_id === this.selectedId)) {
        this.selectedId = null;
        this.detail = null;
      }
      if (this.selectedId === null && this.items.length > 0) {
        await this.select(this.items[0].sample_id);
      }
    } catch (err) {
      if (err instanceof ApiError) {
        this.toast = { kind: 'error', text: err.detail };
      } else {
        this.offline = true;
      }
    } finally {
      this.loading = false;
      this.emit();
    }
  }

  async setFilters(patch: Partial<Filters>): Promise<void> {
    this.filters = { ...this.filters, ...patch };
    if (!('page' in patch)) this.filters.page = 1;
    this.selectedId = null;
    this.detail = null;
    await this.refresh();
  }

  async select(id: string): Promise<void> {
    this.selectedId = id;
    this.detail = null;
    this.emit();
    try {
      const detail = await this.api.getItem(id);
      if (this.selectedId === id) this.detail = detail;
      this.offline = false;
    } catch (err) {
      if (err instanceof ApiError) {
        this.toast = { kind: 'error', text: err.detail };
      } else {
        this.offline = true;
      }
    }
    this.emit();
  }

  /** Move the selection by delta within the current page. */
  async moveSelection(delta: number): Promise<void> {
    if (this.items.length === 0) return;
    const idx = this.items.findIndex((it) => it.sample_id === this.selectedId);
    const next = Math.min(this.items.length - 1, Math.max(0, (idx < 0 ? 0 : idx) + delta));
    await this.select(this.items[next].sample_id);
  }

  private nextPendingAfter(id: string): string | null {
    const idx = this.items.findIndex((it) => it.sample_id === id);
    for (let k = 1; k <= this.items.length; k++) {
      const candidate = this.items[(idx + k) % this.items.length];
      if (candidate.state === 'pending' && candidate.sample_id !== id) return candidate.sample_id;
    }
    return null;
  }

  /**
   * Post a decision for the selected item. One decision in flight at a
   * time; extra key presses are dropped rather than queued.
   */
  async decide(decision: Decision): Promise<void> {
    if (this.inFlight || this.selectedId === null) return;
    const id = this.selectedId;
    const item = this.items.find((it) => it.sample_id === id);
    if (item === undefined) return;
    const before = item.state;
    this.inFlight = true;
    item.state = DECIDED_STATE[decision];
    this.toast = null;
    this.emit();
    try {
      const result = await this.api.decide(id, decision);
      item.state = result.item.state;
      this.progress = result.progress;
      if (this.detail !== null && this.detail.sample_id === id) {
        this.detail = { ...this.detail, state: result.item.state };
      }
      const next = this.nextPendingAfter(id);
      if (next !== null) await this.select(next);
    } catch (err) {
      item.state = before;
      if (err instanceof ApiError) {
        this.toast = { kind: 'error', text: err.detail };
      } else {
        this.offline = true;
      }
    } finally {
      this.inFlight = false;
      this.emit();
    }
  }

  dismissToast(): void {
    this.toast = null;
    this.emit();
  }
}
