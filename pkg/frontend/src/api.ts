import type { Decision, DecisionResult, ItemDetail, ItemList, Progress, ReviewState } from './types';

export type ListQuery = {
  lang?: string | null;
  status?: ReviewState | null;
  page?: number;
  pageSize?: number;
};

/** Non-2xx reply from the service, with the parsed detail message. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

/** 409 on a decision: the language quota is full, or the item is settled. */
export class DecisionConflict extends ApiError {
  constructor(detail: string) {
    super(409, detail);
    this.name = 'DecisionConflict';
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (typeof body?.detail === 'string') return body.detail;
  } catch {
    // body was not JSON; fall through to the status line
  }
  return `${res.status} ${res.statusText}`;
}

async function expectOk<T>(res: Response): Promise<T> {
  if (res.ok) return res.json() as Promise<T>;
  const detail = await errorDetail(res);
  if (res.status === 409) throw new DecisionConflict(detail);
  throw new ApiError(res.status, detail);
}

/** The client surface the store depends on; lets tests substitute a fake. */
export type ReviewClient = Pick<ReviewApi, 'listItems' | 'getItem' | 'decide' | 'progress'>;

/**
 * Typed client for the review service. Network failures surface as the
 * fetch rejection (TypeError); callers treat those as service-down.
 */
export class ReviewApi {
  constructor(
    private readonly base = '',
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  async listItems(query: ListQuery = {}): Promise<ItemList> {
    const params = new URLSearchParams();
    if (query.lang) params.set('lang', query.lang);
    if (query.status) params.set('status', query.status);
    if (query.page !== undefined) {
      params.set('page', String(query.page));
      params.set('page_size', String(query.pageSize ?? 50));
    }
    const qs = params.toString();
    const res = await this.fetchFn(`${this.base}/api/items${qs ? `?${qs}` : ''}`);
    return expectOk<ItemList>(res);
  }

  async getItem(id: string): Promise<ItemDetail> {
    const res = await this.fetchFn(`${this.base}/api/items/${encodeURIComponent(id)}`);
    return expectOk<ItemDetail>(res);
  }

  async decide(id: string, decision: Decision): Promise<DecisionResult> {
    const res = await this.fetchFn(`${this.base}/api/items/${encodeURIComponent(id)}/decision`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ decision }),
    });
    return expectOk<DecisionResult>(res);
  }

  async progress(): Promise<Progress> {
    const res = await this.fetchFn(`${this.base}/api/progress`);
    return expectOk<Progress>(res);
  }
}
