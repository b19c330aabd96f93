/** Wire types for the review service JSON API. */

export type ReviewState = 'pending' | 'accepted' | 'rejected' | 'skipped';
export type Decision = 'accept' | 'reject' | 'skip';

export const REVIEW_STATES: ReviewState[] = ['pending', 'accepted', 'rejected', 'skipped'];

export type ItemSummary = {
  sample_id: string;
  language: string;
  repo_id: string;
  commit_id: string;
  file_path: string;
  message: string;
  state: ReviewState;
};

export type ItemDetail = ItemSummary & {
  old_contents: string;
  history_diff: string;
  current_contents: string;
  new_contents: string;
  target_diff: string;
  task_text: string;
};

export type LanguageProgress = {
  pending: number;
  accepted: number;
  rejected: number;
  skipped: number;
  total: number;
  quota: number;
};

export type Progress = {
  languages: Record<string, LanguageProgress>;
  overall: Omit<LanguageProgress, 'quota'>;
  quota: number;
};

export type ItemList = {
  items: ItemSummary[];
  total: number;
};

export type DecisionResult = {
  item: ItemSummary;
  progress: Progress;
};
