/**
 * Wire types of the assessment service REST API (/v1/...).
 */

export type JobStateValue =
  | 'created'
  | 'snapshots_ready'
  | 'evaluating'
  | 'evaluated'
  | 'summarizing'
  | 'complete'
  | 'failed';

export type Mode = 'video_only' | 'video_audio';

export interface FrameView {
  index: number;
  timestamp: number;
  width: number;
  height: number;
  data_url: string;
}

export interface ScoreEntry {
  ordinal: number;
  score: number;
  rationale: string;
}

export interface ScoreSheet {
  entries: ScoreEntry[];
  overall: number;
}

export interface FinalView {
  narrative: string;
  scores: ScoreSheet;
  audio_scores: ScoreSheet | null;
}

export interface StageError {
  stage: string;
  message: string;
}

export interface JobView {
  job_id: string;
  state: JobStateValue;
  auto: boolean;
  pair_name: string | null;
  error: StageError | null;
  record_id: string | null;
  frame_params?: { requested: number; batch_size: number; max_dim: number };
  frames?: FrameView[];
  transcript?: string | null;
  mode?: Mode;
  subject_id?: string;
  full_response?: { text: string; edited: boolean };
  final?: FinalView;
}

export interface JobSummary {
  job_id: string;
  state: JobStateValue;
  auto: boolean;
  pair_name: string | null;
  record_id: string | null;
  error: StageError | null;
}

export interface RecordSummary {
  record_id: string;
  subject_id: string;
  created_at: string;
  asset_digest: string;
  mode: Mode;
  overall: number;
  criterion_count: number;
  rerun: boolean;
  edited: boolean;
}

export interface ProgressPoint {
  created_at: string;
  score: number;
  record_id: string;
}

export interface ProgressSeries {
  subject_id: string;
  criterion_ordinal: number | null;
  points: ProgressPoint[];
}

/** Canonical archived record as served by GET /v1/records/{id}. */
export interface RecordDetail {
  record_id: string;
  created_at: string;
  subject_id: string;
  full_response: { edited: boolean; sections: { header: string; body: string }[] };
  final: {
    narrative: string;
    scores: ScoreSheet;
    audio_scores: ScoreSheet | null;
  };
  partials: { kind: { type: string }; evaluation_text: string }[];
  [key: string]: unknown;
}
