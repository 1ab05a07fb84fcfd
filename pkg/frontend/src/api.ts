/**
 * Typed client for the assessment service. All mutations go through here;
 * polling retries transient failures with backoff so a dropped poll never
 * disturbs client-side state.
 */

import type {
  JobSummary, JobView, Mode, ProgressSeries, RecordDetail, RecordSummary,
} from './types.js';

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface SnapshotParams {
  requested_frames: number;
  batch_size: number;
  max_dim: number;
}

export interface EvaluateBody {
  mode: Mode;
  video_rubric: string;
  audio_rubric?: string | null;
  subject_id?: string;
  notes?: string | null;
}

export interface PollOptions {
  intervalMs?: number;
  backoffFactor?: number;
  maxIntervalMs?: number;
  timeoutMs?: number;
  onUpdate?: (view: JobView) => void;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class VidaasClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { 'Content-Type': 'application/json' };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const text = await resp.text();
    if (!resp.ok) {
      let detail = text;
      try {
        detail = (JSON.parse(text) as { detail?: string }).detail ?? text;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return JSON.parse(text) as T;
  }

  /** Multipart upload built by hand so no DOM FormData is required. */
  async submitVideo(data: Uint8Array, filename: string): Promise<{ job_id: string }> {
    const boundary = `vidaas-${Math.random().toString(16).slice(2)}`;
    const head = new TextEncoder().encode(
      `--${boundary}\r\nContent-Disposition: form-data; name="file"; ` +
      `filename="${filename}"\r\nContent-Type: application/octet-stream\r\n\r\n`,
    );
    const tail = new TextEncoder().encode(`\r\n--${boundary}--\r\n`);
    const body = new Uint8Array(head.length + data.length + tail.length);
    body.set(head, 0);
    body.set(data, head.length);
    body.set(tail, head.length + data.length);
    const resp = await this.fetchFn(`${this.baseUrl}/v1/videos`, {
      method: 'POST',
      headers: { 'Content-Type': `multipart/form-data; boundary=${boundary}` },
      body,
    });
    const text = await resp.text();
    if (!resp.ok) {
      throw new ApiError(resp.status, text);
    }
    return JSON.parse(text) as { job_id: string };
  }

  snapshots(jobId: string, params: SnapshotParams): Promise<JobView> {
    return this.request('POST', `/v1/jobs/${jobId}/snapshots`, params);
  }

  evaluate(jobId: string, body: EvaluateBody): Promise<JobView> {
    return this.request('POST', `/v1/jobs/${jobId}/evaluate`, body);
  }

  editFullResponse(jobId: string, text: string): Promise<JobView> {
    return this.request('PUT', `/v1/jobs/${jobId}/full-response`, { text });
  }

  summarize(jobId: string): Promise<JobView> {
    return this.request('POST', `/v1/jobs/${jobId}/summarize`);
  }

  getJob(jobId: string): Promise<JobView> {
    return this.request('GET', `/v1/jobs/${jobId}`);
  }

  listJobs(state?: string): Promise<{ jobs: JobSummary[] }> {
    const query = state ? `?state=${encodeURIComponent(state)}` : '';
    return this.request('GET', `/v1/jobs${query}`);
  }

  submitBatch(sheetJson: string): Promise<{ job_ids: string[] }> {
    return this.request('POST', '/v1/batch', JSON.parse(sheetJson));
  }

  listRecords(subject?: string): Promise<{ records: RecordSummary[] }> {
    const query = subject ? `?subject=${encodeURIComponent(subject)}` : '';
    return this.request('GET', `/v1/records${query}`);
  }

  getRecord(recordId: string): Promise<RecordDetail> {
    return this.request('GET', `/v1/records/${recordId}`);
  }

  progress(subject: string, criterion?: number): Promise<ProgressSeries> {
    const query = criterion === undefined ? '' : `&criterion=${criterion}`;
    return this.request('GET', `/v1/progress?subject=${encodeURIComponent(subject)}${query}`);
  }

  redact(subjectId: string): Promise<{ redacted: number }> {
    return this.request('POST', `/v1/subjects/${encodeURIComponent(subjectId)}/redact`);
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/v1/health');
  }

  /**
   * Poll a job until it reaches one of `states`. Transient fetch failures are
   * retried with exponential backoff (they must never lose client state);
   * server-side 4xx responses are genuine errors and propagate.
   */
  async pollUntil(jobId: string, states: Set<string>, opts: PollOptions = {}): Promise<JobView> {
    const base = opts.intervalMs ?? 2000;
    const factor = opts.backoffFactor ?? 1.5;
    const cap = opts.maxIntervalMs ?? 30_000;
    const deadline = Date.now() + (opts.timeoutMs ?? 300_000);
    let interval = base;
    for (;;) {
      try {
        const view = await this.getJob(jobId);
        opts.onUpdate?.(view);
        if (states.has(view.state)) {
          return view;
        }
        interval = base; // healthy poll: reset backoff
      } catch (err) {
        if (err instanceof ApiError) {
          throw err;
        }
        interval = Math.min(cap, interval * factor); // network hiccup: back off
      }
      if (Date.now() > deadline) {
        throw new Error(`poll timeout: job ${jobId} never reached ${[...states].join('|')}`);
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }
}
