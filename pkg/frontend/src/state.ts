/**
 * Wizard state: a pure function of the last server job view plus the local
 * edit buffer. Reducers never mutate; renders derive everything from here,
 * so a refresh or a failed poll can never duplicate jobs or drop edits.
 */

import type { JobView, Mode } from './types.js';

export type Step = 'upload' | 'snapshots' | 'rubric' | 'review' | 'result';
export type ViewMode = 'teacher' | 'learner';

export interface WizardState {
  step: Step;
  jobId: string | null;
  serverView: JobView | null;
  /** Local, not-yet-submitted edits to the FULL response. */
  editBuffer: string | null;
  mode: Mode;
  videoRubric: string;
  audioRubric: string;
  subjectId: string;
  requestedFrames: number;
  batchSize: number;
  maxDim: number;
  polling: boolean;
  banner: string | null;
  viewMode: ViewMode;
}

export function initialState(viewMode: ViewMode = 'teacher'): WizardState {
  return {
    step: 'upload',
    jobId: null,
    serverView: null,
    editBuffer: null,
    mode: 'video_only',
    videoRubric: '',
    audioRubric: '',
    subjectId: 'anonymous',
    requestedFrames: 12,
    batchSize: 6,
    maxDim: 768,
    polling: false,
    banner: null,
    viewMode,
  };
}

/** Mirror of the service job state machine onto wizard steps. */
export function stepForJob(view: JobView | null): Step {
  if (view === null) {
    return 'upload';
  }
  switch (view.state) {
    case 'created':
      return 'snapshots';
    case 'snapshots_ready':
    case 'evaluating':
      return 'rubric';
    case 'evaluated':
    case 'summarizing':
      return 'review';
    case 'complete':
      return 'result';
    case 'failed':
      // stay on the step whose stage failed; the banner carries the diagnostic
      return view.final ? 'result' : view.full_response ? 'review'
        : view.frames ? 'rubric' : 'snapshots';
  }
}

export function applyServerView(state: WizardState, view: JobView): WizardState {
  const next: WizardState = { ...state, serverView: view, jobId: view.job_id };
  next.step = stepForJob(view);
  next.banner = view.error ? `stage '${view.error.stage}' failed: ${view.error.message}` : null;
  if (next.step !== 'review' && next.step !== 'result') {
    next.editBuffer = null;
  } else if (next.editBuffer === null && view.full_response) {
    next.editBuffer = view.full_response.text;
  }
  return next;
}

export interface Validation {
  ok: boolean;
  reason: string | null;
}

/** Inline validation for the Evaluate button on the rubric step. */
export function canEvaluate(state: WizardState): Validation {
  if (state.serverView?.state !== 'snapshots_ready') {
    return { ok: false, reason: 'snapshots are not ready yet' };
  }
  if (!state.videoRubric.trim()) {
    return { ok: false, reason: 'the video rubric is empty' };
  }
  if (state.mode === 'video_audio') {
    if (!state.audioRubric.trim()) {
      return { ok: false, reason: 'Video + Audio mode needs an audio rubric' };
    }
    if (!state.serverView?.transcript) {
      return { ok: false, reason: 'this video has no audio track to evaluate' };
    }
  }
  return { ok: true, reason: null };
}

/** Motivational framing for the learner-facing result view. */
export function encouragement(overall: number): string {
  if (overall >= 4.5) {
    return `Outstanding work — ${overall.toFixed(1)}/5! You have mastered almost every point. Keep it up!`;
  }
  if (overall >= 3.5) {
    return `Great job — ${overall.toFixed(1)}/5. You are close to mastering this; one more round of practice will get you there.`;
  }
  if (overall >= 2.0) {
    return `Solid progress — ${overall.toFixed(1)}/5. Look at the tips below and try again; you are improving.`;
  }
  return `You scored ${overall.toFixed(1)}/5 this time. Every attempt builds skill — review the pointers below and give it another go!`;
}
