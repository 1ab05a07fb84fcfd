import { describe, expect, it } from 'vitest';

import {
  applyServerView, canEvaluate, encouragement, initialState, stepForJob,
} from '../src/state.js';
import type { JobView } from '../src/types.js';

function view(overrides: Partial<JobView>): JobView {
  return {
    job_id: 'j1', state: 'created', auto: false, pair_name: null,
    error: null, record_id: null, ...overrides,
  };
}

describe('stepForJob', () => {
  it('mirrors the service state machine', () => {
    expect(stepForJob(null)).toBe('upload');
    expect(stepForJob(view({ state: 'created' }))).toBe('snapshots');
    expect(stepForJob(view({ state: 'snapshots_ready' }))).toBe('rubric');
    expect(stepForJob(view({ state: 'evaluating' }))).toBe('rubric');
    expect(stepForJob(view({ state: 'evaluated' }))).toBe('review');
    expect(stepForJob(view({ state: 'summarizing' }))).toBe('review');
    expect(stepForJob(view({ state: 'complete' }))).toBe('result');
  });

  it('review is only reachable once the job is evaluated', () => {
    const preEvaluation: JobView['state'][] = ['created', 'snapshots_ready', 'evaluating'];
    for (const state of preEvaluation) {
      expect(stepForJob(view({ state }))).not.toBe('review');
    }
  });
});

describe('applyServerView', () => {
  it('carries the stage-tagged diagnostic into the banner', () => {
    const next = applyServerView(initialState(), view({
      state: 'failed', frames: [],
      error: { stage: 'evaluate', message: 'provider said no' },
    }));
    expect(next.banner).toContain("stage 'evaluate' failed");
    expect(next.banner).toContain('provider said no');
  });

  it('preserves the local edit buffer across poll updates on review', () => {
    let state = applyServerView(initialState(), view({
      state: 'evaluated',
      full_response: { text: 'server copy', edited: false },
    }));
    state = { ...state, editBuffer: 'teacher draft in progress' };
    const polled = applyServerView(state, view({
      state: 'evaluated',
      full_response: { text: 'server copy', edited: false },
    }));
    expect(polled.editBuffer).toBe('teacher draft in progress');
  });

  it('seeds the edit buffer from the server copy when entering review', () => {
    const next = applyServerView(initialState(), view({
      state: 'evaluated',
      full_response: { text: 'assembled partials', edited: false },
    }));
    expect(next.editBuffer).toBe('assembled partials');
  });

  it('is pure: same inputs give the same state, so a refresh cannot fork', () => {
    const input = view({ state: 'snapshots_ready', transcript: null });
    const a = applyServerView(initialState(), input);
    const b = applyServerView(initialState(), input);
    expect(a).toEqual(b);
  });
});

describe('canEvaluate', () => {
  function readyState() {
    let state = applyServerView(initialState(), view({
      state: 'snapshots_ready', transcript: 'spoken words', frames: [],
    }));
    state = { ...state, videoRubric: '1. something observable' };
    return state;
  }

  it('accepts video-only with a rubric', () => {
    expect(canEvaluate(readyState()).ok).toBe(true);
  });

  it('blocks an empty video rubric', () => {
    const result = canEvaluate({ ...readyState(), videoRubric: '  ' });
    expect(result.ok).toBe(false);
    expect(result.reason).toContain('video rubric');
  });

  it('blocks video+audio without an audio rubric', () => {
    const result = canEvaluate({ ...readyState(), mode: 'video_audio', audioRubric: '' });
    expect(result.ok).toBe(false);
    expect(result.reason).toContain('audio rubric');
  });

  it('blocks video+audio when the asset has no transcript', () => {
    let state = applyServerView(initialState(), view({
      state: 'snapshots_ready', transcript: null, frames: [],
    }));
    state = {
      ...state, videoRubric: '1. x', audioRubric: '1. y', mode: 'video_audio',
    };
    const result = canEvaluate(state);
    expect(result.ok).toBe(false);
    expect(result.reason).toContain('no audio track');
  });

  it('blocks before snapshots are ready', () => {
    const state = { ...initialState(), videoRubric: '1. x' };
    expect(canEvaluate(state).ok).toBe(false);
  });
});

describe('encouragement', () => {
  it('is motivating at every score level and quotes the score', () => {
    for (const overall of [0, 1.4, 2.4, 3.6, 4.9]) {
      const line = encouragement(overall);
      expect(line).toContain(`${overall.toFixed(1)}/5`);
      expect(line.length).toBeGreaterThan(20);
    }
  });
});
