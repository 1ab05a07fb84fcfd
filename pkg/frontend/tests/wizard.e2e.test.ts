// @vitest-environment jsdom
/**
 * Scripted browser session against the real service (mock provider):
 * Upload -> Snapshots (12 thumbnails) -> Rubric (forward-roll template,
 * video only) -> Review edit -> Result with 6 scores. Also checks that
 * Video + Audio with an empty audio rubric blocks Evaluate with inline
 * validation, and that learner mode swaps in the encouragement framing.
 */

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { createApp, AppHandle } from '../src/app.js';
import { ServiceHandle, makeClip, startService, waitFor } from './helpers.js';

let service: ServiceHandle;
let app: AppHandle;
let clipBytes: Uint8Array;

beforeAll(async () => {
  service = await startService();
  clipBytes = makeClip(service.workdir, 'wizard.avi', 120, true);
  document.body.innerHTML = '<div id="root"></div>';
  app = createApp(document.getElementById('root')!, {
    baseUrl: service.baseUrl, pollIntervalMs: 50,
  });
});

afterAll(async () => {
  await service.stop();
});

function q<T extends Element>(selector: string): T {
  const node = document.querySelector(selector);
  if (!node) {
    throw new Error(`missing element ${selector}`);
  }
  return node as T;
}

function setInput(selector: string, value: string) {
  const input = q<HTMLInputElement | HTMLTextAreaElement>(selector);
  input.value = value;
  input.dispatchEvent(new Event('input', { bubbles: true }));
}

describe('wizard end to end', () => {
  it('completes upload through final scores with a teacher edit', async () => {
    // -- step 0: upload
    setInput('#subject-input', 'wizard-student');
    const file = new File([clipBytes], 'wizard.avi', { type: 'video/avi' });
    const fileInput = q<HTMLInputElement>('#file-input');
    Object.defineProperty(fileInput, 'files', { value: [file], configurable: true });
    q<HTMLButtonElement>('#upload-button').click();
    await waitFor(() => app.wizard.getState().step === 'snapshots', 30_000, 'upload');

    // -- step 1: batched snapshots & audio script
    setInput('#requested-frames', '12');
    setInput('#batch-size', '6');
    setInput('#max-dim', '256');
    q<HTMLButtonElement>('#make-snapshots-button').click();
    await waitFor(() => app.wizard.getState().step === 'rubric', 60_000, 'snapshots');
    expect(document.querySelectorAll('#frames-grid img.thumb').length).toBe(12);
    expect(q('#transcript-panel').textContent).toContain('MOCK TRANSCRIPT');

    // -- step 2: Video + Audio without an audio rubric blocks Evaluate inline
    q<HTMLInputElement>('#mode-video-audio').click();
    const select = q<HTMLSelectElement>('#template-select');
    select.value = 'forward_roll';
    select.dispatchEvent(new Event('change', { bubbles: true }));
    expect(q<HTMLTextAreaElement>('#video-rubric').value).toContain(
      'Place both hands on the ground');
    const evaluateButton = q<HTMLButtonElement>('#evaluate-button');
    expect(evaluateButton.disabled).toBe(true);
    const validation = q<HTMLElement>('#validation-message');
    expect(validation.hidden).toBe(false);
    expect(validation.textContent).toContain('audio rubric');

    // -- switch to Video only: validation clears, evaluation proceeds
    q<HTMLInputElement>('#mode-video-only').click();
    expect(evaluateButton.disabled).toBe(false);
    expect(q<HTMLElement>('#validation-message').hidden).toBe(true);
    evaluateButton.click();
    await waitFor(() => app.wizard.getState().step === 'review', 90_000, 'evaluation');
    expect(app.wizard.getState().serverView?.state).toBe('evaluated');

    // -- step 3a: edit one section of the FULL response
    const area = q<HTMLTextAreaElement>('#full-response');
    expect(area.value).toContain('== VIDEO BATCH 1/2');
    setInput('#full-response', area.value.replace(
      'MOCK EVALUATION', 'TEACHER-ADJUSTED EVALUATION'));
    q<HTMLButtonElement>('#summarize-button').click();
    await waitFor(() => app.wizard.getState().step === 'result', 90_000, 'summary');

    // -- step 3b: final evaluation with exactly 6 scores
    const rows = document.querySelectorAll('#result-scores li.score-row');
    expect(rows.length).toBe(6);
    expect(q('#final-narrative').textContent).toContain('MOCK SUMMARY');
    expect(q('#overall-score').textContent).toMatch(/Overall: \d\.\d\/5/);

    // the edit reached the archived record
    const recordId = app.wizard.getState().serverView?.record_id;
    expect(recordId).toBeTruthy();
    const record = await app.client.getRecord(recordId!);
    expect(record.full_response.edited).toBe(true);
    expect(JSON.stringify(record)).toContain('TEACHER-ADJUSTED EVALUATION');
  });

  it('learner mode reframes the result and hides raw evaluations', () => {
    expect(app.wizard.getState().step).toBe('result');
    app.toggleViewMode();
    expect(app.getViewMode()).toBe('learner');
    expect(q('#encouragement').textContent).toMatch(/\d\.\d\/5/);
    expect(document.querySelector('#full-response')).toBeNull();
    expect(document.querySelector('#record-link')).toBeNull();
    app.toggleViewMode();
    expect(document.querySelector('#encouragement')).toBeNull();
  });
});
