/**
 * The three-step assessment wizard. Rendering is a pure function of
 * WizardState; DOM events dispatch actions that call the service and fold
 * the resulting job view back into the state.
 *
 * Step map: Upload -> Snapshots (frame count, thumbnails + transcript) ->
 * Rubric (modality radio, template picker, Evaluate) -> Review (editable
 * FULL response) -> Result (final narrative + per-criterion scores).
 */

import { ApiError, VidaasClient } from './api.js';
import { RUBRIC_TEMPLATES, templateById } from './templates.js';
import {
  Validation, ViewMode, WizardState, applyServerView, canEvaluate,
  encouragement, initialState,
} from './state.js';

export interface WizardOptions {
  pollIntervalMs?: number;
  viewMode?: ViewMode;
}

export interface WizardHandle {
  getState(): WizardState;
  setViewMode(mode: ViewMode): void;
  element: HTMLElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function createWizard(
  root: HTMLElement, client: VidaasClient, opts: WizardOptions = {},
): WizardHandle {
  let state = initialState(opts.viewMode ?? 'teacher');
  const pollIntervalMs = opts.pollIntervalMs ?? 2000;
  const container = el('div', { id: 'wizard-root' });
  root.appendChild(container);

  const setState = (next: WizardState) => {
    state = next;
    render();
  };

  const fail = (err: unknown) => {
    const message = err instanceof ApiError ? err.detail : String(err);
    setState({ ...state, polling: false, banner: message });
  };

  // ------------------------------------------------------------- actions

  // Blob.arrayBuffer is missing in some environments; fall back to FileReader
  function readFileBytes(file: File): Promise<Uint8Array> {
    if (typeof file.arrayBuffer === 'function') {
      return file.arrayBuffer().then((buffer) => new Uint8Array(buffer));
    }
    return new Promise((resolve, reject) => {
      const reader = new FileReader();
      reader.onload = () => resolve(new Uint8Array(reader.result as ArrayBuffer));
      reader.onerror = () => reject(reader.error ?? new Error('file read failed'));
      reader.readAsArrayBuffer(file);
    });
  }

  async function uploadVideo(file: File) {
    try {
      const bytes = await readFileBytes(file);
      const { job_id } = await client.submitVideo(bytes, file.name);
      const view = await client.getJob(job_id);
      setState(applyServerView({ ...state }, view));
    } catch (err) {
      fail(err);
    }
  }

  async function makeSnapshots() {
    if (!state.jobId) return;
    try {
      const view = await client.snapshots(state.jobId, {
        requested_frames: state.requestedFrames,
        batch_size: state.batchSize,
        max_dim: state.maxDim,
      });
      setState(applyServerView({ ...state }, view));
    } catch (err) {
      fail(err);
    }
  }

  async function evaluate() {
    if (!state.jobId || !canEvaluate(state).ok) return;
    try {
      const view = await client.evaluate(state.jobId, {
        mode: state.mode,
        video_rubric: state.videoRubric,
        audio_rubric: state.mode === 'video_audio' ? state.audioRubric : null,
        subject_id: state.subjectId,
      });
      setState({ ...applyServerView({ ...state }, view), polling: true });
      const settled = await client.pollUntil(
        state.jobId, new Set(['evaluated', 'failed']),
        { intervalMs: pollIntervalMs },
      );
      setState({ ...applyServerView({ ...state }, settled), polling: false });
    } catch (err) {
      fail(err);
    }
  }

  async function summarize() {
    const jobId = state.jobId;
    if (!jobId) return;
    try {
      const serverText = state.serverView?.full_response?.text ?? '';
      const draft = state.editBuffer;
      if (draft !== null && draft !== serverText) {
        const view = await client.editFullResponse(jobId, draft);
        state = applyServerView({ ...state }, view);
      }
      const accepted = await client.summarize(jobId);
      setState({ ...applyServerView({ ...state }, accepted), polling: true });
      const settled = await client.pollUntil(
        jobId, new Set(['complete', 'failed']),
        { intervalMs: pollIntervalMs },
      );
      setState({ ...applyServerView({ ...state }, settled), polling: false });
    } catch (err) {
      fail(err);
    }
  }

  // ------------------------------------------------------------ rendering

  function render() {
    container.replaceChildren(
      renderBanner(), renderStepIndicator(),
      ...renderCurrentStep(),
    );
  }

  function renderBanner(): HTMLElement {
    const banner = el('div', { id: 'banner', role: 'alert' });
    if (state.banner) {
      banner.textContent = state.banner;
      banner.classList.add('error');
    } else {
      banner.hidden = true;
    }
    return banner;
  }

  function renderStepIndicator(): HTMLElement {
    const labels: Record<string, string> = {
      upload: '1. Upload video',
      snapshots: '1. Make batched snapshots & audio script',
      rubric: '2. Set evaluation rubric',
      review: '3a. Review the FULL response',
      result: '3b. Final evaluation',
    };
    const bar = el('div', { id: 'step-indicator' }, labels[state.step]);
    if (state.polling) {
      bar.appendChild(el('span', { id: 'polling-indicator' }, ' (working…)'));
    }
    return bar;
  }

  function renderCurrentStep(): HTMLElement[] {
    switch (state.step) {
      case 'upload': return [renderUpload()];
      case 'snapshots': return [renderSnapshotParams()];
      case 'rubric': return [renderSnapshotsPanel(), renderRubricForm()];
      case 'review': return [renderReview()];
      case 'result': return [renderResult()];
    }
  }

  function renderUpload(): HTMLElement {
    const panel = el('section', { id: 'upload-panel' });
    panel.appendChild(el('label', { for: 'subject-input' }, 'Subject (pseudonym): '));
    const subject = el('input', { id: 'subject-input', type: 'text', value: state.subjectId });
    subject.addEventListener('input', () => { state.subjectId = subject.value; });
    panel.appendChild(subject);
    const input = el('input', { id: 'file-input', type: 'file', accept: 'video/*' });
    panel.appendChild(input);
    const button = el('button', { id: 'upload-button' }, 'Upload');
    button.addEventListener('click', () => {
      const file = input.files?.[0];
      if (file) void uploadVideo(file);
    });
    panel.appendChild(button);
    return panel;
  }

  function renderSnapshotParams(): HTMLElement {
    const panel = el('section', { id: 'snapshot-panel' });
    const mkNumber = (id: string, label: string, value: number,
                      onChange: (v: number) => void) => {
      panel.appendChild(el('label', { for: id }, label));
      const input = el('input', { id, type: 'number', value: String(value) });
      input.addEventListener('input', () => onChange(Number(input.value)));
      panel.appendChild(input);
    };
    mkNumber('requested-frames', 'Frames to sample: ', state.requestedFrames,
             (v) => { state.requestedFrames = v; });
    mkNumber('batch-size', 'Frames per model call: ', state.batchSize,
             (v) => { state.batchSize = v; });
    mkNumber('max-dim', 'Max image dimension: ', state.maxDim,
             (v) => { state.maxDim = v; });
    const button = el('button', { id: 'make-snapshots-button' }, 'Make snapshots');
    button.addEventListener('click', () => void makeSnapshots());
    panel.appendChild(button);
    return panel;
  }

  function renderSnapshotsPanel(): HTMLElement {
    const panel = el('section', { id: 'snapshots-view' });
    const grid = el('div', { id: 'frames-grid' });
    for (const frame of state.serverView?.frames ?? []) {
      const img = el('img', {
        class: 'thumb', src: frame.data_url,
        alt: `frame ${frame.index} at ${frame.timestamp.toFixed(2)}s`,
      });
      grid.appendChild(img);
    }
    panel.appendChild(grid);
    const transcript = el('pre', { id: 'transcript-panel' });
    transcript.textContent = state.serverView?.transcript
      ?? '(no audio track in this video)';
    panel.appendChild(transcript);
    return panel;
  }

  function updateValidation(message: HTMLElement, button: HTMLButtonElement) {
    const validation: Validation = canEvaluate(state);
    button.disabled = !validation.ok || state.polling;
    message.textContent = validation.ok ? '' : validation.reason ?? '';
    message.hidden = validation.ok;
  }

  function renderRubricForm(): HTMLElement {
    const panel = el('section', { id: 'rubric-panel' });

    const validation = el('p', { id: 'validation-message', role: 'status' });
    const evaluateButton = el('button', { id: 'evaluate-button' }, 'Evaluate');

    const modality = el('fieldset', { id: 'modality-choice' });
    modality.appendChild(el('legend', {}, 'Multimodal selection'));
    for (const [value, label, id] of [
      ['video_audio', 'Video + Audio', 'mode-video-audio'],
      ['video_only', 'Video only', 'mode-video-only'],
    ] as const) {
      const radio = el('input', { type: 'radio', name: 'modality', id, value });
      (radio as HTMLInputElement).checked = state.mode === value;
      radio.addEventListener('change', () => {
        state.mode = value;
        updateValidation(validation, evaluateButton);
      });
      modality.appendChild(radio);
      modality.appendChild(el('label', { for: id }, label));
    }
    panel.appendChild(modality);

    const picker = el('div', { id: 'template-picker' });
    const select = el('select', { id: 'template-select' });
    select.appendChild(el('option', { value: '' }, 'Start from a template…'));
    for (const template of RUBRIC_TEMPLATES) {
      select.appendChild(el('option', { value: template.id }, template.label));
    }
    picker.appendChild(select);
    panel.appendChild(picker);

    panel.appendChild(el('label', { for: 'video-rubric' }, 'Video evaluation rubric'));
    const videoArea = el('textarea', { id: 'video-rubric', rows: '8' });
    videoArea.value = state.videoRubric;
    videoArea.addEventListener('input', () => {
      state.videoRubric = videoArea.value;
      updateValidation(validation, evaluateButton);
    });
    panel.appendChild(videoArea);

    select.addEventListener('change', () => {
      const template = templateById(select.value);
      if (template) {
        state.videoRubric = template.text;
        videoArea.value = template.text;
        updateValidation(validation, evaluateButton);
      }
    });

    panel.appendChild(el('label', { for: 'audio-rubric' }, 'Audio evaluation rubric (if needed)'));
    const audioArea = el('textarea', { id: 'audio-rubric', rows: '4' });
    audioArea.value = state.audioRubric;
    audioArea.addEventListener('input', () => {
      state.audioRubric = audioArea.value;
      updateValidation(validation, evaluateButton);
    });
    panel.appendChild(audioArea);

    evaluateButton.addEventListener('click', () => void evaluate());
    panel.appendChild(validation);
    panel.appendChild(evaluateButton);
    updateValidation(validation, evaluateButton);
    return panel;
  }

  function renderReview(): HTMLElement {
    const panel = el('section', { id: 'review-panel' });
    if (state.viewMode === 'learner') {
      // learners never see raw partial evaluations
      panel.appendChild(el('p', { id: 'learner-waiting' },
        'Your teacher is reviewing the evaluation. The final result will appear here.'));
      return panel;
    }
    panel.appendChild(el('p', {}, 'You can edit the partial evaluations below before summarizing.'));
    const area = el('textarea', { id: 'full-response', rows: '18' });
    area.value = state.editBuffer ?? state.serverView?.full_response?.text ?? '';
    area.addEventListener('input', () => { state.editBuffer = area.value; });
    panel.appendChild(area);
    const edited = state.serverView?.full_response?.edited ?? false;
    panel.appendChild(el('p', { id: 'edited-flag' }, edited ? 'edited: yes' : 'edited: no'));
    const button = el('button', { id: 'summarize-button' }, 'Summarize and get result');
    button.addEventListener('click', () => void summarize());
    panel.appendChild(button);
    return panel;
  }

  function renderScores(listId: string, entries: { ordinal: number; score: number; rationale: string }[],
                        showRationale: boolean): HTMLElement {
    const list = el('ol', { id: listId });
    for (const entry of entries) {
      const item = el('li', { class: 'score-row', 'data-ordinal': String(entry.ordinal) });
      item.textContent = showRationale
        ? `${entry.ordinal}: ${entry.score}/5 — ${entry.rationale}`
        : `${entry.ordinal}: ${entry.score}/5`;
      list.appendChild(item);
    }
    return list;
  }

  function renderResult(): HTMLElement {
    const panel = el('section', { id: 'result-panel' });
    const final = state.serverView?.final;
    if (!final) {
      panel.appendChild(el('p', {}, 'No final evaluation available.'));
      return panel;
    }
    panel.appendChild(el('h2', {}, 'Final evaluation'));
    if (state.viewMode === 'learner') {
      panel.appendChild(el('p', { id: 'encouragement' }, encouragement(final.scores.overall)));
    }
    panel.appendChild(el('p', { id: 'final-narrative' }, final.narrative));
    panel.appendChild(renderScores('result-scores', final.scores.entries, true));
    panel.appendChild(el('p', { id: 'overall-score' }, `Overall: ${final.scores.overall.toFixed(1)}/5`));
    if (final.audio_scores) {
      panel.appendChild(el('h3', {}, 'Spoken content'));
      panel.appendChild(renderScores('audio-scores', final.audio_scores.entries, true));
    }
    if (state.viewMode === 'teacher' && state.serverView?.record_id) {
      panel.appendChild(el('p', { id: 'record-link' }, `Archived as ${state.serverView.record_id}`));
    }
    return panel;
  }

  render();
  return {
    getState: () => state,
    setViewMode: (mode: ViewMode) => setState({ ...state, viewMode: mode }),
    element: container,
  };
}
