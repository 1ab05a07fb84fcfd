/**
 * Longitudinal progress dashboard: a score-over-time chart (overall or one
 * criterion), the subject's record list, and a record detail pane. Teacher
 * mode shows the full archived document; learner mode shows only the
 * narrative, scores, and encouragement — never raw partial evaluations.
 */

import { ApiError, VidaasClient } from './api.js';
import { ViewMode, encouragement } from './state.js';
import type { ProgressSeries, RecordDetail, RecordSummary } from './types.js';

export interface DashboardOptions {
  viewMode?: ViewMode;
}

export interface DashboardHandle {
  load(subject: string): Promise<void>;
  selectCriterion(ordinal: number | null): Promise<void>;
  openRecord(recordId: string): Promise<void>;
  setViewMode(mode: ViewMode): void;
  element: HTMLElement;
}

const CHART_WIDTH = 480;
const CHART_HEIGHT = 160;
const SVG_NS = 'http://www.w3.org/2000/svg';

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
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

export function renderChart(series: ProgressSeries): SVGElement {
  const svg = svgEl('svg', {
    id: 'progress-chart', viewBox: `0 0 ${CHART_WIDTH} ${CHART_HEIGHT}`,
    width: String(CHART_WIDTH), height: String(CHART_HEIGHT), role: 'img',
  });
  const points = series.points;
  const margin = 20;
  const xAt = (i: number) => points.length === 1
    ? CHART_WIDTH / 2
    : margin + (i * (CHART_WIDTH - 2 * margin)) / (points.length - 1);
  const yAt = (score: number) =>
    CHART_HEIGHT - margin - (score / 5) * (CHART_HEIGHT - 2 * margin);

  if (points.length > 1) {
    const path = points.map((p, i) => `${xAt(i)},${yAt(p.score)}`).join(' ');
    svg.appendChild(svgEl('polyline', {
      points: path, fill: 'none', stroke: 'currentColor', 'stroke-width': '2',
    }));
  }
  points.forEach((p, i) => {
    const dot = svgEl('circle', {
      class: 'point', cx: String(xAt(i)), cy: String(yAt(p.score)), r: '4',
      'data-score': String(p.score), 'data-record': p.record_id,
    });
    svg.appendChild(dot);
  });
  return svg;
}

export function createDashboard(
  root: HTMLElement, client: VidaasClient, opts: DashboardOptions = {},
): DashboardHandle {
  let viewMode: ViewMode = opts.viewMode ?? 'teacher';
  let subject: string | null = null;
  let criterion: number | null = null;
  let series: ProgressSeries | null = null;
  let records: RecordSummary[] = [];
  let detail: RecordDetail | null = null;
  let emptyMessage: string | null = null;

  const container = el('div', { id: 'dashboard-root' });
  root.appendChild(container);

  async function load(newSubject: string) {
    subject = newSubject;
    detail = null;
    try {
      series = await client.progress(subject, criterion ?? undefined);
      records = (await client.listRecords(subject)).records;
      emptyMessage = null;
    } catch (err) {
      series = null;
      records = [];
      emptyMessage = err instanceof ApiError && err.status === 404
        ? `No assessments recorded for '${subject}' yet.`
        : String(err);
    }
    render();
  }

  async function selectCriterion(ordinal: number | null) {
    criterion = ordinal;
    if (subject) {
      await load(subject);
    }
  }

  async function openRecord(recordId: string) {
    detail = await client.getRecord(recordId);
    render();
  }

  function maxCriterionCount(): number {
    return records.reduce((max, r) => Math.max(max, r.criterion_count), 0);
  }

  function render() {
    container.replaceChildren();

    const form = el('div', { id: 'dashboard-controls' });
    const input = el('input', { id: 'dashboard-subject', type: 'text', value: subject ?? '' });
    form.appendChild(input);
    const button = el('button', { id: 'load-progress-button' }, 'Show progress');
    button.addEventListener('click', () => void load(input.value));
    form.appendChild(button);

    const select = el('select', { id: 'criterion-select' });
    select.appendChild(el('option', { value: '' }, 'Overall score'));
    for (let ordinal = 1; ordinal <= maxCriterionCount(); ordinal += 1) {
      const option = el('option', { value: String(ordinal) }, `Criterion ${ordinal}`);
      if (criterion === ordinal) {
        option.setAttribute('selected', 'selected');
      }
      select.appendChild(option);
    }
    select.addEventListener('change', () => {
      void selectCriterion(select.value === '' ? null : Number(select.value));
    });
    form.appendChild(select);
    container.appendChild(form);

    if (emptyMessage) {
      container.appendChild(el('p', { id: 'dashboard-empty' }, emptyMessage));
      return;
    }
    if (!series) {
      container.appendChild(el('p', { id: 'dashboard-empty' },
        'Enter a subject to see their progress.'));
      return;
    }

    container.appendChild(el('h3', {},
      criterion === null ? 'Overall score over time' : `Criterion ${criterion} over time`));
    container.appendChild(renderChart(series));

    const list = el('ul', { id: 'records-list' });
    for (const record of records) {
      const item = el('li', { class: 'record-row', 'data-record': record.record_id });
      const link = el('a', { href: '#', class: 'record-link' },
        `${record.created_at} — overall ${record.overall.toFixed(1)}/5`
        + (record.edited ? ' (reviewed)' : ''));
      link.addEventListener('click', (event) => {
        event.preventDefault();
        void openRecord(record.record_id);
      });
      item.appendChild(link);
      list.appendChild(item);
    }
    container.appendChild(list);

    if (detail) {
      container.appendChild(renderDetail(detail));
    }
  }

  function renderDetail(record: RecordDetail): HTMLElement {
    const panel = el('section', { id: 'record-detail' });
    panel.appendChild(el('h3', {}, `Assessment ${record.record_id}`));
    if (viewMode === 'learner') {
      panel.appendChild(el('p', { id: 'encouragement' },
        encouragement(record.final.scores.overall)));
    }
    panel.appendChild(el('p', { id: 'detail-narrative' }, record.final.narrative));
    const scores = el('ol', { id: 'detail-scores' });
    for (const entry of record.final.scores.entries) {
      scores.appendChild(el('li', { class: 'score-row', 'data-ordinal': String(entry.ordinal) },
        `${entry.ordinal}: ${entry.score}/5 — ${entry.rationale}`));
    }
    panel.appendChild(scores);
    if (viewMode === 'teacher') {
      // full archived document, including the partial evaluations
      const partials = el('div', { id: 'detail-partials' });
      for (const section of record.full_response.sections) {
        partials.appendChild(el('h4', { class: 'partial-header' }, section.header));
        partials.appendChild(el('pre', { class: 'partial-body' }, section.body));
      }
      panel.appendChild(partials);
    }
    return panel;
  }

  render();
  return {
    load,
    selectCriterion,
    openRecord,
    setViewMode: (mode: ViewMode) => { viewMode = mode; render(); },
    element: container,
  };
}
