/**
 * Application shell: header with the teacher/learner toggle, the wizard, and
 * the progress dashboard, wired to one service client.
 */

import { VidaasClient } from './api.js';
import { createDashboard, DashboardHandle } from './dashboard.js';
import { ViewMode } from './state.js';
import { createWizard, WizardHandle } from './wizard.js';

export interface AppOptions {
  baseUrl?: string;
  pollIntervalMs?: number;
  viewMode?: ViewMode;
}

export interface AppHandle {
  wizard: WizardHandle;
  dashboard: DashboardHandle;
  client: VidaasClient;
  getViewMode(): ViewMode;
  toggleViewMode(): void;
}

export function createApp(root: HTMLElement, opts: AppOptions = {}): AppHandle {
  const client = new VidaasClient(opts.baseUrl ?? '');
  let viewMode: ViewMode = opts.viewMode ?? 'teacher';

  const header = document.createElement('header');
  const title = document.createElement('h1');
  title.textContent = 'Observational assessment';
  header.appendChild(title);
  const toggle = document.createElement('button');
  toggle.id = 'view-mode-toggle';
  header.appendChild(toggle);
  root.appendChild(header);

  const wizardSection = document.createElement('main');
  wizardSection.id = 'wizard-section';
  root.appendChild(wizardSection);
  const dashboardSection = document.createElement('aside');
  dashboardSection.id = 'dashboard-section';
  root.appendChild(dashboardSection);

  const wizard = createWizard(wizardSection, client, {
    pollIntervalMs: opts.pollIntervalMs, viewMode,
  });
  const dashboard = createDashboard(dashboardSection, client, { viewMode });

  const renderToggle = () => {
    toggle.textContent = viewMode === 'teacher'
      ? 'Viewing as teacher — switch to learner view'
      : 'Viewing as learner — switch to teacher view';
    toggle.dataset.mode = viewMode;
  };
  const toggleViewMode = () => {
    viewMode = viewMode === 'teacher' ? 'learner' : 'teacher';
    wizard.setViewMode(viewMode);
    dashboard.setViewMode(viewMode);
    renderToggle();
  };
  toggle.addEventListener('click', toggleViewMode);
  renderToggle();

  return { wizard, dashboard, client, getViewMode: () => viewMode, toggleViewMode };
}

// browser entry point; tests call createApp directly
if (typeof document !== 'undefined' && document.getElementById('app')) {
  createApp(document.getElementById('app') as HTMLElement, {
    baseUrl: (window as { VIDAAS_BASE_URL?: string }).VIDAAS_BASE_URL ?? '',
  });
}
