/**
 * DOM wiring for index.html. All display strings come from viewmodel.ts;
 * this file only moves them into elements and reacts to events.
 */

import { ApiError, PatrolApi, type Session } from './client.js';
import {
  advisoryLines,
  advisoryLiveText,
  guestHint,
  leaderboardRows,
  pointsToast,
  severityClass,
  statusLine,
  validateEventForm,
  validateObstacleForm,
} from './viewmodel.js';

const LEADERBOARD_POLL_MS = 5000;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function message(text: string, isError = false) {
  const box = el<HTMLElement>('message');
  box.textContent = text;
  box.className = isError ? 'error' : 'toast';
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.body.error}: ${err.body.detail}`;
  return err instanceof Error ? err.message : String(err);
}

class App {
  private session: Session | null = null;

  constructor(private readonly api: PatrolApi) {}

  private async refreshLeaderboard() {
    const { entries } = await this.api.leaderboard();
    const list = el<HTMLOListElement>('leaderboard');
    list.textContent = '';
    for (const row of leaderboardRows(entries)) {
      const item = document.createElement('li');
      item.textContent = row.badges ? `${row.label} (${row.badges})` : row.label;
      list.appendChild(item);
    }
  }

  private async refreshStatus() {
    el<HTMLElement>('status').textContent = statusLine(await this.api.status());
  }

  private async login() {
    const name = el<HTMLInputElement>('login-name').value.trim();
    this.session = name
      ? await this.api.login(name)
      : // empty name: report anonymously, token arrives with the report
        null;
    const hint = this.session ? guestHint(this.session) : null;
    message(
      this.session
        ? `Signed in as ${this.session.display_name}.${hint ? ` ${hint}` : ''}`
        : 'Reporting anonymously.',
    );
  }

  private async submitObstacle() {
    const check = validateObstacleForm({
      klass: el<HTMLSelectElement>('ob-class').value,
      count: el<HTMLInputElement>('ob-count').value,
      location: el<HTMLInputElement>('ob-location').value,
    });
    if (!check.ok || !check.value) {
      message(check.error ?? 'Invalid input.', true);
      return;
    }
    const before = this.session ? (await this.api.me(this.session.token)).points : 0;
    const receipt = await this.api.submitObstacle(check.value, this.session?.token);
    if (receipt.token && !this.session) {
      // server minted a guest session; keep it for follow-up queries
      this.session = {
        token: receipt.token,
        user_id: '',
        display_name: 'guest',
        category: 'guest',
        points: 0,
        new_badges: [],
        eligible: false,
      };
    }
    let note = `Report #${receipt.report_id} submitted.`;
    if (this.session && this.session.category !== 'guest') {
      const after = (await this.api.me(this.session.token)).points;
      const toast = pointsToast(before, after);
      if (toast) note += ` ${toast}`;
    }
    message(note);
    await Promise.all([this.refreshStatus(), this.refreshLeaderboard()]);
  }

  private async submitEvent() {
    const check = validateEventForm({
      keyword: el<HTMLSelectElement>('ev-keyword').value,
      location: el<HTMLInputElement>('ev-location').value,
    });
    if (!check.ok || !check.value) {
      message(check.error ?? 'Invalid input.', true);
      return;
    }
    const receipt = await this.api.submitEvent(check.value, this.session?.token);
    message(`Report #${receipt.report_id} submitted.`);
    await this.refreshStatus();
  }

  private async showAdvisory() {
    const route = el<HTMLInputElement>('route').value
      .split(',')
      .map((part) => part.trim())
      .filter(Boolean);
    const advisory = await this.api.advisory(route);
    const list = el<HTMLUListElement>('advisory');
    list.textContent = '';
    for (const [i, line] of advisoryLines(advisory).entries()) {
      const item = document.createElement('li');
      item.textContent = line;
      const area = advisory.areas[i];
      if (area) item.className = severityClass(area.severity);
      list.appendChild(item);
    }
    // one whole announcement for screen readers
    el<HTMLElement>('advisory-live').textContent = advisoryLiveText(advisory);
  }

  wire() {
    const guard = (fn: () => Promise<void>) => () =>
      fn().catch((err) => message(describe(err), true));
    el<HTMLButtonElement>('login-btn').addEventListener('click', guard(() => this.login()));
    el<HTMLButtonElement>('ob-submit').addEventListener(
      'click',
      guard(() => this.submitObstacle()),
    );
    el<HTMLButtonElement>('ev-submit').addEventListener(
      'click',
      guard(() => this.submitEvent()),
    );
    el<HTMLButtonElement>('route-btn').addEventListener(
      'click',
      guard(() => this.showAdvisory()),
    );
    guard(() => this.refreshStatus())();
    guard(() => this.refreshLeaderboard())();
    window.setInterval(guard(() => this.refreshLeaderboard()), LEADERBOARD_POLL_MS);
  }
}

if (typeof document !== 'undefined') {
  const base = (document.body.dataset.api ?? '').replace(/\/$/, '') || window.location.origin;
  new App(new PatrolApi(base)).wire();
}
