/**
 * Pure view-model functions: everything the pages display is computed
 * here, DOM-free, so the contract tests can check the exact strings.
 */

import type {
  Advisory,
  LeaderboardEntry,
  ReportView,
  ServiceStatus,
  UserState,
} from './client.js';

const LOCATION_PATTERN = /^[a-z]+_[1-9][0-9]*$/;

export interface FormCheck<T> {
  ok: boolean;
  value?: T;
  error?: string;
}

export function validateObstacleForm(input: {
  klass: string;
  count: string;
  location: string;
}): FormCheck<{ class: string; count: number; location: string }> {
  const klass = input.klass.trim();
  if (!klass) return { ok: false, error: 'Pick an obstacle type.' };
  const count = Number(input.count);
  if (!Number.isInteger(count) || count < 1) {
    return { ok: false, error: 'Count must be a whole number of at least 1.' };
  }
  const location = input.location.trim();
  if (!LOCATION_PATTERN.test(location)) {
    return { ok: false, error: 'Location looks like corridor_1, corner_2, ...' };
  }
  return { ok: true, value: { class: klass, count, location } };
}

export function validateEventForm(input: {
  keyword: string;
  location: string;
}): FormCheck<{ keyword: string; location: string }> {
  const keyword = input.keyword.trim();
  if (!keyword) return { ok: false, error: 'Pick an event keyword.' };
  const location = input.location.trim();
  if (!LOCATION_PATTERN.test(location)) {
    return { ok: false, error: 'Location looks like corridor_1, corner_2, ...' };
  }
  return { ok: true, value: { keyword, location } };
}

/** "+5 points" after a scored action; null when nothing was earned. */
export function pointsToast(pointsBefore: number, pointsAfter: number): string | null {
  const delta = pointsAfter - pointsBefore;
  if (delta <= 0) return null;
  return `+${delta} point${delta === 1 ? '' : 's'}`;
}

export function guestHint(session: { category: string }): string | null {
  return session.category === 'guest'
    ? 'Reporting as a guest: reports count, points do not.'
    : null;
}

export interface LeaderboardRow {
  rank: number;
  label: string;
  badges: string;
}

/** Rows come out in the exact order the server ranked them. */
export function leaderboardRows(entries: LeaderboardEntry[]): LeaderboardRow[] {
  return entries.map((entry) => ({
    rank: entry.rank,
    label: `${entry.rank}. ${entry.display_name} — ${entry.points} point${
      entry.points === 1 ? '' : 's'
    }`,
    badges: entry.badges.join(', '),
  }));
}

/**
 * The advisory view shows the server's rendered sentences verbatim;
 * nothing is rephrased client-side.
 */
export function advisoryLines(advisory: Advisory): string[] {
  return [...advisory.sentences];
}

/** One string for the aria-live region so screen readers get it whole. */
export function advisoryLiveText(advisory: Advisory): string {
  return advisory.sentences.join(' ');
}

export function severityClass(severity: 'low' | 'middle' | 'high'): string {
  return `sev-${severity}`;
}

export function reportStatusLine(report: ReportView): string {
  return `Report #${report.report_id} (${report.kind} at ${report.location}): ${report.status}`;
}

export function userLine(user: UserState): string {
  const badges = user.badges.length ? ` [${user.badges.join(', ')}]` : '';
  return `${user.display_name}: ${user.points} points${badges}`;
}

export function statusLine(status: ServiceStatus): string {
  const patrolled = status.last_patrol_at
    ? `last patrol ${status.last_patrol_at}`
    : 'no patrol yet';
  return `${status.pending_reports} pending report${
    status.pending_reports === 1 ? '' : 's'
  }, mission rev ${status.mission_revision}, ${patrolled}`;
}
