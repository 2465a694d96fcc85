import { describe, expect, it } from 'vitest';

import type { Advisory, LeaderboardEntry } from '../src/client.js';
import {
  advisoryLines,
  advisoryLiveText,
  guestHint,
  leaderboardRows,
  pointsToast,
  reportStatusLine,
  severityClass,
  statusLine,
  validateEventForm,
  validateObstacleForm,
} from '../src/viewmodel.js';

describe('obstacle form validation', () => {
  it('accepts a sane report', () => {
    const check = validateObstacleForm({ klass: 'chair', count: '2', location: 'corridor_1' });
    expect(check.ok).toBe(true);
    expect(check.value).toEqual({ class: 'chair', count: 2, location: 'corridor_1' });
  });

  it('rejects zero, fractional and negative counts', () => {
    for (const count of ['0', '-1', '1.5', 'two', '']) {
      expect(validateObstacleForm({ klass: 'chair', count, location: 'corridor_1' }).ok).toBe(
        false,
      );
    }
  });

  it('rejects malformed locations', () => {
    for (const location of ['corridor', 'corridor_0', 'Corridor_1', 'corridor_01', '_1', '']) {
      expect(validateObstacleForm({ klass: 'chair', count: '1', location }).ok).toBe(false);
    }
  });

  it('trims whitespace', () => {
    const check = validateObstacleForm({ klass: ' chair ', count: '1', location: ' corner_2 ' });
    expect(check.value?.location).toBe('corner_2');
  });
});

describe('event form validation', () => {
  it('needs a keyword and a well-formed location', () => {
    expect(validateEventForm({ keyword: '', location: 'corridor_1' }).ok).toBe(false);
    expect(validateEventForm({ keyword: 'elevator_repair', location: 'lift' }).ok).toBe(false);
    expect(validateEventForm({ keyword: 'elevator_repair', location: 'elevator_1' }).ok).toBe(
      true,
    );
  });
});

describe('points toast', () => {
  it('formats the earned delta', () => {
    expect(pointsToast(2, 7)).toBe('+5 points');
    expect(pointsToast(0, 1)).toBe('+1 point');
  });

  it('is silent when nothing was earned', () => {
    expect(pointsToast(7, 7)).toBeNull();
    expect(pointsToast(7, 3)).toBeNull();
  });
});

describe('leaderboard rows', () => {
  const entries: LeaderboardEntry[] = [
    { rank: 1, user_id: 'u1', display_name: 'ana', points: 57, badges: ['helper_bronze'] },
    { rank: 2, user_id: 'u2', display_name: 'bo', points: 7, badges: [] },
    { rank: 3, user_id: 'u3', display_name: 'cy', points: 1, badges: [] },
  ];

  it('keeps the server order exactly', () => {
    const rows = leaderboardRows(entries);
    expect(rows.map((r) => r.rank)).toEqual([1, 2, 3]);
    expect(rows.map((r) => r.label)).toEqual([
      '1. ana — 57 points',
      '2. bo — 7 points',
      '3. cy — 1 point',
    ]);
    expect(rows[0]?.badges).toBe('helper_bronze');
  });
});

describe('advisory view', () => {
  const advisory: Advisory = {
    route: ['elevator_1'],
    overall: 'high',
    generated_at: '2025-01-01T00:00:09+00:00',
    sentences: [
      'High severity at elevator_1: elevator_repair in progress; verified at 2025-01-01T00:00:07+00:00.',
      'Overall severity: high.',
    ],
    areas: [
      {
        location: 'elevator_1',
        severity: 'high',
        stale: false,
        verified_at: '2025-01-01T00:00:07+00:00',
        active_events: [{ keyword: 'elevator_repair', verified_at: '2025-01-01T00:00:07+00:00' }],
        obstacles: [],
      },
    ],
  };

  it('shows the rendered sentences verbatim', () => {
    expect(advisoryLines(advisory)).toEqual(advisory.sentences);
  });

  it('does not share the array with the source', () => {
    const lines = advisoryLines(advisory);
    lines.push('extra');
    expect(advisory.sentences).toHaveLength(2);
  });

  it('joins sentences for the live region', () => {
    expect(advisoryLiveText(advisory)).toBe(advisory.sentences.join(' '));
  });

  it('maps severities to css classes', () => {
    expect(severityClass('low')).toBe('sev-low');
    expect(severityClass('middle')).toBe('sev-middle');
    expect(severityClass('high')).toBe('sev-high');
  });
});

describe('misc lines', () => {
  it('report status line', () => {
    expect(
      reportStatusLine({
        report_id: 4,
        kind: 'event',
        status: 'verified',
        location: 'elevator_1',
        submitted_at: '2025-01-01T00:00:03+00:00',
      }),
    ).toBe('Report #4 (event at elevator_1): verified');
  });

  it('status line before and after a patrol', () => {
    const base = {
      mission_revision: 0,
      update_revision: 0,
      last_patrol_id: 0,
      last_patrol_at: null,
      pending_reports: 1,
      areas: [],
      keywords: [],
    };
    expect(statusLine(base)).toBe('1 pending report, mission rev 0, no patrol yet');
    expect(
      statusLine({
        ...base,
        pending_reports: 0,
        mission_revision: 2,
        last_patrol_at: '2025-01-01T00:00:07+00:00',
      }),
    ).toBe('0 pending reports, mission rev 2, last patrol 2025-01-01T00:00:07+00:00');
  });

  it('guest hint only for guests', () => {
    expect(guestHint({ category: 'guest' })).toMatch(/guest/);
    expect(guestHint({ category: 'registered' })).toBeNull();
  });
});
