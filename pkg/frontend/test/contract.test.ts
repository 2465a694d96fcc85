/**
 * Contract tests against the real backend: a patrol server process is
 * spawned for the suite and every check goes through PatrolApi, the
 * same client the page uses.
 */

import { type ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiError, PatrolApi } from '../src/client.js';
import { advisoryLines, advisoryLiveText, leaderboardRows, pointsToast } from '../src/viewmodel.js';

const port = 20000 + (process.pid % 10000) + Math.floor(Math.random() * 500);
const base = `http://127.0.0.1:${port}`;
const api = new PatrolApi(base);

let server: ChildProcess;
let serverLog = '';

async function waitForServer(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      await api.status();
      return;
    } catch {
      await new Promise((resolve) => setTimeout(resolve, 200));
    }
  }
  throw new Error(`server did not come up on ${base}\n${serverLog}`);
}

beforeAll(async () => {
  const channelDir = mkdtempSync(join(tmpdir(), 'patrol-web-'));
  server = spawn(
    'python3',
    ['-m', 'robot_patrol', 'serve', '--port', String(port), '--channel', channelDir],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  server.stdout?.on('data', (chunk) => (serverLog += chunk));
  server.stderr?.on('data', (chunk) => (serverLog += chunk));
  await waitForServer();
});

afterAll(() => {
  server?.kill('SIGTERM');
});

describe('report submission', () => {
  it('creates a report and shows "+5 points"', async () => {
    const session = await api.login('carol');
    const { draft_id } = await api.beginReport(session.token);

    const before = (await api.me(session.token)).points;
    const receipt = await api.submitObstacle(
      { class: 'chair', count: 2, location: 'corridor_1' },
      session.token,
      draft_id,
    );
    const after = (await api.me(session.token)).points;

    expect(pointsToast(before, after)).toBe('+5 points');

    // the backend really has the report
    const stored = await api.report(receipt.report_id);
    expect(stored.status).toBe('pending');
    expect(stored.location).toBe('corridor_1');
    expect((await api.status()).pending_reports).toBeGreaterThan(0);
  });

  it('mints a guest session for anonymous reports, with no points', async () => {
    const receipt = await api.submitObstacle({ class: 'table', count: 1, location: 'corner_2' });
    expect(receipt.token).toBeDefined();
    expect(receipt.report_id).toBeGreaterThan(0);
    const me = await api.me(receipt.token as string);
    expect(me.category).toBe('guest');
    expect(me.points).toBe(0);
  });

  it('surfaces backend errors with their names', async () => {
    await expect(
      api.submitObstacle({ class: 'chair', count: 1, location: 'atrium_9' }),
    ).rejects.toMatchObject({ status: 404, body: { error: 'UnknownLocation' } });
    try {
      await api.submitEvent({ keyword: 'flood', location: 'corridor_1' });
      expect.unreachable('flood is not a known keyword');
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(400);
      expect((err as ApiError).body.error).toBe('UnknownKeyword');
    }
  });
});

describe('leaderboard', () => {
  it('display order matches the server order', async () => {
    await api.login('dan'); // 1 point, sits below carol's 7
    const { entries } = await api.leaderboard(10);
    expect(entries.length).toBeGreaterThanOrEqual(2);

    const rows = leaderboardRows(entries);
    expect(rows.map((r) => r.rank)).toEqual(entries.map((e) => e.rank));
    expect(rows.map((r) => r.label.split('. ')[1]?.split(' — ')[0])).toEqual(
      entries.map((e) => e.display_name),
    );
    expect(entries[0]?.display_name).toBe('carol');
  });
});

describe('advisory view', () => {
  it('prints the server sentences verbatim', async () => {
    const advisory = await api.advisory(['corridor_1', 'corner_2']);
    expect(advisory.sentences.length).toBeGreaterThan(0);
    expect(advisoryLines(advisory)).toEqual(advisory.sentences);
    expect(advisoryLiveText(advisory)).toBe(advisory.sentences.join(' '));
    // nothing patrolled yet: both areas are reported stale
    for (const area of advisory.areas) {
      expect(area.stale).toBe(true);
    }
  });

  it('rejects an empty route', async () => {
    await expect(api.advisory([])).rejects.toMatchObject({ status: 400 });
  });
});
