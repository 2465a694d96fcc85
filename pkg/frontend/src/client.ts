/**
 * Typed client for the patrol HTTP API. No framework, no state: every
 * method is one request, errors surface as ApiError with the server's
 * {error, detail} body.
 */

export interface ErrorBody {
  error: string;
  detail: string;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ErrorBody,
  ) {
    super(`${body.error}: ${body.detail}`);
    this.name = 'ApiError';
  }
}

export interface Session {
  token: string;
  user_id: string;
  display_name: string;
  category: 'registered' | 'guest' | 'maintenance';
  points: number;
  new_badges: string[];
  eligible: boolean;
}

export interface UserState {
  user_id: string;
  display_name: string;
  category: string;
  points: number;
  badges: string[];
  confirmed_count: number;
  refuted_count: number;
}

export interface ReportReceipt {
  report_id: number;
  draft_id?: string;
  replayed?: boolean;
  token?: string; // present when the server minted a guest session
}

export interface ReportView {
  report_id: number;
  kind: 'obstacle' | 'event';
  status: 'pending' | 'dispatched' | 'verified' | 'refuted';
  location: string;
  submitted_at: string;
}

export interface LeaderboardEntry {
  rank: number;
  user_id: string;
  display_name: string;
  points: number;
  badges: string[];
}

export interface ActiveEvent {
  keyword: string;
  verified_at: string;
}

export interface AdvisoryArea {
  location: string;
  severity: 'low' | 'middle' | 'high';
  stale: boolean;
  verified_at: string | null;
  active_events: ActiveEvent[];
  obstacles: { class: string; count: number }[];
}

export interface Advisory {
  route: string[];
  overall: 'low' | 'middle' | 'high';
  generated_at: string;
  sentences: string[];
  areas: AdvisoryArea[];
}

export interface ServiceStatus {
  mission_revision: number;
  update_revision: number;
  last_patrol_id: number;
  last_patrol_at: string | null;
  pending_reports: number;
  areas: string[];
  keywords: string[];
}

export class PatrolApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json();
    if (!resp.ok) {
      const err: ErrorBody =
        payload && typeof payload.error === 'string'
          ? payload
          : { error: `HTTP ${resp.status}`, detail: JSON.stringify(payload) };
      throw new ApiError(resp.status, err);
    }
    return payload as T;
  }

  login(name: string, maintenance = false): Promise<Session> {
    return this.request('POST', '/login', { name, maintenance });
  }

  me(token: string): Promise<UserState> {
    return this.request('GET', `/me?token=${encodeURIComponent(token)}`);
  }

  beginReport(token?: string): Promise<{ draft_id: string; token?: string }> {
    return this.request('POST', '/reports/begin', token ? { token } : {});
  }

  submitObstacle(
    body: { class: string; count: number; location: string },
    token?: string,
    draftId?: string,
  ): Promise<ReportReceipt> {
    return this.request('POST', '/reports/obstacle', {
      ...body,
      token,
      draft_id: draftId,
    });
  }

  submitEvent(
    body: { keyword: string; location: string },
    token?: string,
    draftId?: string,
  ): Promise<ReportReceipt> {
    return this.request('POST', '/reports/event', {
      ...body,
      token,
      draft_id: draftId,
    });
  }

  report(reportId: number): Promise<ReportView> {
    return this.request('GET', `/reports/${reportId}`);
  }

  dispatch(): Promise<{ mission_id: number; mission_revision: number }> {
    return this.request('POST', '/missions/dispatch');
  }

  advisory(route: string[]): Promise<Advisory> {
    return this.request('GET', `/advisory?route=${encodeURIComponent(route.join(','))}`);
  }

  leaderboard(n = 10): Promise<{ entries: LeaderboardEntry[] }> {
    return this.request('GET', `/leaderboard?n=${n}`);
  }

  feedback(reportId: number, helpful: boolean): Promise<{ notified: string }> {
    return this.request('POST', '/feedback', { report_id: reportId, helpful });
  }

  status(): Promise<ServiceStatus> {
    return this.request('GET', '/status');
  }
}
