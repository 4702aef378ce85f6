/** Typed client for the participant HTTP surface.
 *
 * Every JSON response is passed through the payload guard before it is
 * returned, so callers only ever see answer-free data. Error responses
 * become ServiceError carrying the status and the service's error
 * class name ({error, detail} bodies) or the bare HTTP detail.
 */

import { assertParticipantSafe } from "./guard.js";
import type {
  NextResponse,
  PlayResponse,
  SessionSummary,
  Side,
  SideManifest,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    readonly detail: string,
  ) {
    super(`${errorName}: ${detail}`);
  }
}

/** The four participant routes; the concrete client implements them. */
export interface ParticipantApi {
  getSession(sessionId: string): Promise<SessionSummary>;
  getNext(sessionId: string): Promise<NextResponse>;
  postPlay(
    sessionId: string,
    stimulusId: string,
    side: Side,
    speed: number,
  ): Promise<PlayResponse>;
  postJudgment(
    sessionId: string,
    stimulusId: string,
    choice: string,
  ): Promise<SessionSummary>;
}

export class ApiClient implements ParticipantApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  frameUrl(framesPath: string, n: number): string {
    return this.url(`${framesPath}/${n}`);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.url(path), init);
    if (!response.ok) {
      let name = "HTTPError";
      let detail = `${response.status} ${response.statusText}`;
      try {
        const body: unknown = await response.json();
        if (typeof body === "object" && body !== null) {
          const record = body as Record<string, unknown>;
          if (typeof record.error === "string") name = record.error;
          if (record.detail !== undefined) {
            detail =
              typeof record.detail === "string"
                ? record.detail
                : JSON.stringify(record.detail);
          }
        }
      } catch {
        // non-JSON body: keep the status line
      }
      throw new ServiceError(response.status, name, detail);
    }
    const payload = (await response.json()) as T;
    assertParticipantSafe(payload, path);
    return payload;
  }

  getSession(sessionId: string): Promise<SessionSummary> {
    return this.request(`/session/${sessionId}`);
  }

  getNext(sessionId: string): Promise<NextResponse> {
    return this.request(`/session/${sessionId}/next`);
  }

  postPlay(
    sessionId: string,
    stimulusId: string,
    side: Side,
    speed: number,
  ): Promise<PlayResponse> {
    return this.request(`/session/${sessionId}/play`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ stimulus_id: stimulusId, side, speed }),
    });
  }

  postJudgment(
    sessionId: string,
    stimulusId: string,
    choice: string,
  ): Promise<SessionSummary> {
    return this.request(`/session/${sessionId}/judgment`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ stimulus_id: stimulusId, choice }),
    });
  }

  getManifest(manifestPath: string): Promise<SideManifest> {
    return this.request(manifestPath);
  }
}
