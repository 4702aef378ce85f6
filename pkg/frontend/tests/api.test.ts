import { describe, expect, it } from "vitest";

import { ApiClient, ServiceError, type FetchLike } from "../src/api.js";
import { SecretLeakError } from "../src/guard.js";

interface Captured {
  url: string;
  init: RequestInit | undefined;
}

function fakeFetch(
  handler: (url: string, init?: RequestInit) => Response,
): { fetchFn: FetchLike; calls: Captured[] } {
  const calls: Captured[] = [];
  const fetchFn: FetchLike = (url, init) => {
    calls.push({ url, init });
    return Promise.resolve(handler(url, init));
  };
  return { fetchFn, calls };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

const SUMMARY = {
  session_id: "p01",
  experiment_id: "svc",
  kind: "threshold",
  total: 2,
  completed_count: 0,
  completed: false,
  choices: ["A", "B", "C"],
  speeds: [1.0, 0.5, 0.25],
  max_plays_per_side: 6,
};

describe("api client", () => {
  it("joins urls against the base without doubled slashes", () => {
    const client = new ApiClient("http://host:9/");
    expect(client.url("/session/p01")).toBe("http://host:9/session/p01");
    expect(client.frameUrl("/media/s0000/A/frames", 3)).toBe(
      "http://host:9/media/s0000/A/frames/3",
    );
  });

  it("fetches and types the session summary", async () => {
    const { fetchFn, calls } = fakeFetch(() => jsonResponse(200, SUMMARY));
    const client = new ApiClient("http://host", fetchFn);
    const summary = await client.getSession("p01");
    expect(summary.total).toBe(2);
    expect(summary.speeds).toEqual([1.0, 0.5, 0.25]);
    expect(calls[0]?.url).toBe("http://host/session/p01");
    expect(calls[0]?.init).toBeUndefined();
  });

  it("posts play events as json before anything else happens", async () => {
    const { fetchFn, calls } = fakeFetch(() =>
      jsonResponse(200, { stimulus_id: "s0000", plays: { A: 1, B: 0 } }),
    );
    const client = new ApiClient("http://host", fetchFn);
    const response = await client.postPlay("p01", "s0000", "A", 0.5);
    expect(response.plays).toEqual({ A: 1, B: 0 });
    const init = calls[0]?.init;
    expect(init?.method).toBe("POST");
    expect(init?.headers).toEqual({ "content-type": "application/json" });
    expect(JSON.parse(String(init?.body))).toEqual({
      stimulus_id: "s0000",
      side: "A",
      speed: 0.5,
    });
  });

  it("posts judgments and returns the refreshed summary", async () => {
    const { fetchFn, calls } = fakeFetch(() =>
      jsonResponse(200, { ...SUMMARY, completed_count: 1 }),
    );
    const client = new ApiClient("http://host", fetchFn);
    const summary = await client.postJudgment("p01", "s0000", "C");
    expect(summary.completed_count).toBe(1);
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({
      stimulus_id: "s0000",
      choice: "C",
    });
  });

  it("maps service error bodies onto ServiceError", async () => {
    const { fetchFn } = fakeFetch(() =>
      jsonResponse(409, { error: "LimitError", detail: "side A has used all 6 plays" }),
    );
    const client = new ApiClient("http://host", fetchFn);
    const err = await client.postPlay("p01", "s0000", "A", 1.0).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ServiceError);
    const service = err as ServiceError;
    expect(service.status).toBe(409);
    expect(service.errorName).toBe("LimitError");
    expect(service.detail).toBe("side A has used all 6 plays");
  });

  it("keeps bare http errors readable when the body is not json", async () => {
    const { fetchFn } = fakeFetch(
      () => new Response("boom", { status: 500, statusText: "Internal Server Error" }),
    );
    const client = new ApiClient("http://host", fetchFn);
    const err = await client.getSession("p01").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ServiceError);
    const service = err as ServiceError;
    expect(service.status).toBe(500);
    expect(service.errorName).toBe("HTTPError");
    expect(service.detail).toContain("500");
  });

  it("stringifies structured validation details", async () => {
    const body = { detail: [{ loc: ["body", "speed"], msg: "Input should be a number" }] };
    const { fetchFn } = fakeFetch(() => jsonResponse(422, body));
    const client = new ApiClient("http://host", fetchFn);
    const err = await client.getSession("p01").catch((e: unknown) => e);
    expect((err as ServiceError).detail).toContain("Input should be a number");
  });

  it("refuses payloads that leak answer fields", async () => {
    const { fetchFn } = fakeFetch(() =>
      jsonResponse(200, { ...SUMMARY, correct_side: "A" }),
    );
    const client = new ApiClient("http://host", fetchFn);
    await expect(client.getSession("p01")).rejects.toThrow(SecretLeakError);
  });
});
