import { describe, expect, it } from "vitest";

import {
  FORBIDDEN_PAYLOAD_TERMS,
  SecretLeakError,
  assertParticipantSafe,
} from "../src/guard.js";

const CLEAN_SUMMARY = {
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

const CLEAN_NEXT = {
  completed: false,
  stimulus: {
    stimulus_id: "s0000",
    index: 0,
    total: 2,
    choices: ["A", "B", "C"],
    speeds: [1.0, 0.5, 0.25],
    max_plays_per_side: 6,
    plays: { A: 0, B: 0 },
    media: {
      A: {
        manifest: "/media/s0000/A/manifest",
        audio: "/media/s0000/A/audio",
        frames: "/media/s0000/A/frames",
      },
      B: {
        manifest: "/media/s0000/B/manifest",
        audio: "/media/s0000/B/audio",
        frames: "/media/s0000/B/frames",
      },
    },
  },
};

const CLEAN_MANIFEST = {
  stimulus_id: "s0000",
  side: "A",
  frame_count: 24,
  frames_per_second: 24.0,
  frame_height: 240,
  frame_width: 320,
  sample_rate: 16000.0,
  duration_seconds: 1.0,
};

describe("participant payload guard", () => {
  it("covers exactly the answer-bearing field names", () => {
    expect([...FORBIDDEN_PAYLOAD_TERMS]).toEqual([
      "offset",
      "correct_side",
      "provenance",
      "error_ms",
      "model_side",
      "utterance",
    ]);
  });

  it("accepts the payloads the service actually sends", () => {
    for (const payload of [CLEAN_SUMMARY, CLEAN_NEXT, CLEAN_MANIFEST]) {
      expect(() => assertParticipantSafe(payload, "test")).not.toThrow();
    }
  });

  it("rejects each forbidden term wherever it hides", () => {
    const poisoned: unknown[] = [
      { ...CLEAN_SUMMARY, side_a_offset: 45.0 },
      { ...CLEAN_MANIFEST, correct_side: "A" },
      { completed: false, stimulus: { nested: [{ provenance: "threshold-error" }] } },
      { ...CLEAN_SUMMARY, extra: { error_ms: -305.0 } },
      { ...CLEAN_NEXT, model_side: "B" },
      { ...CLEAN_MANIFEST, utterance_id: "utt001A" },
    ];
    for (const payload of poisoned) {
      expect(() => assertParticipantSafe(payload, "test")).toThrow(SecretLeakError);
    }
  });

  it("rejects terms leaking through values, keys and case", () => {
    expect(() =>
      assertParticipantSafe({ note: "the B side OFFSET is 45ms" }, "test"),
    ).toThrow(SecretLeakError);
    expect(() => assertParticipantSafe({ Correct_Side: "A" }, "test")).toThrow(
      SecretLeakError,
    );
  });

  it("names the context and the leaked term in the error", () => {
    expect(() => assertParticipantSafe({ error_ms: 1 }, "/session/p01")).toThrow(
      /\/session\/p01.*error_ms/,
    );
  });
});
