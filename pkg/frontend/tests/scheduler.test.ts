import { describe, expect, it } from "vitest";

import { FrameScheduler } from "../src/scheduler.js";

const FPS = 24.0;
const SPEEDS = [1.0, 0.5, 0.25];

describe("frame scheduler", () => {
  it("rejects degenerate sequences", () => {
    expect(() => new FrameScheduler(0, FPS)).toThrow(RangeError);
    expect(() => new FrameScheduler(2.5, FPS)).toThrow(RangeError);
    expect(() => new FrameScheduler(10, 0)).toThrow(RangeError);
  });

  it("clamps the cursor to the sequence", () => {
    const scheduler = new FrameScheduler(240, FPS);
    expect(scheduler.frameAt(-0.5)).toBe(0);
    expect(scheduler.frameAt(0)).toBe(0);
    expect(scheduler.frameAt(10.0)).toBe(239);
    expect(scheduler.frameAt(99.0)).toBe(239);
  });

  it("keeps video within half a frame of the audio clock at every speed", () => {
    // A 10 s stimulus at 24 fps, sampled at a jittery ~120 Hz wall
    // clock. The audio element is the timebase: media time advances at
    // wall * speed, and the shown frame must never sit 21 ms or more
    // from that clock.
    const durationSeconds = 10.0;
    const scheduler = new FrameScheduler(240, FPS);
    for (const speed of SPEEDS) {
      const wallEnd = durationSeconds / speed;
      let wall = 0.0;
      let previous = -1;
      let ticks = 0;
      for (let i = 0; wall <= wallEnd; i++) {
        const mediaTime = Math.min(wall * speed, durationSeconds);
        const frame = scheduler.frameAt(mediaTime);
        expect(frame).toBeGreaterThanOrEqual(previous);
        previous = frame;
        const driftMs = scheduler.driftAt(mediaTime) * 1000.0;
        expect(driftMs).toBeLessThan(21.0);
        wall += 1 / 120 + ((i % 7) - 3) * 1e-4;
        ticks++;
      }
      expect(previous).toBe(239);
      expect(ticks).toBeGreaterThan(1000);
    }
  });

  it("slows the wall-clock frame rate with the audio, not separately", () => {
    const scheduler = new FrameScheduler(240, FPS);
    // At quarter speed one wall second advances media time by 0.25 s,
    // i.e. six frames of a 24 fps sequence.
    expect(scheduler.wallRate(0.25)).toBe(6);
    expect(scheduler.frameAt(1.0 * 0.25)).toBe(6);
    expect(scheduler.wallRate(0.5)).toBe(12);
    expect(scheduler.wallRate(1.0)).toBe(24);
  });

  it("steps through every frame exactly once under a fine clock", () => {
    const scheduler = new FrameScheduler(48, FPS);
    const seen = new Set<number>();
    for (let t = 0; t < 2.0; t += 1 / 960) {
      seen.add(scheduler.frameAt(t));
    }
    expect(seen.size).toBe(48);
  });
});
