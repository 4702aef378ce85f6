/** Client-side playback rules for the current stimulus.
 *
 * Mirrors the service constraints so violations never leave the page:
 * a fixed play budget per side, one active playback at a time with no
 * pausing, and a judgment only once both sides have played. The
 * service stays authoritative; counts are replaced from every play
 * response and survive a page reload through the session summary.
 */

import type { Side } from "./types.js";

export class PlaybackRuleError extends Error {}

export class PlaybackState {
  private counts: Record<Side, number>;
  private active: { side: Side; speed: number } | null = null;

  constructor(
    readonly speeds: readonly number[],
    readonly maxPlaysPerSide: number,
    initialCounts: Record<Side, number>,
  ) {
    this.counts = { ...initialCounts };
  }

  playCount(side: Side): number {
    return this.counts[side];
  }

  get playing(): { side: Side; speed: number } | null {
    return this.active;
  }

  /** Why playing this side is unavailable, or null if it is allowed. */
  playBlock(side: Side): string | null {
    if (this.active !== null) {
      return "playback in progress";
    }
    if (this.counts[side] >= this.maxPlaysPerSide) {
      return `side ${side} has used all ${this.maxPlaysPerSide} plays`;
    }
    return null;
  }

  canPlay(side: Side): boolean {
    return this.playBlock(side) === null;
  }

  beginPlay(side: Side, speed: number): void {
    if (!this.speeds.includes(speed)) {
      throw new PlaybackRuleError(`speed ${speed} not in ${this.speeds.join(", ")}`);
    }
    const block = this.playBlock(side);
    if (block !== null) {
      throw new PlaybackRuleError(block);
    }
    this.active = { side, speed };
  }

  /** A playback runs to completion; there is no pause. */
  endPlay(): void {
    if (this.active === null) {
      throw new PlaybackRuleError("no playback in progress");
    }
    this.active = null;
  }

  /** Counts from a play response or session reload replace local ones. */
  setCounts(counts: Record<Side, number>): void {
    this.counts = { ...counts };
  }

  /** Why judging is unavailable, or null if it is allowed. */
  judgmentBlock(): string | null {
    if (this.active !== null) {
      return "wait for playback to finish";
    }
    if (this.counts.A < 1 || this.counts.B < 1) {
      return "play both sides at least once before choosing";
    }
    return null;
  }

  judgmentReady(): boolean {
    return this.judgmentBlock() === null;
  }
}
