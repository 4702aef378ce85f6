/** Session orchestration over the participant API.
 *
 * Progress and play counts live on the server: reloading the page and
 * calling load() again restores exactly where the participant was.
 * Every play is recorded server-side before any media starts, so a
 * rejected or lost request means nothing played and the participant
 * simply tries again. Responses never carry correctness, so the only
 * feedback this flow can surface is progress.
 */

import { ServiceError, type ParticipantApi } from "./api.js";
import { PlaybackState } from "./playback.js";
import type { SessionSummary, Side, Stimulus } from "./types.js";

/** Runs the actual media for one side to completion. */
export type MediaRunner = (
  stimulus: Stimulus,
  side: Side,
  speed: number,
) => Promise<void>;

export type Phase = "loading" | "ready" | "playing" | "submitting" | "completed";

export class SessionFlow {
  phase: Phase = "loading";
  summary: SessionSummary | null = null;
  stimulus: Stimulus | null = null;
  playback: PlaybackState | null = null;
  notice: string | null = null;

  constructor(
    private readonly api: ParticipantApi,
    readonly sessionId: string,
    private readonly runMedia: MediaRunner,
  ) {}

  async load(): Promise<void> {
    this.summary = await this.api.getSession(this.sessionId);
    await this.advance();
  }

  /** Pulls the next stimulus, or completion, from the server. */
  private async advance(): Promise<void> {
    const next = await this.api.getNext(this.sessionId);
    if (next.completed || next.stimulus === null) {
      this.stimulus = null;
      this.playback = null;
      this.phase = "completed";
      return;
    }
    this.stimulus = next.stimulus;
    this.playback = new PlaybackState(
      next.stimulus.speeds,
      next.stimulus.max_plays_per_side,
      next.stimulus.plays,
    );
    this.phase = "ready";
  }

  /** Records the play server-side, then runs the media to completion. */
  async play(side: Side, speed: number): Promise<void> {
    if (this.phase !== "ready" || this.stimulus === null || this.playback === null) {
      this.notice = "not ready to play";
      return;
    }
    const block = this.playback.playBlock(side);
    if (block !== null) {
      this.notice = block;
      return;
    }
    if (!this.playback.speeds.includes(speed)) {
      this.notice = `speed ${speed} is not offered`;
      return;
    }
    // Entering the playing phase now closes the reentry window while
    // the request is in flight; a second click is turned away above.
    this.phase = "playing";
    let response;
    try {
      response = await this.api.postPlay(
        this.sessionId,
        this.stimulus.stimulus_id,
        side,
        speed,
      );
    } catch (err) {
      this.phase = "ready";
      if (err instanceof ServiceError) {
        // The service refused: resync local state to its view.
        this.notice = err.detail;
        await this.advance();
      } else {
        // The request never landed, so nothing was consumed.
        this.notice = `play not recorded, try again (${String(err)})`;
      }
      return;
    }
    // Begin against the counts the entry check approved; the response
    // counts already include this play and would exhaust the budget.
    this.playback.beginPlay(side, speed);
    this.playback.setCounts(response.plays);
    this.notice = null;
    try {
      await this.runMedia(this.stimulus, side, speed);
    } finally {
      this.playback.endPlay();
      this.phase = "ready";
    }
  }

  async submit(choice: string): Promise<void> {
    if (this.phase !== "ready" || this.stimulus === null || this.playback === null) {
      this.notice = "not ready to judge";
      return;
    }
    const block = this.playback.judgmentBlock();
    if (block !== null) {
      this.notice = block;
      return;
    }
    if (!this.stimulus.choices.includes(choice)) {
      this.notice = `choice ${choice} is not offered`;
      return;
    }
    this.phase = "submitting";
    try {
      this.summary = await this.api.postJudgment(
        this.sessionId,
        this.stimulus.stimulus_id,
        choice,
      );
    } catch (err) {
      this.phase = "ready";
      if (err instanceof ServiceError) {
        this.notice = err.detail;
        await this.advance();
      } else {
        this.notice = `judgment not recorded, try again (${String(err)})`;
      }
      return;
    }
    this.notice = null;
    await this.advance();
  }

  /** Progress is the only feedback a participant ever sees. */
  progress(): string {
    if (this.summary === null) {
      return "";
    }
    if (this.phase === "completed" || this.summary.completed) {
      return `All ${this.summary.total} stimuli judged. Thank you!`;
    }
    const shown =
      this.stimulus !== null ? this.stimulus.index + 1 : this.summary.completed_count + 1;
    return `Stimulus ${shown} of ${this.summary.total}`;
  }
}
