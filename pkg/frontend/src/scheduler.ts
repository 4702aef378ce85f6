/** Frame scheduling locked to the audio clock.
 *
 * The audio element is the single timebase: at media time t the frame
 * on screen is floor(t * fps) clamped to the sequence, so the video
 * can never sit more than half a frame interval from the audio no
 * matter how late or jittery the render ticks arrive. Speed changes
 * slow the media clock itself, which keeps both streams in lockstep;
 * the wall-clock frame rate is fps * speed.
 */

export class FrameScheduler {
  constructor(
    readonly frameCount: number,
    readonly framesPerSecond: number,
  ) {
    if (!Number.isInteger(frameCount) || frameCount < 1) {
      throw new RangeError(`frame count must be a positive integer, got ${frameCount}`);
    }
    if (!(framesPerSecond > 0)) {
      throw new RangeError(`frame rate must be positive, got ${framesPerSecond}`);
    }
  }

  /** Frame index shown at media time t (seconds). */
  frameAt(mediaTime: number): number {
    const raw = Math.floor(mediaTime * this.framesPerSecond);
    return Math.min(Math.max(raw, 0), this.frameCount - 1);
  }

  /** Seconds between media time t and the centre of the frame shown at t. */
  driftAt(mediaTime: number): number {
    const centre = (this.frameAt(mediaTime) + 0.5) / this.framesPerSecond;
    return Math.abs(mediaTime - centre);
  }

  /** Frames traversed per wall-clock second at a playback speed. */
  wallRate(speed: number): number {
    return this.framesPerSecond * speed;
  }
}
