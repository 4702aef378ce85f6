/** Browser media pipeline: prefetch, then audio-clocked frame drawing.
 *
 * Every frame image is fetched and decoded before play controls
 * unlock, so the only thing that buffers during playback is the audio
 * element. While audio runs, a requestAnimationFrame loop asks the
 * scheduler which frame the audio clock has reached and blits it; no
 * independent video timer exists, so rate changes cannot desynchronise
 * the streams.
 */

import { ApiClient } from "./api.js";
import { FrameScheduler } from "./scheduler.js";
import type { SideManifest, SideMedia } from "./types.js";

export interface LoadedSide {
  manifest: SideManifest;
  frames: ImageBitmap[];
  audioUrl: string;
}

export async function loadSide(api: ApiClient, media: SideMedia): Promise<LoadedSide> {
  const manifest = await api.getManifest(media.manifest);
  const frames: ImageBitmap[] = [];
  for (let n = 0; n < manifest.frame_count; n++) {
    const response = await fetch(api.frameUrl(media.frames, n));
    if (!response.ok) {
      throw new Error(`frame ${n} failed with status ${response.status}`);
    }
    frames.push(await createImageBitmap(await response.blob()));
  }
  return { manifest, frames, audioUrl: api.url(media.audio) };
}

export function drawFrame(
  side: LoadedSide,
  canvas: HTMLCanvasElement,
  index: number,
): void {
  const context = canvas.getContext("2d");
  if (context === null) {
    throw new Error("canvas 2d context unavailable");
  }
  const frame = side.frames[index];
  if (frame === undefined) {
    throw new Error(`frame ${index} not loaded`);
  }
  context.drawImage(frame, 0, 0, canvas.width, canvas.height);
}

/** Plays one side to completion; resolves when the audio ends. */
export function playSide(
  side: LoadedSide,
  canvas: HTMLCanvasElement,
  speed: number,
): Promise<void> {
  const scheduler = new FrameScheduler(
    side.manifest.frame_count,
    side.manifest.frames_per_second,
  );
  const audio = new Audio(side.audioUrl);
  audio.playbackRate = speed;
  // Slowed audio must stay raw; pitch correction would mask asynchrony.
  audio.preservesPitch = false;
  return new Promise((resolve, reject) => {
    let rafId = 0;
    const draw = (): void => {
      drawFrame(side, canvas, scheduler.frameAt(audio.currentTime));
      rafId = requestAnimationFrame(draw);
    };
    audio.addEventListener("ended", () => {
      cancelAnimationFrame(rafId);
      drawFrame(side, canvas, side.manifest.frame_count - 1);
      resolve();
    });
    audio.addEventListener("error", () => {
      cancelAnimationFrame(rafId);
      reject(new Error("audio playback failed"));
    });
    audio.play().then(() => {
      rafId = requestAnimationFrame(draw);
    }, reject);
  });
}
