/** Participant page: the session flow wired to a two-panel layout.
 *
 * Video A sits above Video B with identical controls. Play buttons
 * stay disabled until both sides' media are fully prefetched; choice
 * buttons unlock only once both sides have played at least once; the
 * completion screen shows progress and nothing else.
 */

import { ApiClient } from "./api.js";
import { drawFrame, loadSide, playSide, type LoadedSide } from "./player.js";
import { SessionFlow } from "./session.js";
import type { Side, Stimulus } from "./types.js";

const SIDES: readonly Side[] = ["A", "B"];
const CHOICE_LABELS: Record<string, string> = {
  A: "Video A",
  B: "Video B",
  C: "No perceived difference",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className !== undefined) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

class Page {
  private readonly flow: SessionFlow;
  private readonly canvases: Record<Side, HTMLCanvasElement>;
  private loaded: Partial<Record<Side, LoadedSide>> = {};
  private loadedFor: string | null = null;
  private prefetching = false;

  constructor(
    private readonly app: HTMLElement,
    private readonly api: ApiClient,
    sessionId: string,
  ) {
    this.canvases = { A: el("canvas"), B: el("canvas") };
    this.flow = new SessionFlow(api, sessionId, (stimulus, side, speed) =>
      this.runMedia(stimulus, side, speed),
    );
  }

  async start(): Promise<void> {
    this.render();
    await this.flow.load();
    await this.prefetch();
    this.render();
  }

  private async runMedia(stimulus: Stimulus, side: Side, speed: number): Promise<void> {
    const media = this.loaded[side];
    if (media === undefined || this.loadedFor !== stimulus.stimulus_id) {
      throw new Error("media not prefetched");
    }
    this.render();
    await playSide(media, this.canvases[side], speed);
  }

  /** Both sides' manifests and frames load before play unlocks. */
  private async prefetch(): Promise<void> {
    const stimulus = this.flow.stimulus;
    if (stimulus === null || this.loadedFor === stimulus.stimulus_id) {
      return;
    }
    this.prefetching = true;
    this.render();
    const [a, b] = await Promise.all([
      loadSide(this.api, stimulus.media.A),
      loadSide(this.api, stimulus.media.B),
    ]);
    this.loaded = { A: a, B: b };
    this.loadedFor = stimulus.stimulus_id;
    for (const side of SIDES) {
      const loaded = side === "A" ? a : b;
      this.canvases[side].width = loaded.manifest.frame_width;
      this.canvases[side].height = loaded.manifest.frame_height;
      drawFrame(loaded, this.canvases[side], 0);
    }
    this.prefetching = false;
  }

  private async onPlay(side: Side, speed: number): Promise<void> {
    await this.flow.play(side, speed);
    this.render();
  }

  private async onChoose(choice: string): Promise<void> {
    await this.flow.submit(choice);
    await this.prefetch();
    this.render();
  }

  private render(): void {
    const { flow } = this;
    this.app.replaceChildren();
    this.app.append(el("h1", undefined, "Synchrony judgment"));
    this.app.append(el("p", "progress", flow.progress()));
    if (flow.phase === "loading") {
      this.app.append(el("p", undefined, "Loading session..."));
      return;
    }
    if (flow.phase === "completed") {
      return;
    }
    const stimulus = flow.stimulus;
    const playback = flow.playback;
    if (stimulus === null || playback === null) {
      return;
    }
    if (this.prefetching) {
      this.app.append(el("p", undefined, "Fetching media..."));
    }
    for (const side of SIDES) {
      const panel = el("section", "side");
      panel.append(el("h2", undefined, `Video ${side}`));
      panel.append(this.canvases[side]);
      const controls = el("div", "controls");
      for (const speed of playback.speeds) {
        const button = el("button", undefined, speed === 1 ? "Play" : `Play at ${speed}x`);
        button.disabled = this.prefetching || !playback.canPlay(side);
        button.addEventListener("click", () => {
          void this.onPlay(side, speed);
        });
        controls.append(button);
      }
      const left = playback.maxPlaysPerSide - playback.playCount(side);
      controls.append(el("span", "plays-left", `${left} plays left`));
      panel.append(controls);
      this.app.append(panel);
    }
    this.app.append(
      el(
        "p",
        undefined,
        flow.summary?.kind === "preference"
          ? "Choose the video whose audio and tongue motion line up better."
          : "Choose the video whose audio and tongue motion line up better, or report no difference.",
      ),
    );
    const choices = el("div", "choices");
    for (const choice of stimulus.choices) {
      const button = el("button", undefined, CHOICE_LABELS[choice] ?? choice);
      button.disabled = this.prefetching || !playback.judgmentReady();
      button.addEventListener("click", () => {
        void this.onChoose(choice);
      });
      choices.append(button);
    }
    this.app.append(choices);
    if (flow.notice !== null) {
      this.app.append(el("p", "notice", flow.notice));
    }
  }
}

function boot(): void {
  const app = document.getElementById("app");
  if (app === null) {
    return;
  }
  const query = new URLSearchParams(window.location.search);
  const sessionId = query.get("session");
  if (sessionId === null || sessionId === "") {
    app.textContent = "Missing session: open this page as ?session=<participant id>.";
    return;
  }
  const apiBase = query.get("api") ?? window.location.origin;
  const page = new Page(app, new ApiClient(apiBase), sessionId);
  page.start().catch((err: unknown) => {
    app.textContent = `Session failed to load: ${String(err)}`;
  });
}

boot();
