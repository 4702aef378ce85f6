/** Payload shapes of the participant-facing HTTP surface. */

export type Side = "A" | "B";

export interface SideMedia {
  manifest: string;
  audio: string;
  frames: string;
}

export interface SideManifest {
  stimulus_id: string;
  side: Side;
  frame_count: number;
  frames_per_second: number;
  frame_height: number;
  frame_width: number;
  sample_rate: number;
  duration_seconds: number;
}

export interface SessionSummary {
  session_id: string;
  experiment_id: string;
  kind: "threshold" | "preference";
  total: number;
  completed_count: number;
  completed: boolean;
  choices: string[];
  speeds: number[];
  max_plays_per_side: number;
}

export interface Stimulus {
  stimulus_id: string;
  index: number;
  total: number;
  choices: string[];
  speeds: number[];
  max_plays_per_side: number;
  plays: Record<Side, number>;
  media: Record<Side, SideMedia>;
}

export interface NextResponse {
  completed: boolean;
  stimulus: Stimulus | null;
}

export interface PlayResponse {
  stimulus_id: string;
  plays: Record<Side, number>;
}
