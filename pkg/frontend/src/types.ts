/** Wire types for the generation service API. */

export type Role =
  | 'material'
  | 'load'
  | 'fix_x'
  | 'fix_y'
  | 'fix_xy'
  | 'mask'
  | 'background';

export interface PaletteCode {
  role: Role;
  rgba: [number, number, number, number];
  tolerance: number;
  ignore_alpha: boolean;
}

export interface JobRequest {
  sketch_png_b64: string;
  mask_png_b64: string | null;
  prior_png_b64: string | null;
  volume_fraction: number;
  load_angle_deg: number;
  strength: number;
  backend: 'simp' | 'remote';
  batch_count: number;
  seed: number | null;
}

export interface JobResult {
  structure_png_b64: string;
  compliance: number | null; // null marks an unsolvable / no-load-path structure
  vf_global_pct: number;
  vf_editable_pct: number | null;
  seed?: number | null;
  converged?: boolean;
  iterations?: number;
  diagnostics?: string[];
}

export type JobState = 'queued' | 'running' | 'done' | 'failed';

export interface JobStatus {
  job_id: string;
  state: JobState;
  results: JobResult[];
  error: string | null;
}
