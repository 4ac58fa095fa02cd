/**
 * Studio state: parameters with client-side validation mirroring the API
 * bounds, badge formatting straight from API numbers, and the iterate mode
 * that feeds a selected result back as the prior for masked regeneration.
 */
import { cloneLayers, createLayers, type SketchLayers } from './layers';
import type { JobResult } from './types';

export interface StudioParams {
  volumeFraction: number;
  loadAngleDeg: number;
  strength: number;
  batchCount: number;
  backend: 'simp' | 'remote';
  seed: number | null;
}

export const DEFAULT_PARAMS: StudioParams = {
  volumeFraction: 0.2,
  loadAngleDeg: 270,
  strength: 0.7,
  batchCount: 1,
  backend: 'simp',
  seed: null,
};

/** Same bounds the server enforces; returns one message per offending field. */
export function validateParams(params: StudioParams): string[] {
  const errors: string[] = [];
  if (!(params.volumeFraction > 0 && params.volumeFraction <= 1)) {
    errors.push('volume_fraction: must be in (0, 1]');
  }
  if (!Number.isFinite(params.loadAngleDeg)) {
    errors.push('load_angle_deg: must be a number');
  }
  if (!(params.strength >= 0 && params.strength <= 1)) {
    errors.push('strength: must be in [0, 1]');
  }
  if (!(Number.isInteger(params.batchCount) && params.batchCount >= 1 && params.batchCount <= 64)) {
    errors.push('batch_count: must be an integer in [1, 64]');
  }
  if (params.seed !== null && !Number.isInteger(params.seed)) {
    errors.push('seed: must be an integer or empty');
  }
  return errors;
}

export interface Badges {
  compliance: string;
  vf: string;
}

/** Badge strings come from the API numbers verbatim, never recomputed. */
export function formatBadges(result: JobResult): Badges {
  const compliance = result.compliance === null ? 'compliance ∞' : `compliance ${result.compliance.toFixed(2)}`;
  const vf =
    result.vf_editable_pct === null || result.vf_editable_pct === undefined
      ? `vf ${result.vf_global_pct.toFixed(2)}%`
      : `vf ${result.vf_global_pct.toFixed(2)}% (editable ${result.vf_editable_pct.toFixed(2)}%)`;
  return { compliance, vf };
}

export type StudioMode = { kind: 'fresh' } | { kind: 'iterate'; prior: JobResult };

export interface StudioState {
  layers: SketchLayers;
  params: StudioParams;
  mode: StudioMode;
  activeJobId: string | null;
  gallery: JobResult[];
}

export function createState(grid?: number): StudioState {
  return {
    layers: createLayers(grid),
    params: { ...DEFAULT_PARAMS },
    mode: { kind: 'fresh' },
    activeJobId: null,
    gallery: [],
  };
}

/**
 * Select a result as the prior: mask brushing then restricts regeneration to
 * the masked region while unmasked cells keep the prior's densities. The
 * previous mask is cleared; material and constraint layers are preserved.
 */
export function enterIterate(state: StudioState, prior: JobResult): StudioState {
  const layers = cloneLayers(state.layers);
  layers.mask.fill(0);
  return { ...state, layers, mode: { kind: 'iterate', prior } };
}

/** Back to fresh-sketch mode; layers stay as drawn. */
export function clearIterate(state: StudioState): StudioState {
  return { ...state, mode: { kind: 'fresh' } };
}

export interface JobPayload {
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

export function buildJobPayload(
  state: StudioState,
  sketchB64: string,
  maskB64: string | null,
): JobPayload {
  return {
    sketch_png_b64: sketchB64,
    mask_png_b64: maskB64,
    prior_png_b64: state.mode.kind === 'iterate' ? state.mode.prior.structure_png_b64 : null,
    volume_fraction: state.params.volumeFraction,
    load_angle_deg: state.params.loadAngleDeg,
    strength: state.params.strength,
    backend: state.params.backend,
    batch_count: state.params.batchCount,
    seed: state.params.seed,
  };
}
