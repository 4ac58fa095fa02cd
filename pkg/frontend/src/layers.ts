/**
 * Layered sketch model on the element grid.
 *
 * Three layers stack above the background: material, constraints (loads and
 * pins), and the mask, which always renders and exports on top. The canvas
 * is a fixed integer multiple of the grid and brushes snap to elements, so
 * the exported PNG (one pixel per element) classifies losslessly on the
 * server. Brush colors are never hard-coded here; they come from the
 * palette endpoint.
 */
import { encodeGrayPng, encodeRgbaPng } from './png';
import type { PaletteCode, Role } from './types';

export const GRID = 64; // elements per side
export const CELL_PX = 8; // canvas pixels per element (512x512 canvas)

export type BrushRole = 'material' | 'load' | 'fix_x' | 'fix_y' | 'fix_xy' | 'mask' | 'eraser';

/** Constraint codes stored per cell; 0 = none. */
const CONSTRAINT_CODES: Partial<Record<Role, number>> = { load: 1, fix_x: 2, fix_y: 3, fix_xy: 4 };
const CODE_ROLES: Role[] = ['background', 'load', 'fix_x', 'fix_y', 'fix_xy'];

export interface SketchLayers {
  grid: number;
  material: Uint8Array; // 0/1 per cell
  constraints: Uint8Array; // CONSTRAINT_CODES per cell
  mask: Uint8Array; // 0/1 per cell
}

export function createLayers(grid: number = GRID): SketchLayers {
  return {
    grid,
    material: new Uint8Array(grid * grid),
    constraints: new Uint8Array(grid * grid),
    mask: new Uint8Array(grid * grid),
  };
}

export function cloneLayers(layers: SketchLayers): SketchLayers {
  return {
    grid: layers.grid,
    material: layers.material.slice(),
    constraints: layers.constraints.slice(),
    mask: layers.mask.slice(),
  };
}

/**
 * Apply one brush dab centered on cell (cx, cy); cy counts from the top of
 * the canvas. Area brushes (material, mask, eraser) cover size x size cells;
 * point brushes (load, pins) snap to the single cell.
 */
export function applyBrush(
  layers: SketchLayers,
  role: BrushRole,
  cx: number,
  cy: number,
  size = 1,
): void {
  const point = role === 'load' || role === 'fix_x' || role === 'fix_y' || role === 'fix_xy';
  const reach = point ? 0 : Math.max(0, Math.floor(size / 2));
  for (let dy = -reach; dy <= reach; dy++) {
    for (let dx = -reach; dx <= reach; dx++) {
      const x = cx + dx;
      const y = cy + dy;
      if (x < 0 || y < 0 || x >= layers.grid || y >= layers.grid) continue;
      const at = y * layers.grid + x;
      switch (role) {
        case 'material':
          layers.material[at] = 1;
          break;
        case 'mask':
          layers.mask[at] = 1;
          break;
        case 'eraser':
          layers.material[at] = 0;
          layers.constraints[at] = 0;
          layers.mask[at] = 0;
          break;
        default:
          layers.constraints[at] = CONSTRAINT_CODES[role] ?? 0;
          layers.material[at] = 1; // constraint marks imply material underneath
      }
    }
  }
}

/** Per-cell role after flattening: mask > constraints > material > background. */
export function flattenRoles(layers: SketchLayers): Role[] {
  const out: Role[] = new Array(layers.grid * layers.grid);
  for (let at = 0; at < out.length; at++) {
    if (layers.mask[at]) out[at] = 'mask';
    else if (layers.constraints[at]) out[at] = CODE_ROLES[layers.constraints[at]];
    else if (layers.material[at]) out[at] = 'material';
    else out[at] = 'background';
  }
  return out;
}

export function paletteColor(palette: PaletteCode[], role: Role): [number, number, number, number] {
  const code = palette.find((c) => c.role === role);
  if (!code) throw new Error(`palette has no color for role ${role}`);
  return code.rgba;
}

/** Flatten to an RGBA buffer, one pixel per cell, colors from the palette. */
export function flattenRgba(layers: SketchLayers, palette: PaletteCode[]): Uint8Array {
  const roles = flattenRoles(layers);
  const out = new Uint8Array(roles.length * 4);
  for (let at = 0; at < roles.length; at++) {
    const [r, g, b, a] = paletteColor(palette, roles[at]);
    out[at * 4] = r;
    out[at * 4 + 1] = g;
    out[at * 4 + 2] = b;
    out[at * 4 + 3] = a;
  }
  return out;
}

export interface SketchExport {
  png: Uint8Array | null;
  warnings: string[];
}

/** Flattened sketch PNG; an empty material layer blocks submission. */
export function exportSketchPng(layers: SketchLayers, palette: PaletteCode[]): SketchExport {
  if (!layers.material.some((v) => v !== 0)) {
    return { png: null, warnings: ['EmptyCanvas: draw the material region before generating'] };
  }
  return { png: encodeRgbaPng(layers.grid, layers.grid, flattenRgba(layers, palette)), warnings: [] };
}

/** Grayscale mask PNG (255 = editable), or null when nothing is masked. */
export function exportMaskPng(layers: SketchLayers): Uint8Array | null {
  if (!layers.mask.some((v) => v !== 0)) return null;
  const gray = new Uint8Array(layers.grid * layers.grid);
  for (let at = 0; at < gray.length; at++) gray[at] = layers.mask[at] ? 255 : 0;
  return encodeGrayPng(layers.grid, layers.grid, gray);
}
