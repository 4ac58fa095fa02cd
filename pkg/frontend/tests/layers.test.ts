import { describe, expect, it } from 'vitest';

import {
  applyBrush,
  createLayers,
  exportMaskPng,
  exportSketchPng,
  flattenRgba,
  flattenRoles,
} from '../src/layers';
import type { PaletteCode } from '../src/types';
import { decodePng } from './pngDecode';

// colors as served by /api/palette; tests must not invent their own values
const PALETTE: PaletteCode[] = [
  { role: 'material', rgba: [0, 0, 0, 255], tolerance: 30, ignore_alpha: false },
  { role: 'load', rgba: [255, 0, 0, 255], tolerance: 30, ignore_alpha: false },
  { role: 'fix_x', rgba: [255, 255, 0, 255], tolerance: 30, ignore_alpha: false },
  { role: 'fix_y', rgba: [0, 0, 255, 255], tolerance: 30, ignore_alpha: false },
  { role: 'fix_xy', rgba: [0, 255, 0, 255], tolerance: 30, ignore_alpha: false },
  { role: 'mask', rgba: [0, 127, 255, 160], tolerance: 30, ignore_alpha: true },
  { role: 'background', rgba: [255, 255, 255, 255], tolerance: 30, ignore_alpha: false },
];

const at = (grid: number, x: number, y: number) => y * grid + x;

describe('layer flattening', () => {
  it('starts as all background', () => {
    const layers = createLayers(8);
    expect(new Set(flattenRoles(layers))).toEqual(new Set(['background']));
  });

  it('area brush paints a block, point brushes snap to one cell', () => {
    const layers = createLayers(16);
    applyBrush(layers, 'material', 8, 8, 5);
    applyBrush(layers, 'load', 3, 3, 5); // size ignored for point brushes
    const roles = flattenRoles(layers);
    expect(roles[at(16, 8, 8)]).toBe('material');
    expect(roles[at(16, 6, 6)]).toBe('material');
    expect(roles[at(16, 3, 3)]).toBe('load');
    expect(roles[at(16, 4, 3)]).toBe('background');
  });

  it('mask renders above constraints above material', () => {
    const layers = createLayers(8);
    applyBrush(layers, 'material', 4, 4, 3);
    applyBrush(layers, 'fix_xy', 4, 4);
    expect(flattenRoles(layers)[at(8, 4, 4)]).toBe('fix_xy');
    applyBrush(layers, 'mask', 4, 4, 1);
    expect(flattenRoles(layers)[at(8, 4, 4)]).toBe('mask');
  });

  it('constraint marks imply material underneath', () => {
    const layers = createLayers(8);
    applyBrush(layers, 'load', 2, 2);
    expect(layers.material[at(8, 2, 2)]).toBe(1);
  });

  it('eraser clears all layers', () => {
    const layers = createLayers(8);
    applyBrush(layers, 'material', 4, 4, 3);
    applyBrush(layers, 'mask', 4, 4, 3);
    applyBrush(layers, 'eraser', 4, 4, 3);
    expect(new Set(flattenRoles(layers))).toEqual(new Set(['background']));
  });

  it('brushing off-canvas is ignored', () => {
    const layers = createLayers(8);
    applyBrush(layers, 'material', -3, 2, 3);
    applyBrush(layers, 'material', 7, 7, 5);
    expect(layers.material[at(8, 7, 7)]).toBe(1);
  });
});

describe('sketch export', () => {
  it('uses palette colors verbatim', () => {
    const layers = createLayers(4);
    applyBrush(layers, 'material', 1, 1, 1);
    const rgba = flattenRgba(layers, PALETTE);
    const cell = at(4, 1, 1) * 4;
    expect([rgba[cell], rgba[cell + 1], rgba[cell + 2], rgba[cell + 3]]).toEqual([0, 0, 0, 255]);
    const bg = at(4, 0, 0) * 4;
    expect([rgba[bg], rgba[bg + 1], rgba[bg + 2], rgba[bg + 3]]).toEqual([255, 255, 255, 255]);
  });

  it('empty material layer blocks the export with a warning', () => {
    const layers = createLayers(8);
    applyBrush(layers, 'mask', 3, 3, 3); // mask alone is not material
    const out = exportSketchPng(layers, PALETTE);
    expect(out.png).toBeNull();
    expect(out.warnings.join(' ')).toMatch(/EmptyCanvas/);
  });

  it('exports one pixel per cell with the flattened colors', () => {
    const layers = createLayers(8);
    applyBrush(layers, 'material', 4, 4, 5);
    applyBrush(layers, 'load', 4, 3);
    const out = exportSketchPng(layers, PALETTE);
    expect(out.warnings).toEqual([]);
    const decoded = decodePng(out.png!);
    expect(decoded.width).toBe(8);
    expect(decoded.height).toBe(8);
    const px = at(8, 4, 3) * 4;
    expect(decoded.pixels[px]).toBe(255); // load red
    expect(decoded.pixels[px + 1]).toBe(0);
  });

  it('mask export is grayscale 255-editable, null when unused', () => {
    const layers = createLayers(8);
    expect(exportMaskPng(layers)).toBeNull();
    applyBrush(layers, 'mask', 2, 2, 3);
    const png = exportMaskPng(layers);
    const decoded = decodePng(png!);
    expect(decoded.channels).toBe(1);
    expect(decoded.pixels[at(8, 2, 2)]).toBe(255);
    expect(decoded.pixels[at(8, 6, 6)]).toBe(0);
  });
});
