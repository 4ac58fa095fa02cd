import './style.css';
import { ApiError, fetchPalette, pollJob, submitJob } from './api';
import {
  applyBrush,
  CELL_PX,
  exportMaskPng,
  exportSketchPng,
  flattenRoles,
  GRID,
  paletteColor,
  type BrushRole,
} from './layers';
import { toBase64 } from './png';
import {
  buildJobPayload,
  clearIterate,
  createState,
  enterIterate,
  formatBadges,
  validateParams,
  type StudioState,
} from './state';
import type { PaletteCode, Role } from './types';

const BASE_URL = '';
const BRUSHES: { role: BrushRole; label: string; point: boolean }[] = [
  { role: 'material', label: 'Material', point: false },
  { role: 'load', label: 'Load', point: true },
  { role: 'fix_x', label: 'Pin X', point: true },
  { role: 'fix_y', label: 'Pin Y', point: true },
  { role: 'fix_xy', label: 'Pin XY', point: true },
  { role: 'mask', label: 'Mask', point: false },
  { role: 'eraser', label: 'Eraser', point: false },
];

let state: StudioState = createState(GRID);
let palette: PaletteCode[] = [];
let activeBrush: BrushRole = 'material';
let brushSize = 5;
let priorImage: HTMLImageElement | null = null;
let pollAbort: AbortController | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function rgbaCss([r, g, b, a]: [number, number, number, number]): string {
  return `rgba(${r}, ${g}, ${b}, ${a / 255})`;
}

function showBanner(message: string, kind: 'error' | 'info') {
  const banner = $('banner');
  banner.textContent = message;
  banner.className = `banner ${kind}`;
  banner.style.display = message ? 'block' : 'none';
}

function drawCanvas() {
  const canvas = $('sketch-canvas') as HTMLCanvasElement;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = rgbaCss(paletteColor(palette, 'background'));
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (priorImage && state.mode.kind === 'iterate') {
    ctx.imageSmoothingEnabled = false;
    ctx.globalAlpha = 0.45;
    ctx.drawImage(priorImage, 0, 0, canvas.width, canvas.height);
    ctx.globalAlpha = 1.0;
  }
  const roles = flattenRoles(state.layers);
  for (let cy = 0; cy < GRID; cy++) {
    for (let cx = 0; cx < GRID; cx++) {
      const role: Role = roles[cy * GRID + cx];
      if (role === 'background') continue;
      ctx.fillStyle = rgbaCss(paletteColor(palette, role));
      ctx.fillRect(cx * CELL_PX, cy * CELL_PX, CELL_PX, CELL_PX);
    }
  }
}

function canvasCell(event: MouseEvent): [number, number] {
  const canvas = $('sketch-canvas') as HTMLCanvasElement;
  const rect = canvas.getBoundingClientRect();
  const cx = Math.floor(((event.clientX - rect.left) * (canvas.width / rect.width)) / CELL_PX);
  const cy = Math.floor(((event.clientY - rect.top) * (canvas.height / rect.height)) / CELL_PX);
  return [cx, cy];
}

function readParams(): string[] {
  const vf = parseFloat(($('vf') as HTMLInputElement).value);
  const angle = parseFloat(($('angle') as HTMLInputElement).value);
  const strength = parseFloat(($('strength') as HTMLInputElement).value);
  const batch = parseInt(($('batch') as HTMLInputElement).value, 10);
  const seedRaw = ($('seed') as HTMLInputElement).value.trim();
  const backend = ($('backend') as HTMLSelectElement).value as 'simp' | 'remote';
  state.params = {
    volumeFraction: vf,
    loadAngleDeg: angle,
    strength,
    batchCount: batch,
    backend,
    seed: seedRaw === '' ? null : parseInt(seedRaw, 10),
  };
  $('strength-value').textContent = Number.isFinite(strength) ? strength.toFixed(2) : '?';
  const errors = validateParams(state.params);
  $('param-errors').textContent = errors.join('; ');
  return errors;
}

function renderGallery() {
  const gallery = $('gallery');
  gallery.innerHTML = '';
  state.gallery.forEach((result, index) => {
    const card = document.createElement('div');
    card.className = 'card';
    if (state.mode.kind === 'iterate' && state.mode.prior === result) card.classList.add('selected');

    const img = document.createElement('img');
    img.width = 192;
    img.height = 192;
    img.src = `data:image/png;base64,${result.structure_png_b64}`;
    img.alt = `result ${index}`;
    card.appendChild(img);

    const badges = formatBadges(result);
    const info = document.createElement('div');
    info.className = 'badges';
    info.textContent = `${badges.compliance} · ${badges.vf}`;
    card.appendChild(info);

    const actions = document.createElement('div');
    const iterate = document.createElement('button');
    iterate.textContent = 'Iterate with mask';
    iterate.onclick = () => {
      state = enterIterate(state, result);
      priorImage = new Image();
      priorImage.onload = drawCanvas;
      priorImage.src = img.src;
      activeBrush = 'mask';
      syncBrushButtons();
      showBanner('Iterate mode: mask the region to regenerate; unmasked cells keep the prior.', 'info');
      renderGallery();
    };
    actions.appendChild(iterate);
    card.appendChild(actions);
    gallery.appendChild(card);
  });
  $('clear-iterate').style.display = state.mode.kind === 'iterate' ? 'inline-block' : 'none';
}

function syncBrushButtons() {
  document.querySelectorAll<HTMLButtonElement>('#brushes button').forEach((btn) => {
    btn.classList.toggle('active', btn.dataset.role === activeBrush);
  });
}

async function generate() {
  const errors = readParams();
  if (errors.length > 0) return; // inline validation blocks the request

  const exported = exportSketchPng(state.layers, palette);
  if (!exported.png) {
    showBanner(exported.warnings.join('; '), 'error');
    return;
  }
  const maskPng = exportMaskPng(state.layers);
  const payload = buildJobPayload(
    state,
    toBase64(exported.png),
    maskPng ? toBase64(maskPng) : null,
  );

  pollAbort?.abort(); // a new submission supersedes any active poll
  pollAbort = new AbortController();
  const button = $('generate') as HTMLButtonElement;
  button.disabled = true;
  showBanner('', 'info');
  try {
    const jobId = await submitJob(BASE_URL, payload);
    state.activeJobId = jobId;
    showBanner(`Job ${jobId} running…`, 'info');
    const status = await pollJob(BASE_URL, jobId, {
      signal: pollAbort.signal,
      onTick: (s) => showBanner(`Job ${jobId}: ${s.state}`, 'info'),
    });
    state.gallery = status.results;
    state = clearIterate(state);
    priorImage = null;
    showBanner('', 'info');
    renderGallery();
    drawCanvas();
  } catch (error) {
    // network or job failure: keep the canvas untouched and offer a retry
    const message = error instanceof ApiError ? error.message : String(error);
    showBanner(`Generation failed: ${message} — press Generate to retry.`, 'error');
  } finally {
    button.disabled = false;
  }
}

async function boot() {
  palette = await fetchPalette(BASE_URL); // brushes are server colors, no local constants
  const brushes = $('brushes');
  for (const brush of BRUSHES) {
    const btn = document.createElement('button');
    btn.dataset.role = brush.role;
    btn.textContent = brush.label;
    if (brush.role !== 'eraser') {
      const swatch = document.createElement('span');
      swatch.className = 'swatch';
      swatch.style.background = rgbaCss(paletteColor(palette, brush.role as Role));
      btn.prepend(swatch);
    }
    btn.onclick = () => {
      activeBrush = brush.role;
      syncBrushButtons();
    };
    brushes.appendChild(btn);
  }
  syncBrushButtons();

  const canvas = $('sketch-canvas') as HTMLCanvasElement;
  let drawing = false;
  const dab = (event: MouseEvent) => {
    const [cx, cy] = canvasCell(event);
    applyBrush(state.layers, activeBrush, cx, cy, brushSize);
    drawCanvas();
  };
  canvas.addEventListener('mousedown', (e) => {
    drawing = true;
    dab(e);
  });
  canvas.addEventListener('mousemove', (e) => {
    if (drawing) dab(e);
  });
  window.addEventListener('mouseup', () => {
    drawing = false;
  });

  ($('brush-size') as HTMLInputElement).oninput = (e) => {
    brushSize = parseInt((e.target as HTMLInputElement).value, 10);
    $('brush-size-value').textContent = String(brushSize);
  };
  for (const id of ['vf', 'angle', 'strength', 'batch', 'seed', 'backend']) {
    $(id).addEventListener('input', readParams);
  }
  for (const [id, angle] of [['dir-up', 90], ['dir-down', 270], ['dir-left', 180], ['dir-right', 0]] as const) {
    $(id).onclick = () => {
      ($('angle') as HTMLInputElement).value = String(angle);
      readParams();
    };
  }
  $('generate').onclick = generate;
  $('clear-iterate').onclick = () => {
    state = clearIterate(state);
    priorImage = null;
    showBanner('', 'info');
    renderGallery();
    drawCanvas();
  };
  $('clear-canvas').onclick = () => {
    state.layers.material.fill(0);
    state.layers.constraints.fill(0);
    state.layers.mask.fill(0);
    drawCanvas();
  };
  readParams();
  drawCanvas();
}

boot().catch((error) => showBanner(`Failed to reach the service: ${error}`, 'error'));
