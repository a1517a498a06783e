import { ExplanationGrid } from "./types.js";

/**
 * Heatmap rendering constants: a fixed monotone ramp from transparent deep
 * blue to near-opaque red. The grid value drives both hue mix and alpha.
 */
const MAX_ALPHA = 210;

export function isValidGrid(grid: unknown): grid is ExplanationGrid {
  if (typeof grid !== "object" || grid === null) {
    return false;
  }
  const g = grid as Record<string, unknown>;
  if (
    typeof g.width !== "number" ||
    typeof g.height !== "number" ||
    !Number.isInteger(g.width) ||
    !Number.isInteger(g.height) ||
    g.width <= 0 ||
    g.height <= 0 ||
    !Array.isArray(g.values)
  ) {
    return false;
  }
  if (g.values.length !== g.width * g.height) {
    return false;
  }
  return g.values.every(
    (v) => typeof v === "number" && Number.isFinite(v) && v >= 0 && v <= 1
  );
}

/** RGBA pixel for one grid value; alpha grows monotonically with the value. */
export function rampColor(value: number): [number, number, number, number] {
  const v = Math.min(1, Math.max(0, value));
  const red = Math.round(255 * v);
  const blue = Math.round(120 * (1 - v));
  const alpha = Math.round(MAX_ALPHA * v);
  return [red, 40, blue, alpha];
}

/** Row-major RGBA buffer for the whole grid (width * height * 4 bytes). */
export function gridToRgba(grid: ExplanationGrid): Uint8ClampedArray {
  const out = new Uint8ClampedArray(grid.width * grid.height * 4);
  for (let j = 0; j < grid.values.length; j += 1) {
    const [r, g, b, a] = rampColor(grid.values[j]);
    out[j * 4] = r;
    out[j * 4 + 1] = g;
    out[j * 4 + 2] = b;
    out[j * 4 + 3] = a;
  }
  return out;
}

/** Paint the grid into a canvas, scaling cells up to the canvas size. */
export function drawHeatmap(canvas: HTMLCanvasElement, grid: ExplanationGrid): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  const pixels = gridToRgba(grid);
  const image = new ImageData(new Uint8ClampedArray(pixels), grid.width, grid.height);
  const cell = document.createElement("canvas");
  cell.width = grid.width;
  cell.height = grid.height;
  const cellCtx = cell.getContext("2d");
  if (!cellCtx) {
    return;
  }
  cellCtx.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = true;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(cell, 0, 0, canvas.width, canvas.height);
}
