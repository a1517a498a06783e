import { describe, expect, it } from "vitest";

import { gridToRgba, isValidGrid, rampColor } from "../src/heatmap.js";

describe("heatmap grid validation", () => {
  it("accepts a well-formed grid", () => {
    expect(isValidGrid({ width: 2, height: 2, values: [0, 0.5, 1, 0.25] })).toBe(true);
  });

  it("rejects structural problems", () => {
    expect(isValidGrid(null)).toBe(false);
    expect(isValidGrid({ width: 2, height: 2, values: [0, 1] })).toBe(false);
    expect(isValidGrid({ width: 0, height: 2, values: [] })).toBe(false);
    expect(isValidGrid({ width: 1.5, height: 2, values: [0, 1, 0] })).toBe(false);
    expect(isValidGrid({ width: 2, height: 2 })).toBe(false);
  });

  it("rejects out-of-range or non-finite values", () => {
    expect(isValidGrid({ width: 2, height: 1, values: [0, 1.2] })).toBe(false);
    expect(isValidGrid({ width: 2, height: 1, values: [-0.1, 1] })).toBe(false);
    expect(isValidGrid({ width: 2, height: 1, values: [NaN, 1] })).toBe(false);
  });
});

describe("color ramp", () => {
  it("alpha is monotone in the grid value and transparent at zero", () => {
    let previous = -1;
    for (let v = 0; v <= 1.0001; v += 0.05) {
      const [, , , alpha] = rampColor(Math.min(v, 1));
      expect(alpha).toBeGreaterThanOrEqual(previous);
      previous = alpha;
    }
    expect(rampColor(0)[3]).toBe(0);
    expect(rampColor(1)[3]).toBeGreaterThan(0);
  });

  it("fills one RGBA quadruple per cell", () => {
    const buffer = gridToRgba({ width: 3, height: 2, values: [0, 0.2, 0.4, 0.6, 0.8, 1] });
    expect(buffer.length).toBe(3 * 2 * 4);
    expect(buffer[3]).toBe(0); // first cell transparent
    expect(buffer[23]).toBeGreaterThan(200); // last cell near-opaque
  });
});
