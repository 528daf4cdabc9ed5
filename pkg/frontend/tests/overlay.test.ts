import { describe, expect, it } from "vitest";

import { alphaFromRgba, alphaOverChecker, alphaToGrey, checkerValue,
         sigmaFromByte, uncertaintyHeatmap } from "../src/overlay.js";

function solidRgba(n: number, r: number, g: number, b: number): Uint8ClampedArray {
  const out = new Uint8ClampedArray(n * 4);
  for (let i = 0; i < n; i++) {
    out[i * 4] = r;
    out[i * 4 + 1] = g;
    out[i * 4 + 2] = b;
    out[i * 4 + 3] = 255;
  }
  return out;
}

describe("alphaOverChecker", () => {
  it("returns the original image when alpha is all ones", () => {
    const rgba = solidRgba(16 * 16, 37, 120, 210);
    const out = alphaOverChecker(rgba, new Float32Array(16 * 16).fill(1), 16);
    expect(Array.from(out)).toEqual(Array.from(rgba));
  });

  it("returns the pure checkerboard when alpha is all zeros", () => {
    const out = alphaOverChecker(solidRgba(16 * 16, 0, 0, 0),
                                 new Float32Array(16 * 16), 16, 8);
    for (let i = 0; i < 16 * 16; i++) {
      const expected = checkerValue(Math.floor(i / 16), i % 16, 8);
      expect(out[i * 4]).toBe(expected);
      expect(out[i * 4 + 3]).toBe(255);
    }
  });

  it("blends linearly at alpha one half", () => {
    const out = alphaOverChecker(solidRgba(1, 100, 100, 100),
                                 new Float32Array([0.5]), 1, 8);
    expect(out[0]).toBe(Math.round(0.5 * 100 + 0.5 * checkerValue(0, 0, 8)));
  });

  it("rejects mismatched sizes", () => {
    expect(() => alphaOverChecker(solidRgba(4, 0, 0, 0), new Float32Array(5), 2))
      .toThrow(/sizes/);
  });
});

describe("uncertaintyHeatmap", () => {
  it("gives a uniform map for constant sigma", () => {
    const out = uncertaintyHeatmap(new Uint8Array(64).fill(128));
    for (let i = 1; i < 64; i++) {
      expect(out[i * 4]).toBe(out[0]);
      expect(out[i * 4 + 1]).toBe(out[1]);
      expect(out[i * 4 + 2]).toBe(out[2]);
    }
  });

  it("is blue at 0 and red at 255", () => {
    const out = uncertaintyHeatmap(new Uint8Array([0, 255]));
    expect(out[0]).toBe(0); // no red at minimum
    expect(out[2]).toBe(255); // full blue at minimum
    expect(out[4]).toBe(255); // full red at maximum
    expect(out[6]).toBe(0); // no blue at maximum
  });
});

describe("sigmaFromByte", () => {
  it("recovers the header range endpoints", () => {
    expect(sigmaFromByte(0, 1e-4, 0.3)).toBeCloseTo(1e-4);
    expect(sigmaFromByte(255, 1e-4, 0.3)).toBeCloseTo(0.3);
  });

  it("degrades gracefully when the range is degenerate", () => {
    expect(sigmaFromByte(128, 0.2, 0.2)).toBeCloseTo(0.2 + 128 / 255);
  });
});

describe("alpha raster helpers", () => {
  it("round-trips grey rendering and reading", () => {
    const alpha = new Float32Array([0, 0.25, 0.5, 1]);
    const back = alphaFromRgba(alphaToGrey(alpha));
    for (let i = 0; i < alpha.length; i++) {
      expect(Math.abs(back[i] - alpha[i])).toBeLessThan(1 / 255 + 1e-6);
    }
  });
});
