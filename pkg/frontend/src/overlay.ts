/** Pure pixel math for the overlay modes; canvases only hold the results. */

export type OverlayMode =
  | "image"
  | "alpha"
  | "alpha-over-checker"
  | "uncertainty-heatmap"
  | "patch-boxes";

/** Checkerboard value (0..255) for a pixel, classic light/dark grey squares. */
export function checkerValue(row: number, col: number, cell = 8): number {
  const light = 204;
  const dark = 153;
  return (Math.floor(row / cell) + Math.floor(col / cell)) % 2 === 0 ? light : dark;
}

/**
 * Composite the image over a checkerboard using the matte:
 * out = alpha * image + (1 - alpha) * checker, per channel.
 * `rgba` is canvas ImageData-style (RGBA bytes), `alpha` is one float in
 * [0, 1] per pixel, row-major.
 */
export function alphaOverChecker(
  rgba: Uint8ClampedArray,
  alpha: Float32Array,
  width: number,
  cell = 8,
): Uint8ClampedArray {
  if (rgba.length !== alpha.length * 4) {
    throw new Error("rgba and alpha sizes disagree");
  }
  const out = new Uint8ClampedArray(rgba.length);
  for (let i = 0; i < alpha.length; i++) {
    const row = Math.floor(i / width);
    const col = i % width;
    const a = alpha[i];
    const bg = checkerValue(row, col, cell);
    for (let c = 0; c < 3; c++) {
      out[i * 4 + c] = Math.round(a * rgba[i * 4 + c] + (1 - a) * bg);
    }
    out[i * 4 + 3] = 255;
  }
  return out;
}

/** Greyscale matte view: alpha in [0,1] to opaque grey RGBA. */
export function alphaToGrey(alpha: Float32Array): Uint8ClampedArray {
  const out = new Uint8ClampedArray(alpha.length * 4);
  for (let i = 0; i < alpha.length; i++) {
    const v = Math.round(alpha[i] * 255);
    out[i * 4] = v;
    out[i * 4 + 1] = v;
    out[i * 4 + 2] = v;
    out[i * 4 + 3] = 255;
  }
  return out;
}

/**
 * Map normalized uncertainty bytes (0..255, as served) to a blue-to-red
 * heatmap. sigmaMin/sigmaMax from the response headers recover the physical
 * range for the legend; the colours only need the normalized bytes.
 */
export function uncertaintyHeatmap(norm: Uint8Array | Uint8ClampedArray): Uint8ClampedArray {
  const out = new Uint8ClampedArray(norm.length * 4);
  for (let i = 0; i < norm.length; i++) {
    const t = norm[i] / 255;
    out[i * 4] = Math.round(255 * t); // red rises with uncertainty
    out[i * 4 + 1] = Math.round(64 * (1 - Math.abs(2 * t - 1))); // mild green mid-band
    out[i * 4 + 2] = Math.round(255 * (1 - t)); // blue falls
    out[i * 4 + 3] = 255;
  }
  return out;
}

/** Physical sigma value a normalized byte stands for, from the header range. */
export function sigmaFromByte(byte: number, sigmaMin: number, sigmaMax: number): number {
  const span = sigmaMax > sigmaMin ? sigmaMax - sigmaMin : 1;
  return sigmaMin + (byte / 255) * span;
}

/** Decode a 16-bit grayscale matte (as drawn into RGBA by the browser) back
 * to floats. The browser quantizes to 8 bits per channel when rasterizing,
 * so we read the red channel and divide by 255. */
export function alphaFromRgba(rgba: Uint8ClampedArray): Float32Array {
  const n = rgba.length / 4;
  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = rgba[i * 4] / 255;
  }
  return out;
}
