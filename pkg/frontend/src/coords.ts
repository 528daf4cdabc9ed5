/** Canvas-to-image coordinate mapping under integer-free zoom. */

export interface ImageSize {
  height: number;
  width: number;
}

/**
 * Map a canvas-local position (CSS pixels, origin at the canvas top-left) to
 * integer image pixel coordinates. The canvas shows the image scaled by
 * `zoom`, so canvas (x, y) covers image pixel (floor(y / zoom), floor(x / zoom)).
 * Returns null when the position falls outside the image area.
 */
export function canvasToImage(
  x: number,
  y: number,
  zoom: number,
  size: ImageSize,
): { row: number; col: number } | null {
  if (zoom <= 0 || !Number.isFinite(zoom)) {
    throw new Error(`zoom must be a positive number, got ${zoom}`);
  }
  const row = Math.floor(y / zoom);
  const col = Math.floor(x / zoom);
  if (row < 0 || col < 0 || row >= size.height || col >= size.width) {
    return null;
  }
  return { row, col };
}

/** Image pixel to canvas position (top-left corner of the pixel's cell). */
export function imageToCanvas(
  row: number,
  col: number,
  zoom: number,
): { x: number; y: number } {
  return { x: col * zoom, y: row * zoom };
}
