/** Patch rectangles returned by the refine endpoint. */

export interface PatchBox {
  top: number;
  left: number;
  k: number;
  score: number;
}

export function boxesOverlap(a: PatchBox, b: PatchBox): boolean {
  return !(
    a.top + a.k <= b.top ||
    b.top + b.k <= a.top ||
    a.left + a.k <= b.left ||
    b.left + b.k <= a.left
  );
}

/** True when every pair of boxes is disjoint (the server guarantees this). */
export function allDisjoint(boxes: PatchBox[]): boolean {
  for (let i = 0; i < boxes.length; i++) {
    for (let j = i + 1; j < boxes.length; j++) {
      if (boxesOverlap(boxes[i], boxes[j])) return false;
    }
  }
  return true;
}

/** Screen-space rectangles for drawing, scaled by zoom. */
export function boxesToScreenRects(
  boxes: PatchBox[],
  zoom: number,
): { x: number; y: number; w: number; h: number }[] {
  return boxes.map((b) => ({
    x: b.left * zoom,
    y: b.top * zoom,
    w: b.k * zoom,
    h: b.k * zoom,
  }));
}
