import { describe, expect, it } from "vitest";

import { allDisjoint, boxesOverlap, boxesToScreenRects, type PatchBox } from "../src/patches.js";

const box = (top: number, left: number, k = 64): PatchBox => ({ top, left, k, score: 1 });

describe("boxesOverlap", () => {
  it("detects overlap", () => {
    expect(boxesOverlap(box(0, 0), box(32, 32))).toBe(true);
  });

  it("treats edge-touching boxes as disjoint", () => {
    expect(boxesOverlap(box(0, 0), box(0, 64))).toBe(false);
    expect(boxesOverlap(box(0, 0), box(64, 0))).toBe(false);
  });
});

describe("allDisjoint", () => {
  it("accepts a server-style K=8 response of disjoint boxes", () => {
    const boxes = [0, 1, 2, 3, 4, 5, 6, 7].map((i) =>
      box(Math.floor(i / 4) * 64, (i % 4) * 64));
    expect(boxes).toHaveLength(8);
    expect(allDisjoint(boxes)).toBe(true);
  });

  it("rejects any overlapping pair", () => {
    expect(allDisjoint([box(0, 0), box(64, 64), box(100, 100)])).toBe(false);
  });

  it("accepts the empty and single-box cases", () => {
    expect(allDisjoint([])).toBe(true);
    expect(allDisjoint([box(5, 9)])).toBe(true);
  });
});

describe("boxesToScreenRects", () => {
  it("scales by zoom", () => {
    const [r] = boxesToScreenRects([box(10, 20)], 2);
    expect(r).toEqual({ x: 40, y: 20, w: 128, h: 128 });
  });
});
