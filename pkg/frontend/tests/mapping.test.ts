import { describe, expect, it } from "vitest";

import {
  MIN_WINDOW,
  clampView,
  fullView,
  indexToPixel,
  pan,
  pixelToIndex,
  zoomAt,
} from "../src/mapping.js";

const WIDTH = 936; // plot width in pixels

describe("pixel/index round trip", () => {
  const nObs = 600;
  const zoomLevels = [
    fullView(nObs), // 1x
    { lo: 151, hi: 300 }, // 4x
    { lo: 290, hi: 326 }, // ~16x
  ];

  it.each(zoomLevels.map((v, i) => [i, v] as const))(
    "is exact at zoom level %d",
    (_level, view) => {
      for (let index = view.lo; index <= view.hi; index++) {
        const px = indexToPixel(index, view, WIDTH);
        expect(pixelToIndex(px, view, WIDTH)).toBe(index);
      }
    },
  );

  it("is exact for odd widths and tiny windows", () => {
    for (const width of [33, 100, 937]) {
      const view = { lo: 7, hi: 7 + MIN_WINDOW };
      for (let index = view.lo; index <= view.hi; index++) {
        expect(pixelToIndex(indexToPixel(index, view, width), view, width)).toBe(index);
      }
    }
  });

  it("clamps out-of-range pixels to the window", () => {
    const view = { lo: 10, hi: 50 };
    expect(pixelToIndex(-100, view, WIDTH)).toBe(10);
    expect(pixelToIndex(WIDTH + 500, view, WIDTH)).toBe(50);
  });
});

describe("view manipulation", () => {
  it("zooming in shrinks the window around the center", () => {
    const view = fullView(600);
    const zoomed = zoomAt(view, 600, 300, 0.5);
    expect(zoomed.hi - zoomed.lo).toBeLessThan(view.hi - view.lo);
    expect(zoomed.lo).toBeLessThanOrEqual(300);
    expect(zoomed.hi).toBeGreaterThanOrEqual(300);
  });

  it("zooming never collapses below the minimum window", () => {
    let view = fullView(600);
    for (let i = 0; i < 40; i++) {
      view = zoomAt(view, 600, 123, 0.5);
    }
    expect(view.hi - view.lo).toBeGreaterThanOrEqual(MIN_WINDOW - 1);
    expect(view.lo).toBeGreaterThanOrEqual(1);
    expect(view.hi).toBeLessThanOrEqual(600);
  });

  it("zooming out saturates at the full series", () => {
    let view = { lo: 200, hi: 220 };
    for (let i = 0; i < 30; i++) {
      view = zoomAt(view, 600, 210, 2.0);
    }
    expect(view).toEqual({ lo: 1, hi: 600 });
  });

  it("panning respects the series bounds", () => {
    const view = { lo: 1, hi: 100 };
    expect(pan(view, -50, 600)).toEqual({ lo: 1, hi: 100 });
    const panned = pan(view, 50, 600);
    expect(panned).toEqual({ lo: 51, hi: 150 });
    expect(pan({ lo: 501, hi: 600 }, 50, 600)).toEqual({ lo: 501, hi: 600 });
  });

  it("clampView preserves span where possible", () => {
    expect(clampView({ lo: -10, hi: 40 }, 600)).toEqual({ lo: 1, hi: 51 });
    expect(clampView({ lo: 580, hi: 630 }, 600)).toEqual({ lo: 550, hi: 600 });
  });
});
