/**
 * Pixel <-> index mapping for the series plot.
 *
 * A view window is an inclusive 1-based index range [lo, hi]. Pixels run
 * from 0 to width - 1 across the window. The mapping is built so that
 * pixelToIndex(indexToPixel(i)) === i for every integer index inside the
 * window at any zoom level.
 */

export interface ViewWindow {
  lo: number;
  hi: number;
}

export const MIN_WINDOW = 4; // indices; zooming never collapses below this

export function fullView(nObs: number): ViewWindow {
  return { lo: 1, hi: Math.max(nObs, 2) };
}

export function indexToPixel(index: number, view: ViewWindow, width: number): number {
  return ((index - view.lo) * (width - 1)) / (view.hi - view.lo);
}

export function pixelToIndex(pixel: number, view: ViewWindow, width: number): number {
  const raw = view.lo + (pixel * (view.hi - view.lo)) / (width - 1);
  return clamp(Math.round(raw), view.lo, view.hi);
}

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(Math.max(value, lo), hi);
}

/** Clamp a window to [1, nObs] preserving its span where possible. */
export function clampView(view: ViewWindow, nObs: number): ViewWindow {
  const span = Math.max(Math.min(view.hi - view.lo, nObs - 1), MIN_WINDOW - 1);
  let lo = Math.round(view.lo);
  if (lo < 1) lo = 1;
  if (lo + span > nObs) lo = Math.max(1, nObs - span);
  return { lo, hi: Math.min(lo + span, Math.max(nObs, 2)) };
}

/** Zoom by `factor` (< 1 zooms in) keeping `centerIndex` fixed on screen. */
export function zoomAt(
  view: ViewWindow,
  nObs: number,
  centerIndex: number,
  factor: number,
): ViewWindow {
  const span = view.hi - view.lo;
  const newSpan = clamp(Math.round(span * factor), MIN_WINDOW - 1, Math.max(nObs - 1, 1));
  const ratio = span === 0 ? 0.5 : (centerIndex - view.lo) / span;
  const lo = Math.round(centerIndex - ratio * newSpan);
  return clampView({ lo, hi: lo + newSpan }, nObs);
}

export function pan(view: ViewWindow, deltaIndices: number, nObs: number): ViewWindow {
  return clampView(
    { lo: view.lo + deltaIndices, hi: view.hi + deltaIndices },
    nObs,
  );
}
