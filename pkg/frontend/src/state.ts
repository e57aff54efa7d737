/** Client-side annotation state: markers, view window, intro progress. */

import { ViewWindow, clampView, fullView } from "./mapping.js";

export interface AnnotationState {
  taskId: string | null;
  nObs: number;
  markers: number[]; // unique, sorted, 1-based
  view: ViewWindow;
}

export type SubmissionBody =
  | { task_id: string; cps: number[] }
  | { task_id: string; no_change: true };

export function newState(taskId: string | null, nObs: number): AnnotationState {
  return { taskId, nObs, markers: [], view: fullView(nObs) };
}

/** Add the marker at `index`, or remove it when already present. */
export function toggleMarker(state: AnnotationState, index: number): AnnotationState {
  if (!Number.isInteger(index) || index < 1 || index > state.nObs) {
    return state;
  }
  const markers = state.markers.includes(index)
    ? state.markers.filter((m) => m !== index)
    : [...state.markers, index].sort((a, b) => a - b);
  return { ...state, markers };
}

export function setView(state: AnnotationState, view: ViewWindow): AnnotationState {
  return { ...state, view: clampView(view, state.nObs) };
}

/**
 * Body for POST /api/annotate. Retries must reuse the identical body;
 * the server treats the task id as the idempotency key.
 */
export function submissionBody(state: AnnotationState, noChange: boolean): SubmissionBody {
  if (state.taskId === null) {
    throw new Error("no open task");
  }
  if (noChange) {
    return { task_id: state.taskId, no_change: true };
  }
  return { task_id: state.taskId, cps: [...state.markers] };
}

/** Pressing "no change points" with markers present needs confirmation. */
export function needsNoChangeConfirmation(state: AnnotationState): boolean {
  return state.markers.length > 0;
}
