/**
 * Render models are built exclusively from whitelisted numeric task
 * payload fields, so no server-side string (series name, dates, labels)
 * can ever reach the plot or the DOM.
 */

export interface RenderModel {
  taskId: string | null;
  demoId: string | null;
  nObs: number;
  nDim: number;
  values: (number | null)[][];
  rubric: string;
}

interface PayloadLike {
  task_id?: unknown;
  demo_id?: unknown;
  n_obs?: unknown;
  n_dim?: unknown;
  values?: unknown;
  rubric?: unknown;
}

const DEMO_ID = /^demo_[0-9]+$/;
const TASK_ID = /^t[0-9]+$/;

export function toRenderModel(payload: PayloadLike): RenderModel {
  const nObs = asCount(payload.n_obs, "n_obs");
  const nDim = asCount(payload.n_dim, "n_dim");
  const raw = payload.values;
  if (!Array.isArray(raw) || raw.length !== nDim) {
    throw new Error("payload values do not match n_dim");
  }
  const values = raw.map((dim) => {
    if (!Array.isArray(dim) || dim.length !== nObs) {
      throw new Error("payload values do not match n_obs");
    }
    return dim.map((cell) => (cell === null ? null : asFinite(cell)));
  });
  return {
    taskId: matchOrNull(payload.task_id, TASK_ID),
    demoId: matchOrNull(payload.demo_id, DEMO_ID),
    nObs,
    nDim,
    values,
    rubric: typeof payload.rubric === "string" ? payload.rubric : "",
  };
}

/** Every string that could reach the DOM from a render model. */
export function domStrings(model: RenderModel): string[] {
  const out: string[] = [model.rubric];
  if (model.taskId) out.push(model.taskId);
  if (model.demoId) out.push(model.demoId);
  return out;
}

function asCount(value: unknown, field: string): number {
  if (typeof value !== "number" || !Number.isInteger(value) || value < 1) {
    throw new Error(`payload field ${field} is not a positive integer`);
  }
  return value;
}

function asFinite(value: unknown): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new Error("payload contains a non-numeric observation");
  }
  return value;
}

function matchOrNull(value: unknown, pattern: RegExp): string | null {
  return typeof value === "string" && pattern.test(value) ? value : null;
}
