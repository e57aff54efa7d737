/** Page wiring: registration, the gated introduction, then annotation tasks. */

import { ApiClient } from "./api.js";
import { Chart } from "./chart.js";
import { ViewWindow, fullView } from "./mapping.js";
import { RenderModel, toRenderModel } from "./scrub.js";
import {
  AnnotationState,
  needsNoChangeConfirmation,
  newState,
  submissionBody,
  toggleMarker,
} from "./state.js";

const api = new ApiClient("");

let state: AnnotationState = newState(null, 2);
let model: RenderModel | null = null;
let chart: Chart | null = null;
let introMode = true;
let busy = false;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string): void {
  el<HTMLParagraphElement>("status").textContent = text;
}

function redraw(): void {
  if (chart && model) {
    chart.update(model, state.view, state.markers);
  }
}

function onToggle(index: number): void {
  state = toggleMarker(state, index);
  redraw();
}

function onView(view: ViewWindow): void {
  state = { ...state, view };
  redraw();
}

function showModel(payload: Record<string, unknown>): void {
  model = toRenderModel(payload);
  state = newState(model.taskId, model.nObs);
  state = { ...state, view: fullView(model.nObs) };
  el<HTMLQuoteElement>("rubric").textContent = model.rubric;
  const canvas = el<HTMLCanvasElement>("plot");
  if (!chart) {
    chart = new Chart(canvas, model, state.view, state.markers, { onToggle, onView });
  }
  redraw();
}

async function nextIntroPage(): Promise<void> {
  const page = await api.introNext();
  if (page.done) {
    if (page.intro_status === "passed") {
      introMode = false;
      setStatus("Introduction passed. Loading your first series...");
      await nextTask();
      return;
    }
    setStatus("Introduction incomplete; refresh to retry.");
    return;
  }
  showModel(page);
  setStatus(
    `Introduction ${page.position}/${page.total}: mark the change points, then submit.`,
  );
}

async function nextTask(): Promise<void> {
  const payload = await api.task();
  if (payload.task === null) {
    setStatus("No series left to annotate. Thank you!");
    el<HTMLButtonElement>("submit").disabled = true;
    el<HTMLButtonElement>("no-change").disabled = true;
    return;
  }
  showModel(payload);
  setStatus("Mark the change points, or declare that there are none.");
}

async function submit(noChange: boolean): Promise<void> {
  if (busy || !model) return;
  if (noChange && needsNoChangeConfirmation(state)) {
    const sure = window.confirm(
      "You placed markers. Submit as 'no change points' anyway?",
    );
    if (!sure) return;
  }
  busy = true;
  try {
    if (introMode && model.demoId) {
      const feedback = await api.introSubmit(model.demoId, noChange ? [] : state.markers);
      const parts = [`F1 ${feedback.f1.toFixed(2)}`];
      if (feedback.missed.length) parts.push(`missed ${feedback.missed.length}`);
      if (feedback.false_alarms.length) {
        parts.push(`${feedback.false_alarms.length} false alarm(s)`);
      }
      if (feedback.completed && feedback.intro_status === "must_repeat") {
        parts.push("average too low, the introduction restarts");
      }
      setStatus(`Feedback: ${parts.join(", ")}.`);
      await nextIntroPage();
    } else {
      await api.annotate(submissionBody(state, noChange));
      setStatus("Saved. Loading the next series...");
      await nextTask();
    }
  } catch (error) {
    setStatus(`Something went wrong: ${(error as Error).message}`);
  } finally {
    busy = false;
  }
}

async function start(): Promise<void> {
  try {
    await api.register();
    setStatus("Registered. Starting the introduction...");
    await nextIntroPage();
  } catch (error) {
    setStatus(`Cannot reach the service: ${(error as Error).message}`);
  }
}

el<HTMLButtonElement>("submit").addEventListener("click", () => void submit(false));
el<HTMLButtonElement>("no-change").addEventListener("click", () => void submit(true));
void start();
