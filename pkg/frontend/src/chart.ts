/**
 * Canvas line plot with click-to-toggle markers, wheel zoom, and drag
 * pan. Axes carry no tick labels: annotators see only the shape of the
 * series. Multivariate payloads render as vertically stacked panels.
 */

import { ViewWindow, indexToPixel, pixelToIndex, pan, zoomAt } from "./mapping.js";
import { RenderModel } from "./scrub.js";

export interface ChartCallbacks {
  onToggle(index: number): void;
  onView(view: ViewWindow): void;
}

const PADDING = 12;
const LINE_COLOR = "#2463a8";
const MARKER_COLOR = "#c0392b";
const FRAME_COLOR = "#9aa5ad";
const DRAG_THRESHOLD_PX = 4;

export class Chart {
  private dragStartX: number | null = null;
  private dragStartView: ViewWindow | null = null;
  private dragged = false;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private model: RenderModel,
    private view: ViewWindow,
    private markers: number[],
    private readonly callbacks: ChartCallbacks,
  ) {
    canvas.addEventListener("mousedown", (e) => this.beginDrag(e));
    canvas.addEventListener("mousemove", (e) => this.moveDrag(e));
    canvas.addEventListener("mouseup", (e) => this.endDrag(e));
    canvas.addEventListener("mouseleave", () => this.cancelDrag());
    canvas.addEventListener("wheel", (e) => this.wheel(e), { passive: false });
  }

  update(model: RenderModel, view: ViewWindow, markers: number[]): void {
    this.model = model;
    this.view = view;
    this.markers = markers;
    this.draw();
  }

  private plotWidth(): number {
    return this.canvas.width - 2 * PADDING;
  }

  private eventPixel(e: MouseEvent): number {
    const rect = this.canvas.getBoundingClientRect();
    const x = ((e.clientX - rect.left) / rect.width) * this.canvas.width;
    return x - PADDING;
  }

  private beginDrag(e: MouseEvent): void {
    this.dragStartX = this.eventPixel(e);
    this.dragStartView = this.view;
    this.dragged = false;
  }

  private moveDrag(e: MouseEvent): void {
    if (this.dragStartX === null || this.dragStartView === null) return;
    const dx = this.eventPixel(e) - this.dragStartX;
    if (Math.abs(dx) < DRAG_THRESHOLD_PX && !this.dragged) return;
    this.dragged = true;
    const span = this.dragStartView.hi - this.dragStartView.lo;
    const deltaIndices = Math.round((-dx / this.plotWidth()) * span);
    this.callbacks.onView(pan(this.dragStartView, deltaIndices, this.model.nObs));
  }

  private endDrag(e: MouseEvent): void {
    const wasDrag = this.dragged;
    const startX = this.dragStartX;
    this.dragStartX = null;
    this.dragStartView = null;
    this.dragged = false;
    if (wasDrag || startX === null) return;
    // plain click: snap to the nearest index and toggle its marker
    const index = pixelToIndex(this.eventPixel(e), this.view, this.plotWidth());
    this.callbacks.onToggle(index);
  }

  private cancelDrag(): void {
    this.dragStartX = null;
    this.dragStartView = null;
    this.dragged = false;
  }

  private wheel(e: WheelEvent): void {
    e.preventDefault();
    const center = pixelToIndex(this.eventPixel(e), this.view, this.plotWidth());
    const factor = e.deltaY > 0 ? 1.25 : 0.8;
    this.callbacks.onView(zoomAt(this.view, this.model.nObs, center, factor));
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const panels = this.model.nDim;
    const panelHeight = (height - 2 * PADDING) / panels;
    for (let dim = 0; dim < panels; dim++) {
      const top = PADDING + dim * panelHeight;
      this.drawPanel(ctx, this.model.values[dim], top, panelHeight - 6);
    }
    this.drawMarkers(ctx, height);
    ctx.strokeStyle = FRAME_COLOR;
    ctx.lineWidth = 1;
    ctx.strokeRect(PADDING, PADDING - 6, this.plotWidth(), height - 2 * PADDING + 12);
  }

  private drawPanel(
    ctx: CanvasRenderingContext2D,
    values: (number | null)[],
    top: number,
    height: number,
  ): void {
    const observed = values.filter((v): v is number => v !== null);
    if (observed.length === 0) return;
    const min = Math.min(...observed);
    const max = Math.max(...observed);
    const spread = max - min || 1;
    const toY = (v: number) => top + height - ((v - min) / spread) * height;

    ctx.strokeStyle = LINE_COLOR;
    ctx.lineWidth = 1.4;
    ctx.beginPath();
    let pen_down = false;
    for (let i = this.view.lo; i <= this.view.hi && i <= values.length; i++) {
      const value = values[i - 1];
      if (value === null) {
        pen_down = false; // gap for missing cells
        continue;
      }
      const x = PADDING + indexToPixel(i, this.view, this.plotWidth());
      const y = toY(value);
      if (pen_down) {
        ctx.lineTo(x, y);
      } else {
        ctx.moveTo(x, y);
        pen_down = true;
      }
    }
    ctx.stroke();
  }

  private drawMarkers(ctx: CanvasRenderingContext2D, height: number): void {
    ctx.strokeStyle = MARKER_COLOR;
    ctx.lineWidth = 1.6;
    for (const marker of this.markers) {
      if (marker < this.view.lo || marker > this.view.hi) continue;
      const x = PADDING + indexToPixel(marker, this.view, this.plotWidth());
      ctx.beginPath();
      ctx.moveTo(x, PADDING - 6);
      ctx.lineTo(x, height - PADDING + 6);
      ctx.stroke();
    }
  }
}
