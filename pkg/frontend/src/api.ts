/** Thin typed client for the annotation service HTTP API. */

import { SubmissionBody } from "./state.js";

export interface IntroFeedback {
  demo_id: string;
  f1: number;
  matched: number[];
  missed: number[];
  false_alarms: number[];
  intro_status: string;
  completed: boolean;
  mean_f1?: number;
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private token: string | null = null,
  ) {}

  setToken(token: string): void {
    this.token = token;
  }

  private headers(): Record<string, string> {
    const out: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) out.Authorization = `Bearer ${this.token}`;
    return out;
  }

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await fetch(this.base + path, { ...init, headers: this.headers() });
    if (!response.ok) {
      const detail = await response.text();
      throw new Error(`${path} failed with ${response.status}: ${detail}`);
    }
    return response.json();
  }

  async register(): Promise<{ annotator_id: string; token: string }> {
    const doc = (await this.request("/api/register", { method: "POST" })) as {
      annotator_id: string;
      token: string;
    };
    this.token = doc.token;
    return doc;
  }

  introNext(): Promise<Record<string, unknown>> {
    return this.request("/api/intro/next") as Promise<Record<string, unknown>>;
  }

  introSubmit(demoId: string, cps: number[]): Promise<IntroFeedback> {
    return this.request("/api/intro/submit", {
      method: "POST",
      body: JSON.stringify({ demo_id: demoId, cps }),
    }) as Promise<IntroFeedback>;
  }

  task(): Promise<Record<string, unknown>> {
    return this.request("/api/task") as Promise<Record<string, unknown>>;
  }

  /**
   * Submit an annotation; one transparent retry with the identical body.
   * The server deduplicates on the task id, so a retry after a dropped
   * response cannot double-count.
   */
  async annotate(body: SubmissionBody): Promise<{ accepted: boolean; replay: boolean }> {
    const send = () =>
      this.request("/api/annotate", { method: "POST", body: JSON.stringify(body) });
    try {
      return (await send()) as { accepted: boolean; replay: boolean };
    } catch (error) {
      if (error instanceof TypeError) {
        // network failure: the request may or may not have landed
        return (await send()) as { accepted: boolean; replay: boolean };
      }
      throw error;
    }
  }

  exportAnnotations(adminToken: string): Promise<Record<string, Record<string, number[]>>> {
    const saved = this.token;
    this.token = adminToken;
    const result = this.request("/api/admin/export");
    this.token = saved;
    return result as Promise<Record<string, Record<string, number[]>>>;
  }

  health(): Promise<{ status: string }> {
    return this.request("/api/health") as Promise<{ status: string }>;
  }
}
