// Typed fetch client for the run service. The decision endpoint is the only
// way the console ever mutates run state.

import type { DecisionAck, DecisionRequest, GraphSnapshot, ReviewItem } from './types';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.url(path));
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  getGraph(runId: string): Promise<GraphSnapshot> {
    return this.getJson(`/runs/${runId}/graph`);
  }

  getReviews(runId: string): Promise<ReviewItem[]> {
    return this.getJson(`/runs/${runId}/reviews`);
  }

  async postDecision(
    runId: string,
    taskId: string,
    decision: DecisionRequest,
  ): Promise<DecisionAck> {
    const response = await this.fetchImpl(
      this.url(`/runs/${runId}/tasks/${taskId}/decision`),
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(decision),
      },
    );
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as DecisionAck;
  }
}
