// Optimistic decision submission. A submitted item disappears from the queue
// immediately; a 409 (someone else decided first, or the task moved on)
// reverts the optimistic hide and refreshes the queue from the server. No
// decision state survives acknowledgement: once the stream confirms the
// status change, the optimistic flag is dropped.

import { ApiClient, ApiError } from './api';
import type { RunStore, QueueItem } from './store';
import type { DecisionAck, DecisionRequest, ReviewItem } from './types';

export interface SubmissionResult {
  ok: boolean;
  conflict: boolean;
  ack?: DecisionAck;
  refreshed?: ReviewItem[];
}

export class DecisionController {
  private readonly optimistic = new Set<string>();
  private readonly inFlight = new Set<string>();

  constructor(
    private readonly api: ApiClient,
    private readonly runId: string,
    private readonly store: RunStore,
  ) {
    store.subscribe(() => this.dropAcknowledged());
  }

  /** Queue as the view should render it: server truth minus optimistic hides. */
  visibleQueue(): QueueItem[] {
    return this.store.reviewQueue().filter((item) => !this.optimistic.has(item.taskId));
  }

  isPending(taskId: string): boolean {
    return this.optimistic.has(taskId) || this.inFlight.has(taskId);
  }

  async submit(taskId: string, decision: DecisionRequest): Promise<SubmissionResult> {
    this.optimistic.add(taskId);
    this.inFlight.add(taskId);
    try {
      const ack = await this.api.postDecision(this.runId, taskId, decision);
      return { ok: true, conflict: false, ack };
    } catch (error) {
      this.optimistic.delete(taskId);
      if (error instanceof ApiError && error.status === 409) {
        const refreshed = await this.api.getReviews(this.runId);
        return { ok: false, conflict: true, refreshed };
      }
      throw error;
    } finally {
      this.inFlight.delete(taskId);
    }
  }

  private dropAcknowledged(): void {
    for (const taskId of [...this.optimistic]) {
      const node = this.store.nodes.get(taskId);
      if (node && node.status !== 'awaiting_review') {
        this.optimistic.delete(taskId);
      }
    }
  }
}
