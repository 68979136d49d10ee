// Run view-model built purely from the event stream. The store never holds
// decision state of its own: the queue is exactly the set of tasks whose
// streamed status is awaiting_review.

import type { EvaluationReport, RunEvent, RunStatus, TaskStatus } from './types';

export interface NodeState {
  id: string;
  kind: string;
  agent: string;
  status: TaskStatus;
  revisionCount: number;
  degraded: boolean;
}

export interface QueueItem {
  taskId: string;
  report: EvaluationReport | null;
  assetId: string | null;
  assetDigest: string | null;
}

const STATUS_COLORS: Record<TaskStatus, string> = {
  pending: '#8888a0',
  running: '#3b82f6',
  succeeded: '#22c55e',
  needs_revision: '#eab308',
  failed: '#ef4444',
  awaiting_review: '#a855f7',
};

export function statusColor(status: TaskStatus): string {
  return STATUS_COLORS[status] ?? '#8888a0';
}

/** Placeholder preview: a stable color derived from the asset digest. */
export function digestColor(contentDigest: string): string {
  const hex = contentDigest.replace(/[^0-9a-f]/gi, '').padEnd(6, '0');
  return `#${hex.slice(0, 6)}`;
}

export class RunStore {
  runId = '';
  runStatus: RunStatus = 'created';
  nodes = new Map<string, NodeState>();
  edges: [string, string][] = [];
  reports = new Map<string, EvaluationReport>();
  assetIds = new Map<string, string>();
  assetDigests = new Map<string, string>();
  lastSeq = 0;
  private listeners = new Set<() => void>();

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  /** Apply one streamed event; duplicates (seq <= lastSeq) are ignored. */
  apply(event: RunEvent): boolean {
    if (event.seq <= this.lastSeq) return false;
    this.lastSeq = event.seq;
    const p = event.payload;
    switch (event.kind) {
      case 'run_started':
        this.runId = String(p.run_id ?? '');
        this.runStatus = 'running';
        break;
      case 'tasks_planned': {
        const tasks = p.tasks as Array<Record<string, unknown>>;
        for (const task of tasks) {
          this.nodes.set(String(task.id), {
            id: String(task.id),
            kind: String(task.kind),
            agent: String(task.agent),
            status: task.status as TaskStatus,
            revisionCount: Number(task.revision_count ?? 0),
            degraded: false,
          });
        }
        this.edges = (p.edges as [string, string][]) ?? [];
        break;
      }
      case 'task_status_changed': {
        const node = this.nodes.get(String(p.task_id));
        if (node) {
          node.status = p.to as TaskStatus;
          node.revisionCount = Number(p.revision_count ?? node.revisionCount);
        }
        break;
      }
      case 'evaluation_completed': {
        const report = p.report as unknown as EvaluationReport;
        this.reports.set(String(p.target_task_id), report);
        break;
      }
      case 'review_requested': {
        const report = p.report as unknown as EvaluationReport;
        this.reports.set(String(p.task_id), report);
        if (p.asset_id) this.assetIds.set(String(p.task_id), String(p.asset_id));
        if (p.asset_digest) this.assetDigests.set(String(p.task_id), String(p.asset_digest));
        break;
      }
      case 'asset_degraded': {
        const node = this.nodes.get(String(p.task_id));
        if (node) node.degraded = true;
        break;
      }
      case 'run_completed':
        this.runStatus = 'completed';
        break;
      case 'run_failed':
        this.runStatus = 'failed';
        break;
      default:
        break; // unknown events are tolerated, forward compatibility
    }
    this.notify();
    return true;
  }

  applyAll(events: RunEvent[]): number {
    let applied = 0;
    for (const event of events) if (this.apply(event)) applied += 1;
    return applied;
  }

  /** Tasks currently awaiting a human decision, in task-id order. */
  reviewQueue(): QueueItem[] {
    const items: QueueItem[] = [];
    for (const node of [...this.nodes.values()].sort((a, b) => a.id.localeCompare(b.id))) {
      if (node.status === 'awaiting_review') {
        items.push({
          taskId: node.id,
          report: this.reports.get(node.id) ?? null,
          assetId: this.assetIds.get(node.id) ?? null,
          assetDigest: this.assetDigests.get(node.id) ?? null,
        });
      }
    }
    return items;
  }

  nodeList(): NodeState[] {
    return [...this.nodes.values()].sort((a, b) => a.id.localeCompare(b.id));
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }
}
