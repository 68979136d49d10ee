// Wire types mirroring the service's JSON responses and event payloads.

export type TaskStatus =
  | 'pending'
  | 'running'
  | 'succeeded'
  | 'needs_revision'
  | 'failed'
  | 'awaiting_review';

export type RunStatus = 'created' | 'running' | 'completed' | 'failed';

export interface RunEvent {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface NodeView {
  id: string;
  kind: string;
  agent: string;
  status: TaskStatus;
  revision_count: number;
  degraded?: boolean;
}

export interface GraphSnapshot {
  run_id: string;
  status: RunStatus;
  nodes: NodeView[];
  edges: [string, string][];
}

export interface EvaluationReport {
  task_id: string;
  text_similarity: number;
  identity_ok: boolean;
  av_sync_ok: boolean;
  narrative_ok: boolean;
  verdict: 'accept' | 'revise' | 'escalate';
  recommended_tool: string | null;
}

export interface ReviewItem {
  task_id: string;
  asset: { asset_id: string; kind: string; content_digest: string } | null;
  report: EvaluationReport | null;
  options: string[];
}

export type DecisionAction = 'approve' | 'reject' | 'override_tool';

export interface DecisionRequest {
  action: DecisionAction;
  note?: string;
  tool?: string;
}

export interface DecisionAck {
  run_id: string;
  task_id: string;
  action: string;
  seq: number;
}
