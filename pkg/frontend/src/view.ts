// DOM rendering: a status-colored node list, the edge list, the review queue
// with digest-colored asset placeholders, and a stale-connection banner.

import { DecisionController } from './decisions';
import { digestColor, statusColor, RunStore, NodeState, QueueItem } from './store';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderNode(node: NodeState, selected: boolean): HTMLElement {
  const row = el('div', `node${selected ? ' selected' : ''}`);
  row.dataset.taskId = node.id;
  const dot = el('span', 'dot');
  dot.style.backgroundColor = statusColor(node.status);
  row.append(
    dot,
    el('span', 'node-id', node.id),
    el('span', 'node-status', node.status + (node.degraded ? ' (degraded)' : '')),
    el('span', 'node-rev', node.revisionCount ? `rev ${node.revisionCount}` : ''),
  );
  return row;
}

function renderQueueItem(
  item: QueueItem,
  assetDigest: string | null,
  onDecision: (taskId: string, action: 'approve' | 'reject' | 'override_tool') => void,
): HTMLElement {
  const card = el('div', 'review-card');
  card.dataset.taskId = item.taskId;

  const preview = el('div', 'asset-preview');
  if (assetDigest) preview.style.backgroundColor = digestColor(assetDigest);
  card.append(preview, el('div', 'review-task', item.taskId));

  if (item.report) {
    card.append(
      el(
        'div',
        'review-report',
        `verdict ${item.report.verdict}, similarity ${item.report.text_similarity.toFixed(2)}` +
          (item.report.recommended_tool ? `, try ${item.report.recommended_tool}` : ''),
      ),
    );
  }

  for (const action of ['approve', 'reject', 'override_tool'] as const) {
    const button = el('button', `decision-${action}`, action.replace('_', ' '));
    button.addEventListener('click', () => onDecision(item.taskId, action));
    card.append(button);
  }
  return card;
}

export class ConsoleView {
  private selectedTask: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly store: RunStore,
    private readonly decisions: DecisionController,
    private readonly onDecision: (
      taskId: string,
      action: 'approve' | 'reject' | 'override_tool',
    ) => void,
  ) {
    store.subscribe(() => this.render());
    this.render();
  }

  setStale(stale: boolean): void {
    this.root.classList.toggle('stale', stale);
    const banner = this.root.querySelector('.stale-banner');
    if (banner) (banner as HTMLElement).style.display = stale ? 'block' : 'none';
  }

  render(): void {
    this.root.textContent = '';

    const banner = el('div', 'stale-banner', 'connection lost, resubscribing');
    banner.style.display = 'none';
    this.root.append(banner);

    const header = el('div', 'run-header', `${this.store.runId || 'run'} — ${this.store.runStatus}`);
    this.root.append(header);

    const graph = el('div', 'graph');
    for (const node of this.store.nodeList()) {
      const row = renderNode(node, node.id === this.selectedTask);
      row.addEventListener('click', () => {
        this.selectedTask = node.id;
        this.render();
      });
      graph.append(row);
    }
    this.root.append(graph);

    const queue = el('div', 'review-queue');
    queue.append(el('h2', undefined, 'awaiting review'));
    for (const item of this.decisions.visibleQueue()) {
      queue.append(renderQueueItem(item, item.assetDigest, this.onDecision));
    }
    this.root.append(queue);
  }
}
