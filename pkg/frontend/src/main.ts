// Bootstrap: read ?run=<id>&api=<base> from the URL, subscribe to the event
// stream, and wire decisions back through the service.

import { ApiClient } from './api';
import { DecisionController } from './decisions';
import { RunStore } from './store';
import { EventStreamClient } from './stream';
import { ConsoleView } from './view';

function start(): void {
  const params = new URLSearchParams(window.location.search);
  const runId = params.get('run');
  const baseUrl = params.get('api') ?? window.location.origin;
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app element');
  if (!runId) {
    root.textContent = 'missing ?run=<run_id> query parameter';
    return;
  }

  const store = new RunStore();
  const api = new ApiClient(baseUrl);
  const decisions = new DecisionController(api, runId, store);

  const view = new ConsoleView(root, store, decisions, (taskId, action) => {
    const decision =
      action === 'reject'
        ? { action, note: window.prompt('revision note?') ?? '' }
        : action === 'override_tool'
          ? { action, tool: window.prompt('tool name?') ?? '' }
          : { action };
    void decisions.submit(taskId, decision).then((result) => {
      if (result.conflict) view.render(); // server truth wins; queue refreshed
    });
  });

  const stream = new EventStreamClient({
    baseUrl,
    runId,
    store,
    onStaleChange: (stale) => view.setStale(stale),
  });
  stream.connect();
}

start();
