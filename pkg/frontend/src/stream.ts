// Event-stream subscription with automatic resubscribe. On disconnect the
// client flags the view as stale and reconnects asking for the backlog after
// the last applied seq; the store's dedupe makes overlapping replays safe.

import type { RunStore } from './store';
import type { RunEvent } from './types';

export interface EventSourceLike {
  onmessage: ((event: { data: string }) => void) | null;
  onerror: ((event: unknown) => void) | null;
  onopen: ((event: unknown) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface StreamOptions {
  baseUrl: string;
  runId: string;
  store: RunStore;
  factory?: EventSourceFactory;
  reconnectDelayMs?: number;
  onStaleChange?: (stale: boolean) => void;
}

const defaultFactory: EventSourceFactory = (url) =>
  new EventSource(url) as unknown as EventSourceLike;

export class EventStreamClient {
  private source: EventSourceLike | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;
  stale = false;
  connects = 0;

  constructor(private readonly options: StreamOptions) {}

  private url(): string {
    const { baseUrl, runId, store } = this.options;
    return `${baseUrl.replace(/\/$/, '')}/runs/${runId}/events?after=${store.lastSeq}`;
  }

  connect(): void {
    if (this.closed) return;
    this.connects += 1;
    const factory = this.options.factory ?? defaultFactory;
    const source = factory(this.url());
    this.source = source;

    source.onopen = () => this.setStale(false);
    source.onmessage = (message) => {
      this.setStale(false);
      let event: RunEvent;
      try {
        event = JSON.parse(message.data) as RunEvent;
      } catch {
        return; // skip malformed frames rather than wedging the stream
      }
      this.options.store.apply(event);
      if (this.options.store.runStatus === 'completed' || this.options.store.runStatus === 'failed') {
        this.close();
      }
    };
    source.onerror = () => {
      if (this.closed) return;
      this.setStale(true);
      source.close();
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.reconnectTimer !== null || this.closed) return;
    const delay = this.options.reconnectDelayMs ?? 1000;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, delay);
  }

  private setStale(stale: boolean): void {
    if (this.stale !== stale) {
      this.stale = stale;
      this.options.onStaleChange?.(stale);
    }
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.source?.close();
    this.source = null;
  }
}
