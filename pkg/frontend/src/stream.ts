// Newline-delimited JSON event stream with reconnect and replay dedupe.
// The server replays every event from seq 0 on reconnect; the consumer
// drops already-seen sequence numbers so downstream handlers see each
// event exactly once, in order.

export interface StreamHandlers<T> {
  onEvent(event: T): void;
  onStale?(stale: boolean): void;
  onEnd?(): void;
}

export interface StreamOptions {
  fetchFn?: typeof fetch;
  backoffMs?: number[];
  isFinal?(event: unknown): boolean;
  sleep?(ms: number): Promise<void>;
}

const DEFAULT_BACKOFF = [500, 1000, 2000, 5000];

function defaultSleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export class NdjsonStream<T extends { seq: number }> {
  private stopped = false;
  private lastSeq = -1;
  private fetchFn: typeof fetch;
  private backoff: number[];
  private isFinal: (event: unknown) => boolean;
  private sleep: (ms: number) => Promise<void>;

  constructor(
    private url: string,
    private handlers: StreamHandlers<T>,
    options: StreamOptions = {},
  ) {
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
    this.backoff = options.backoffMs ?? DEFAULT_BACKOFF;
    this.isFinal = options.isFinal ?? ((event) => (event as { source?: string }).source === "run");
    this.sleep = options.sleep ?? defaultSleep;
  }

  stop(): void {
    this.stopped = true;
  }

  async run(): Promise<void> {
    let attempt = 0;
    while (!this.stopped) {
      try {
        const response = await this.fetchFn(this.url);
        if (!response.ok || !response.body) {
          throw new Error(`stream request failed: HTTP ${response.status}`);
        }
        this.handlers.onStale?.(false);
        attempt = 0;
        const finished = await this.consume(response.body);
        if (finished || this.stopped) {
          this.handlers.onEnd?.();
          return;
        }
        throw new Error("stream ended without a final event");
      } catch (err) {
        if (this.stopped) return;
        this.handlers.onStale?.(true);
        const delay = this.backoff[Math.min(attempt, this.backoff.length - 1)];
        attempt += 1;
        await this.sleep(delay);
      }
    }
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<boolean> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        let newline = buffer.indexOf("\n");
        while (newline >= 0) {
          const line = buffer.slice(0, newline).trim();
          buffer = buffer.slice(newline + 1);
          if (line) {
            const event = JSON.parse(line) as T;
            if (event.seq > this.lastSeq) {
              this.lastSeq = event.seq;
              this.handlers.onEvent(event);
            }
            if (this.isFinal(event)) return true;
          }
          newline = buffer.indexOf("\n");
        }
        if (this.stopped) return false;
      }
    } finally {
      reader.releaseLock();
    }
    return false;
  }
}
