/** Protocol client: JSON request/response messages with id correlation.
 *
 * Messages are `{id, command, input}` requests answered by
 * `{id, command, status, output}` responses.  The transport is abstract so
 * the browser can use a WebSocket while tests drive a fake or a raw TCP
 * socket; the server answers strictly in order, but correlation is by id
 * so interleaved use stays safe.
 */

export interface Transport {
  send(text: string): void;
  close(): void;
  onmessage: ((text: string) => void) | null;
  onclose: (() => void) | null;
}

export class ProtocolError extends Error {
  constructor(
    public reason: string,
    public detail: Record<string, unknown> = {},
  ) {
    super(reason);
  }
}

export class ConnectionClosed extends Error {
  constructor() {
    super("connection closed");
  }
}

interface Pending {
  command: string;
  resolve: (output: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export class Client {
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private closed = false;

  constructor(private transport: Transport) {
    transport.onmessage = (text) => this.handle(text);
    transport.onclose = () => this.failAll();
  }

  request(
    command: string,
    input: Record<string, unknown> = {},
  ): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new ConnectionClosed());
    }
    const id = this.nextId++;
    return new Promise((resolve, reject) => {
      this.pending.set(id, { command, resolve, reject });
      this.transport.send(JSON.stringify({ id, command, input }));
    });
  }

  pendingCount(): number {
    return this.pending.size;
  }

  close(): void {
    this.transport.close();
    this.failAll();
  }

  private handle(text: string): void {
    let msg: { id: number; command: string; status: string; output: unknown };
    try {
      msg = JSON.parse(text);
    } catch {
      return; // not a protocol frame; ignore
    }
    const entry = this.pending.get(msg.id);
    if (!entry) return;
    this.pending.delete(msg.id);
    if (msg.status === "ok") {
      entry.resolve((msg.output ?? {}) as Record<string, unknown>);
    } else {
      const out = (msg.output ?? {}) as Record<string, unknown>;
      const { reason, ...detail } = out;
      entry.reject(new ProtocolError(String(reason ?? "unknown"), detail));
    }
  }

  private failAll(): void {
    this.closed = true;
    for (const entry of this.pending.values()) {
      entry.reject(new ConnectionClosed());
    }
    this.pending.clear();
  }
}

/** Browser transport over a WebSocket carrying one JSON message per frame. */
export function webSocketTransport(url: string): Promise<Transport> {
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    const transport: Transport = {
      send: (text) => ws.send(text),
      close: () => ws.close(),
      onmessage: null,
      onclose: null,
    };
    ws.onopen = () => resolve(transport);
    ws.onerror = () => reject(new ConnectionClosed());
    ws.onmessage = (ev) => transport.onmessage?.(String(ev.data));
    ws.onclose = () => transport.onclose?.();
  });
}
