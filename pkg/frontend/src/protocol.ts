/**
 * Wire protocol: binary frame records and the session REST/WebSocket client.
 *
 * Frame layout (little-endian): u32 step, u32 count, then per particle one
 * u16 per axis (position quantized over the world extent) and u8 r, g, b.
 */

export interface Frame {
  step: number;
  count: number;
  /** unit coordinates in [0, 1], length count * dim */
  positions: Float64Array;
  /** rgb bytes, length count * 3 */
  colors: Uint8Array;
}

export function decodeFrame(buffer: ArrayBuffer, dim: number): Frame {
  const view = new DataView(buffer);
  const step = view.getUint32(0, true);
  const count = view.getUint32(4, true);
  const record = dim * 2 + 3;
  if (buffer.byteLength !== 8 + count * record) {
    throw new Error(
      `malformed frame: ${buffer.byteLength} bytes for ${count} particles of ${record}`,
    );
  }
  const positions = new Float64Array(count * dim);
  const colors = new Uint8Array(count * 3);
  for (let i = 0; i < count; i++) {
    const base = 8 + i * record;
    for (let a = 0; a < dim; a++) {
      positions[i * dim + a] = view.getUint16(base + a * 2, true) / 65535;
    }
    for (let c = 0; c < 3; c++) {
      colors[i * 3 + c] = view.getUint8(base + dim * 2 + c);
    }
  }
  return { step, count, positions, colors };
}

export interface SessionStatus {
  id: string;
  status: "running" | "paused";
  step_count: number;
  n_particles: number;
  dimensionality: number;
  extent: number[];
  state_hash: string;
  iec_population: number[];
}

export interface Candidate {
  id: number;
  recipe: string;
  thumbnail?: string[];
}

/** Thin typed wrapper over the session endpoints. */
export class SessionClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<any> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      const body = await response.text();
      throw new Error(`${init?.method ?? "GET"} ${path} -> ${response.status}: ${body}`);
    }
    if (response.status === 204) return null;
    return response.json();
  }

  createSession(doc: object): Promise<SessionStatus> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
  }

  status(id: string): Promise<SessionStatus> {
    return this.request(`/sessions/${id}`);
  }

  events(id: string): Promise<{ events: Array<Record<string, unknown>> }> {
    return this.request(`/sessions/${id}/events`);
  }

  command(id: string, payload: object): Promise<any> {
    return this.request(`/sessions/${id}/commands`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  destroy(id: string): Promise<null> {
    return this.request(`/sessions/${id}`, { method: "DELETE" });
  }

  streamUrl(id: string, decimation = 10): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/sessions/${id}/stream?decimation=${decimation}`;
  }
}
