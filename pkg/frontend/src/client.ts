/**
 * Service connection: WebSocket /stream with exponential reconnect
 * backoff, plus the two HTTP mutations (override, mode).
 */

import { parseStatus, type ServerStatus } from "./schema.js";

export interface ConnectionCallbacks {
  onStatus(status: ServerStatus, receivedAtMs: number): void;
  onConnectionChange(connected: boolean): void;
}

const BACKOFF_BASE_MS = 500;
const BACKOFF_MAX_MS = 10_000;

export class ServiceConnection {
  private ws: WebSocket | null = null;
  private attempts = 0;
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly callbacks: ConnectionCallbacks,
  ) {}

  start(): void {
    this.closed = false;
    this.connect();
  }

  stop(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.ws?.close();
  }

  private wsUrl(): string {
    return this.baseUrl.replace(/^http/, "ws") + "/stream";
  }

  private connect(): void {
    const ws = new WebSocket(this.wsUrl());
    this.ws = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.callbacks.onConnectionChange(true);
    };
    ws.onmessage = (event) => {
      let payload: unknown;
      try {
        payload = JSON.parse(event.data as string);
      } catch {
        return; // ignore malformed frames, the next push supersedes them
      }
      const status = parseStatus(payload);
      if (status !== null) this.callbacks.onStatus(status, Date.now());
    };
    ws.onclose = () => {
      this.callbacks.onConnectionChange(false);
      if (!this.closed) this.scheduleReconnect();
    };
    ws.onerror = () => ws.close();
  }

  private scheduleReconnect(): void {
    const delay = Math.min(BACKOFF_MAX_MS, BACKOFF_BASE_MS * 2 ** this.attempts);
    this.attempts += 1;
    this.timer = setTimeout(() => this.connect(), delay);
  }
}

export async function sendOverride(
  baseUrl: string,
  duty: "full" | "half" | "off",
): Promise<boolean> {
  const response = await fetch(`${baseUrl}/override`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ duty, source: "dashboard" }),
  });
  return response.ok;
}

export async function sendMode(
  baseUrl: string,
  mode: "auto" | "rule" | "manual",
): Promise<boolean> {
  const response = await fetch(`${baseUrl}/mode`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ mode }),
  });
  return response.ok;
}
