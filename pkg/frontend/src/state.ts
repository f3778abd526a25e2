/**
 * Pure view-model: (latest status, client clock) -> everything the DOM
 * shows. No network or DOM access here, so the whole display logic is
 * unit-testable.
 */

import type { ServerStatus } from "./schema.js";

/** Band thresholds mirrored from the controller's rule base. Boundary
 * values belong to the middle band. */
export const BANDS = {
  temperature: { low: 25, high: 35 },
  humidity: { low: 40, high: 70 },
  soil: { low: 10, high: 20 },
} as const;

export type Band = "low" | "medium" | "high";

export function bandOf(value: number, kind: keyof typeof BANDS): Band {
  const { low, high } = BANDS[kind];
  if (value < low) return "low";
  if (value > high) return "high";
  return "medium";
}

export const BAND_COLORS: Record<Band, string> = {
  low: "#d9822b", // dry/cold side
  medium: "#2b8a3e", // target band
  high: "#1971c2", // wet/hot side
};

export interface GaugeView {
  label: string;
  value: number | null;
  unit: string;
  band: Band | null;
  color: string;
}

export interface PumpView {
  on: boolean;
  dutyLabel: string;
  /** Whole seconds left on the current cycle, ticking with the client clock. */
  countdownS: number;
}

export interface DashboardView {
  gauges: GaugeView[];
  pump: PumpView;
  mode: "auto" | "rule" | "manual";
  stale: boolean;
  eventCount: number;
}

/** Broadcast cadence the service is expected to hold (poll interval). */
export const EXPECTED_INTERVAL_MS = 2000;
/** Status older than this many missed intervals is flagged stale. */
export const STALE_AFTER_INTERVALS = 3;

function gauge(
  label: string,
  unit: string,
  kind: keyof typeof BANDS,
  value: number | null,
): GaugeView {
  const band = value === null ? null : bandOf(value, kind);
  return {
    label,
    value,
    unit,
    band,
    color: band === null ? "#868e96" : BAND_COLORS[band],
  };
}

/**
 * Remaining pump milliseconds as of `clientNowMs`, given when the
 * snapshot was received. The service reports remaining time as of its
 * own last event; the dashboard ticks it down locally between pushes.
 */
export function remainingAt(
  status: ServerStatus,
  receivedAtMs: number,
  clientNowMs: number,
): number {
  if (!status.pump_on) return 0;
  const elapsed = Math.max(0, clientNowMs - receivedAtMs);
  return Math.max(0, status.remaining_pump_ms - elapsed);
}

export function isStale(receivedAtMs: number | null, clientNowMs: number): boolean {
  if (receivedAtMs === null) return true;
  return clientNowMs - receivedAtMs > EXPECTED_INTERVAL_MS * STALE_AFTER_INTERVALS;
}

export function buildView(
  status: ServerStatus | null,
  receivedAtMs: number | null,
  clientNowMs: number,
): DashboardView {
  const reading = status?.reading ?? null;
  const gauges = [
    gauge("Temperature", "°C", "temperature", reading?.t_c ?? null),
    gauge("Humidity", "%", "humidity", reading?.h_pct ?? null),
    gauge("Soil moisture", "%", "soil", reading?.m_pct ?? null),
  ];

  const remaining =
    status !== null && receivedAtMs !== null
      ? remainingAt(status, receivedAtMs, clientNowMs)
      : 0;
  const on = (status?.pump_on ?? false) && remaining > 0;
  const duty = status?.last_decision?.duty ?? null;

  return {
    gauges,
    pump: {
      on,
      dutyLabel: duty === null ? "—" : duty.toUpperCase(),
      countdownS: Math.ceil(remaining / 1000),
    },
    mode: status?.mode ?? "rule",
    stale: isStale(receivedAtMs, clientNowMs),
    eventCount: status?.event_count ?? 0,
  };
}

/**
 * Override button debounce: after an override is sent, the buttons stay
 * disabled until either the server's event counter moves past the count
 * at send time or a timeout passes (so a lost reply cannot wedge the UI).
 */
export interface OverrideGate {
  sentAtMs: number;
  eventCountAtSend: number;
}

export const OVERRIDE_TIMEOUT_MS = 3000;

export function overridesEnabled(
  gate: OverrideGate | null,
  status: ServerStatus | null,
  clientNowMs: number,
): boolean {
  if (gate === null) return true;
  if (clientNowMs - gate.sentAtMs > OVERRIDE_TIMEOUT_MS) return true;
  return status !== null && status.event_count > gate.eventCountAtSend;
}
