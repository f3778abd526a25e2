/**
 * DOM wiring. All display decisions live in state.ts; this file only
 * renders a DashboardView and forwards button clicks.
 */

import { ServiceConnection, sendMode, sendOverride } from "./client.js";
import type { ServerStatus } from "./schema.js";
import {
  buildView,
  overridesEnabled,
  type DashboardView,
  type OverrideGate,
} from "./state.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8000";

let latest: ServerStatus | null = null;
let receivedAt: number | null = null;
let gate: OverrideGate | null = null;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
}

function render(view: DashboardView): void {
  for (const [i, g] of view.gauges.entries()) {
    const root = el(`gauge-${i}`);
    root.querySelector(".gauge-label")!.textContent = g.label;
    root.querySelector(".gauge-value")!.textContent =
      g.value === null ? "—" : `${g.value.toFixed(1)} ${g.unit}`;
    root.querySelector(".gauge-band")!.textContent = g.band ?? "no data";
    (root as HTMLElement).style.borderColor = g.color;
  }

  el("pump-state").textContent = view.pump.on
    ? `PUMPING (${view.pump.dutyLabel})`
    : "idle";
  el("pump-countdown").textContent = view.pump.on
    ? `${view.pump.countdownS} s remaining`
    : "";
  el("mode").textContent = view.mode;
  el("stale-banner").hidden = !view.stale;

  const enabled = overridesEnabled(gate, latest, Date.now());
  for (const button of document.querySelectorAll<HTMLButtonElement>("[data-duty]")) {
    button.disabled = !enabled;
  }
}

function tick(): void {
  render(buildView(latest, receivedAt, Date.now()));
}

const connection = new ServiceConnection(SERVICE_URL, {
  onStatus(status, at) {
    latest = status;
    receivedAt = at;
    tick();
  },
  onConnectionChange(connected) {
    el("connection").textContent = connected ? "connected" : "reconnecting…";
    tick();
  },
});

for (const button of document.querySelectorAll<HTMLButtonElement>("[data-duty]")) {
  button.addEventListener("click", () => {
    gate = { sentAtMs: Date.now(), eventCountAtSend: latest?.event_count ?? 0 };
    tick(); // optimistic disable before the request settles
    void sendOverride(SERVICE_URL, button.dataset.duty as "full" | "half" | "off");
  });
}

el("mode-select").addEventListener("change", (event) => {
  const mode = (event.target as HTMLSelectElement).value as "auto" | "rule" | "manual";
  void sendMode(SERVICE_URL, mode);
});

connection.start();
setInterval(tick, 250); // local countdown/staleness tick between pushes
