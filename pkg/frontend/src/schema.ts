/**
 * Runtime validation of service payloads. The dashboard only ever talks
 * to the HTTP/WebSocket interface, so everything it knows about the
 * system arrives through these schemas.
 */

import { z } from "zod";

export const readingSchema = z.object({
  t_c: z.number(),
  h_pct: z.number(),
  m_pct: z.number(),
  ts_ms: z.number().int(),
});

export const decisionSchema = z.object({
  duty: z.enum(["full", "half", "off"]),
  on_time_ms: z.number().int().nonnegative(),
});

export const statusSchema = z.object({
  mode: z.enum(["auto", "rule", "manual"]),
  reading: readingSchema.nullable(),
  pump_on: z.boolean(),
  remaining_pump_ms: z.number().int().nonnegative(),
  pump_deadline_ms: z.number().int().nullable(),
  last_decision: decisionSchema.nullable(),
  event_count: z.number().int().nonnegative(),
  as_of_ms: z.number().int().nullable(),
});

export type Reading = z.infer<typeof readingSchema>;
export type Decision = z.infer<typeof decisionSchema>;
export type ServerStatus = z.infer<typeof statusSchema>;

/** Parse one WebSocket/HTTP status payload; null if it doesn't conform. */
export function parseStatus(payload: unknown): ServerStatus | null {
  const result = statusSchema.safeParse(payload);
  return result.success ? result.data : null;
}
