/**
 * Panel state that is worth testing without a DOM: device tiles with a
 * locally ticking countdown, composer helpers, and history formatting.
 */

import type { DeviceEntry, EventRecord } from "./api.js";
import { MAX_DURATION_S, renderCommand, type Command } from "./protocol.js";

export interface DeviceTile {
  name: string;
  line: number;
  state: "off" | "on" | "on_timed";
  since: number | null;
  /** Seconds until auto-off; null unless a timed run is active. */
  remainingS: number | null;
  /** True when the server cut a requested run down to the device limit. */
  clamped: boolean;
}

/**
 * Tracks tiles between polls.  A poll is server truth and may move the
 * countdown anywhere (a re-arm legitimately jumps it up); local ticks
 * only ever count down, and never below zero.
 */
export class TileTracker {
  private tiles: DeviceTile[] = [];

  applyPoll(entries: DeviceEntry[]): DeviceTile[] {
    this.tiles = entries.map((entry) => ({
      name: entry.name,
      line: entry.line,
      state: entry.state,
      since: entry.since ?? null,
      remainingS: entry.state === "on_timed" ? Math.max(0, entry.remaining_s ?? 0) : null,
      clamped: entry.state === "on_timed" ? (entry.clamped ?? false) : false,
    }));
    return this.current();
  }

  /** One local 1 Hz countdown step between polls. */
  tick(): DeviceTile[] {
    for (const tile of this.tiles) {
      if (tile.remainingS !== null) {
        tile.remainingS = Math.max(0, tile.remainingS - 1);
      }
    }
    return this.current();
  }

  current(): DeviceTile[] {
    return this.tiles.map((tile) => ({ ...tile }));
  }
}

export type ComposeAction =
  | { kind: "on" }
  | { kind: "off" }
  | { kind: "on_timed"; durationS: number };

/** The exact body text sent over POST /commands for a composer choice. */
export function composeBody(device: string, action: ComposeAction): string {
  const command: Command = { appliance: device, op: action };
  return renderCommand(command);
}

/** Client-side duration gate: integer seconds in 1..86400, else null. */
export function parseDurationInput(raw: string): number | null {
  if (!/^[0-9]+$/.test(raw.trim())) {
    return null;
  }
  const value = parseInt(raw.trim(), 10);
  if (value < 1 || value > MAX_DURATION_S) {
    return null;
  }
  return value;
}

export interface HistoryRow {
  id: number;
  ts: number;
  label: string;
  detail: string;
  flags: string[];
}

/** Flatten one event-log record into something a table row can show. */
export function describeEvent(ev: EventRecord): HistoryRow {
  const flags: string[] = [];
  let label = ev.kind;
  let detail = "";
  switch (ev.kind) {
    case "message_accepted":
      label = "message";
      detail = `${ev.sender ?? "?"}: "${ev.body ?? ""}"`;
      flags.push("accepted");
      break;
    case "message_rejected": {
      label = "message";
      const sender = ev.sender ?? ev.msg_id ?? "?";
      detail = `${sender}: "${ev.body ?? ""}"`;
      const outcome = String(ev.outcome ?? "rejected");
      flags.push(outcome === "RejectedUnauthorized" ? "unauthorized" : outcome);
      if (ev.detail) {
        detail += ` (${ev.detail})`;
      }
      break;
    }
    case "transition":
      label = "transition";
      detail = `${ev.device}: ${ev.from} → ${ev.to} (${ev.cause})`;
      if (ev.clamped) {
        flags.push("clamped");
      }
      if (ev.source) {
        detail += ` via ${ev.source}`;
      }
      break;
    case "startup":
      detail = `snapshot ${ev.snapshot}, ${ev.recovered} recovered`;
      break;
    case "fatal":
      detail = String(ev.reason ?? "");
      flags.push("fatal");
      break;
  }
  return { id: ev.event_id, ts: ev.ts, label, detail, flags };
}

export function formatCountdown(seconds: number): string {
  const s = Math.max(0, Math.floor(seconds));
  const hh = Math.floor(s / 3600);
  const mm = Math.floor((s % 3600) / 60);
  const ss = s % 60;
  const pad = (n: number) => String(n).padStart(2, "0");
  return hh > 0 ? `${hh}:${pad(mm)}:${pad(ss)}` : `${mm}:${pad(ss)}`;
}
