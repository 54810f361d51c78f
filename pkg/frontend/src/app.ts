/**
 * Single-page control panel.
 *
 * One view at a time: a login card that probes GET /devices with the
 * entered token, then the live panel: device tiles with countdowns, a
 * composer that sends grammar-exact command text, and the event
 * history.  The token lives in memory only; one poll is in flight at a
 * time, and between successful polls the countdowns tick locally.
 */

import { ApiClient, AuthError, NetworkError, type EventRecord } from "./api.js";
import {
  TileTracker,
  composeBody,
  describeEvent,
  formatCountdown,
  parseDurationInput,
  type ComposeAction,
  type DeviceTile,
} from "./model.js";

const POLL_INTERVAL_MS = 1000;
const HISTORY_PAGE = 50;

let client: ApiClient | null = null;
let tracker = new TileTracker();
let tiles: DeviceTile[] = [];
let pollTimer: number | null = null;
let pollInFlight = false;
let connectionLost = false;
let historyRows: EventRecord[] = [];
let lastEventId = 0;

function app(): HTMLElement {
  return document.getElementById("app") as HTMLElement;
}

// ---------------------------------------------------------------------------
// login

function renderLogin(message = "", kind: "error" | "info" | "" = ""): void {
  stopPolling();
  client = null;
  app().innerHTML = `
    <div class="login-card">
      <h1>homerelay</h1>
      <p class="sub">appliance control panel</p>
      ${message ? `<div class="banner ${kind}">${escapeHtml(message)}</div>` : ""}
      <form id="login-form">
        <label>access token
          <input id="token-input" type="password" autocomplete="off" autofocus />
        </label>
        <button type="submit">connect</button>
      </form>
    </div>`;
  const form = document.getElementById("login-form") as HTMLFormElement;
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const token = (document.getElementById("token-input") as HTMLInputElement).value;
    void login(token);
  });
}

async function login(token: string): Promise<void> {
  if (!token) {
    renderLogin("enter the service token", "error");
    return;
  }
  const candidate = new ApiClient("", token);
  try {
    const response = await candidate.getDevices();
    client = candidate;
    tracker = new TileTracker();
    tiles = tracker.applyPoll(response.devices);
    renderMain();
    startPolling();
    void refreshHistory(true);
  } catch (err) {
    if (err instanceof AuthError) {
      renderLogin("token rejected, try again", "error");
    } else if (err instanceof NetworkError) {
      renderLogin("server unreachable, retry in a moment", "error");
    } else {
      renderLogin(`unexpected failure: ${String(err)}`, "error");
    }
  }
}

// ---------------------------------------------------------------------------
// main view

function renderMain(): void {
  app().innerHTML = `
    <header>
      <h1>homerelay</h1>
      <div>
        <span id="conn-state" class="conn ok">live</span>
        <button id="logout">log out</button>
      </div>
    </header>
    <div id="banner-slot"></div>
    <section>
      <h2>devices</h2>
      <div id="device-grid" class="grid"></div>
    </section>
    <section class="composer">
      <h2>send a command</h2>
      <form id="compose-form">
        <select id="compose-device"></select>
        <select id="compose-action">
          <option value="on">on</option>
          <option value="off">off</option>
          <option value="on_timed">on for&hellip;</option>
        </select>
        <input id="compose-duration" type="text" inputmode="numeric"
               placeholder="seconds (1..86400)" disabled />
        <button type="submit">send</button>
      </form>
      <p class="hint">the panel sends the same text an SMS would, e.g.
        <code>cooker 1 1800</code></p>
    </section>
    <section>
      <h2>history <button id="history-refresh">refresh</button></h2>
      <div id="history-box"><p class="empty">loading&hellip;</p></div>
      <button id="history-more">load more</button>
    </section>`;

  (document.getElementById("logout") as HTMLButtonElement).addEventListener("click", () => {
    renderLogin("logged out", "info");
  });
  const action = document.getElementById("compose-action") as HTMLSelectElement;
  action.addEventListener("change", () => {
    const duration = document.getElementById("compose-duration") as HTMLInputElement;
    duration.disabled = action.value !== "on_timed";
  });
  (document.getElementById("compose-form") as HTMLFormElement).addEventListener(
    "submit",
    (ev) => {
      ev.preventDefault();
      void sendCompose();
    },
  );
  (document.getElementById("history-refresh") as HTMLButtonElement).addEventListener(
    "click",
    () => void refreshHistory(true),
  );
  (document.getElementById("history-more") as HTMLButtonElement).addEventListener(
    "click",
    () => void refreshHistory(false),
  );
  renderTiles();
}

function renderTiles(): void {
  const grid = document.getElementById("device-grid");
  if (!grid) {
    return;
  }
  grid.innerHTML = tiles
    .map((tile) => {
      const stateClass = tile.state === "off" ? "off" : "on";
      let detail = "";
      if (tile.state === "on_timed" && tile.remainingS !== null) {
        detail = `<div class="countdown">${formatCountdown(tile.remainingS)}</div>`;
        if (tile.clamped) {
          detail += `<div class="badge">limited to max</div>`;
        }
      } else if (tile.state === "on" && tile.since !== null) {
        detail = `<div class="countdown">on since ${new Date(tile.since * 1000).toLocaleTimeString()}</div>`;
      }
      return `
        <div class="tile ${stateClass}">
          <div class="tile-name">${escapeHtml(tile.name)}</div>
          <div class="tile-state">${tile.state === "on_timed" ? "on (timed)" : tile.state}</div>
          ${detail}
          <div class="tile-line">line ${tile.line}</div>
        </div>`;
    })
    .join("");

  const select = document.getElementById("compose-device") as HTMLSelectElement | null;
  if (select && select.options.length !== tiles.length) {
    const previous = select.value;
    select.innerHTML = tiles
      .map((t) => `<option value="${escapeHtml(t.name)}">${escapeHtml(t.name)}</option>`)
      .join("");
    if (tiles.some((t) => t.name === previous)) {
      select.value = previous;
    }
  }
}

function setConnectionState(ok: boolean): void {
  connectionLost = !ok;
  const el = document.getElementById("conn-state");
  if (el) {
    el.className = ok ? "conn ok" : "conn lost";
    el.textContent = ok ? "live" : "reconnecting…";
  }
}

function banner(text: string, kind: "error" | "info"): void {
  const slot = document.getElementById("banner-slot");
  if (slot) {
    slot.innerHTML = `<div class="banner ${kind}">${escapeHtml(text)}</div>`;
  }
}

// ---------------------------------------------------------------------------
// polling

function startPolling(): void {
  stopPolling();
  pollTimer = window.setInterval(() => {
    void pollOnce();
  }, POLL_INTERVAL_MS);
}

function stopPolling(): void {
  if (pollTimer !== null) {
    window.clearInterval(pollTimer);
    pollTimer = null;
  }
}

async function pollOnce(): Promise<void> {
  if (!client) {
    return;
  }
  if (pollInFlight) {
    tiles = tracker.tick();
    renderTiles();
    return;
  }
  pollInFlight = true;
  try {
    const response = await client.getDevices();
    tiles = tracker.applyPoll(response.devices);
    if (connectionLost) {
      setConnectionState(true);
    }
  } catch (err) {
    if (err instanceof AuthError) {
      renderLogin("session token no longer accepted", "error");
      return;
    }
    tiles = tracker.tick();
    setConnectionState(false);
  } finally {
    pollInFlight = false;
  }
  renderTiles();
}

// ---------------------------------------------------------------------------
// composer

async function sendCompose(): Promise<void> {
  if (!client) {
    return;
  }
  const device = (document.getElementById("compose-device") as HTMLSelectElement).value;
  const actionKind = (document.getElementById("compose-action") as HTMLSelectElement).value;
  const durationRaw = (document.getElementById("compose-duration") as HTMLInputElement).value;
  if (!device) {
    banner("no device selected", "error");
    return;
  }
  let action: ComposeAction;
  if (actionKind === "on_timed") {
    const duration = parseDurationInput(durationRaw);
    if (duration === null) {
      banner("duration must be a whole number of seconds, 1..86400", "error");
      return;
    }
    action = { kind: "on_timed", durationS: duration };
  } else {
    action = actionKind === "on" ? { kind: "on" } : { kind: "off" };
  }
  const body = composeBody(device, action);
  try {
    const result = await client.postCommand(body);
    if (result.accepted) {
      banner(`sent "${body}"`, "info");
    } else {
      banner(`rejected: ${result.error}`, "error");
    }
  } catch (err) {
    banner(
      err instanceof NetworkError ? "server unreachable" : `failed: ${String(err)}`,
      "error",
    );
    return;
  }
  await pollOnce();
  void refreshHistory(true);
}

// ---------------------------------------------------------------------------
// history

async function refreshHistory(reset: boolean): Promise<void> {
  if (!client) {
    return;
  }
  try {
    if (reset) {
      historyRows = await client.getMessages(0, HISTORY_PAGE);
      lastEventId = historyRows.length
        ? historyRows[historyRows.length - 1].event_id
        : 0;
    } else {
      const more = await client.getMessages(lastEventId, HISTORY_PAGE);
      historyRows = historyRows.concat(more);
      if (more.length) {
        lastEventId = more[more.length - 1].event_id;
      }
    }
  } catch {
    return; // the poll loop owns connection state reporting
  }
  renderHistory();
}

function renderHistory(): void {
  const box = document.getElementById("history-box");
  if (!box) {
    return;
  }
  if (!historyRows.length) {
    box.innerHTML = `<p class="empty">nothing has happened yet</p>`;
    return;
  }
  const rows = historyRows
    .map(describeEvent)
    .map(
      (row) => `
        <tr>
          <td>#${row.id}</td>
          <td>${new Date(row.ts * 1000).toLocaleString()}</td>
          <td>${escapeHtml(row.label)}</td>
          <td>${escapeHtml(row.detail)}
            ${row.flags.map((f) => `<span class="flag ${flagClass(f)}">${escapeHtml(f)}</span>`).join(" ")}
          </td>
        </tr>`,
    )
    .join("");
  box.innerHTML = `<table><thead>
      <tr><th>id</th><th>time</th><th>kind</th><th>what</th></tr>
    </thead><tbody>${rows}</tbody></table>`;
}

function flagClass(flag: string): string {
  if (flag === "accepted") {
    return "good";
  }
  if (flag === "clamped") {
    return "warn";
  }
  return "bad";
}

// ---------------------------------------------------------------------------

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

renderLogin();
