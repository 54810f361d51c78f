/**
 * Live operation against the real service: spawns the Python server,
 * logs in, arms a 5 s timed device the way the panel would, and follows
 * it through countdown and auto-off on the panel's 1 s poll loop.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, AuthError, NetworkError, type EventRecord } from "../src/api.js";
import { TileTracker, composeBody } from "../src/model.js";

const CONFIG = `
device ac line=0 policy=indefinite
device cooker line=1 policy=max:1800
allow +2348012345678
token panel-test-token
poll_ms 50
`;

let server: ChildProcess;
let baseUrl = "";

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "homerelay-panel-"));
  const configPath = join(dir, "home.conf");
  writeFileSync(configPath, CONFIG);
  server = spawn(
    "python3",
    ["-m", "homerelay", "--config", configPath, "--data-dir", join(dir, "data"), "--bind", "127.0.0.1:0"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  baseUrl = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 10000);
    let buffered = "";
    server.stdout!.on("data", (chunk: Buffer) => {
      buffered += chunk.toString();
      const match = buffered.match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
  });
}, 15000);

afterAll(() => {
  server?.kill("SIGINT");
});

describe("login", () => {
  it("accepts the right token", async () => {
    const client = new ApiClient(baseUrl, "panel-test-token");
    const response = await client.getDevices();
    expect(response.devices.map((d) => d.name)).toEqual(["ac", "cooker"]);
  });

  it("rejects a wrong token as an auth failure", async () => {
    const client = new ApiClient(baseUrl, "wrong");
    await expect(client.getDevices()).rejects.toBeInstanceOf(AuthError);
  });

  it("reports an unreachable server distinctly", async () => {
    const client = new ApiClient("http://127.0.0.1:9", "panel-test-token");
    await expect(client.getDevices()).rejects.toBeInstanceOf(NetworkError);
  });
});

describe("live operation", () => {
  it(
    "a 5 s timed run counts down monotonically and flips off within one poll",
    async () => {
      const client = new ApiClient(baseUrl, "panel-test-token");
      const tracker = new TileTracker();
      tracker.applyPoll((await client.getDevices()).devices);

      const body = composeBody("cooker", { kind: "on_timed", durationS: 5 });
      expect(body).toBe("cooker 1 5");
      const result = await client.postCommand(body);
      expect(result.accepted).toBe(true);

      // panel poll loop at 1 Hz
      const countdowns: number[] = [];
      let offAt: number | null = null;
      const started = Date.now();
      while (Date.now() - started < 10000) {
        await sleep(1000);
        const tiles = tracker.applyPoll((await client.getDevices()).devices);
        const cooker = tiles.find((t) => t.name === "cooker")!;
        if (cooker.state === "on_timed" && cooker.remainingS !== null) {
          countdowns.push(cooker.remainingS);
        }
        if (cooker.state === "off") {
          offAt = Date.now() / 1000;
          break;
        }
      }

      expect(offAt).not.toBeNull();
      expect(countdowns.length).toBeGreaterThanOrEqual(2);
      for (let i = 1; i < countdowns.length; i++) {
        expect(countdowns[i]).toBeLessThan(countdowns[i - 1]);
      }

      // the server wrote the auto-off moment into the event log; the
      // panel must have seen the flip within one poll interval (+ http
      // slack) of it
      const events = await client.getMessages(0, 1000);
      const autoOff = events.find(
        (e: EventRecord) => e.kind === "transition" && e.cause === "auto_off",
      );
      expect(autoOff).toBeDefined();
      const delay = (offAt ?? 0) - (autoOff!.ts as number);
      expect(delay).toBeGreaterThanOrEqual(0);
      expect(delay).toBeLessThanOrEqual(2.0); // <= 1 s poll + 1 s slack
    },
    20000,
  );

  it("rejections surface the server's error kind", async () => {
    const client = new ApiClient(baseUrl, "panel-test-token");
    const result = await client.postCommand("cooker 0 1800");
    expect(result).toEqual({ accepted: false, error: "DurationWithOff" });
  });
});
