/**
 * Typed client for the control service HTTP API.
 *
 * Every call sends the session token via X-Auth-Token.  Failures are
 * split three ways so the UI can react differently: AuthError (bad
 * token), NetworkError (server unreachable) and HttpError (anything
 * else non-2xx, carrying the server's machine-readable error kind).
 */

export interface DeviceEntry {
  name: string;
  line: number;
  state: "off" | "on" | "on_timed";
  since?: number;
  deadline?: number;
  clamped?: boolean;
  remaining_s?: number;
}

export interface DevicesResponse {
  devices: DeviceEntry[];
  server_time: number;
}

export interface EventRecord {
  event_id: number;
  ts: number;
  kind: string;
  [field: string]: unknown;
}

export type CommandResult =
  | { accepted: true; eventId: number }
  | { accepted: false; error: string };

export class AuthError extends Error {
  constructor() {
    super("token rejected");
    this.name = "AuthError";
  }
}

export class NetworkError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "NetworkError";
  }
}

export class HttpError extends Error {
  constructor(
    readonly status: number,
    readonly kind: string,
  ) {
    super(`HTTP ${status}: ${kind}`);
    this.name = "HttpError";
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        ...init,
        headers: { "X-Auth-Token": this.token, ...(init?.headers ?? {}) },
      });
    } catch (err) {
      throw new NetworkError(err instanceof Error ? err.message : String(err));
    }
    if (response.status === 401) {
      throw new AuthError();
    }
    return response;
  }

  private async requestJson(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.request(path, init);
    if (!response.ok) {
      const kind = await errorKind(response);
      throw new HttpError(response.status, kind);
    }
    return response.json();
  }

  /** Login probe and state feed in one: GET /devices. */
  async getDevices(): Promise<DevicesResponse> {
    return (await this.requestJson("/devices")) as DevicesResponse;
  }

  /** Send one command body; 422 rejections come back as a value. */
  async postCommand(text: string): Promise<CommandResult> {
    const response = await this.request("/commands", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
    const payload = (await response.json()) as {
      accepted?: boolean;
      event_id?: number;
      error?: string;
    };
    if (response.ok && payload.accepted) {
      return { accepted: true, eventId: payload.event_id ?? 0 };
    }
    if (response.status === 422) {
      return { accepted: false, error: payload.error ?? "Rejected" };
    }
    throw new HttpError(response.status, payload.error ?? "unexpected");
  }

  async getMessages(sinceId = 0, limit = 100): Promise<EventRecord[]> {
    const payload = (await this.requestJson(
      `/messages?since_id=${sinceId}&limit=${limit}`,
    )) as { events: EventRecord[] };
    return payload.events;
  }
}

async function errorKind(response: Response): Promise<string> {
  try {
    const payload = (await response.json()) as { error?: string };
    return payload.error ?? `status ${response.status}`;
  } catch {
    return `status ${response.status}`;
  }
}
