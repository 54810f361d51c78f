/**
 * Typed client for the control service HTTP API.
 *
 * Every call sends the session token via X-Auth-Token.  Failures are
 * split three ways so the UI can react differently: AuthError (bad
 * token), NetworkError (server unreachable) and HttpError (anything
 * else non-2xx, carrying the server's machine-readable error kind).
 */
export class AuthError extends Error {
    constructor() {
        super("token rejected");
        this.name = "AuthError";
    }
}
export class NetworkError extends Error {
    constructor(detail) {
        super(detail);
        this.name = "NetworkError";
    }
}
export class HttpError extends Error {
    status;
    kind;
    constructor(status, kind) {
        super(`HTTP ${status}: ${kind}`);
        this.status = status;
        this.kind = kind;
        this.name = "HttpError";
    }
}
export class ApiClient {
    baseUrl;
    token;
    constructor(baseUrl, token) {
        this.baseUrl = baseUrl;
        this.token = token;
    }
    async request(path, init) {
        let response;
        try {
            response = await fetch(this.baseUrl + path, {
                ...init,
                headers: { "X-Auth-Token": this.token, ...(init?.headers ?? {}) },
            });
        }
        catch (err) {
            throw new NetworkError(err instanceof Error ? err.message : String(err));
        }
        if (response.status === 401) {
            throw new AuthError();
        }
        return response;
    }
    async requestJson(path, init) {
        const response = await this.request(path, init);
        if (!response.ok) {
            const kind = await errorKind(response);
            throw new HttpError(response.status, kind);
        }
        return response.json();
    }
    /** Login probe and state feed in one: GET /devices. */
    async getDevices() {
        return (await this.requestJson("/devices"));
    }
    /** Send one command body; 422 rejections come back as a value. */
    async postCommand(text) {
        const response = await this.request("/commands", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ text }),
        });
        const payload = (await response.json());
        if (response.ok && payload.accepted) {
            return { accepted: true, eventId: payload.event_id ?? 0 };
        }
        if (response.status === 422) {
            return { accepted: false, error: payload.error ?? "Rejected" };
        }
        throw new HttpError(response.status, payload.error ?? "unexpected");
    }
    async getMessages(sinceId = 0, limit = 100) {
        const payload = (await this.requestJson(`/messages?since_id=${sinceId}&limit=${limit}`));
        return payload.events;
    }
}
async function errorKind(response) {
    try {
        const payload = (await response.json());
        return payload.error ?? `status ${response.status}`;
    }
    catch {
        return `status ${response.status}`;
    }
}
