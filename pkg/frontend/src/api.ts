import type { DocumentPayload, EventBody, GraphPayload, SessionPayload, SourceKind, TabPayload } from "./types";

export class ApiError extends Error {
    constructor(readonly stage: string, message: string, readonly status: number) {
        super(message);
    }
}

type FetchLike = typeof fetch;

async function parseError(resp: Response): Promise<ApiError> {
    try {
        const body = await resp.json();
        return new ApiError(body.error?.stage ?? "unknown", body.error?.message ?? resp.statusText, resp.status);
    } catch {
        return new ApiError("unknown", resp.statusText, resp.status);
    }
}

/** Thin typed client over the session service; fetch is injectable for tests. */
export class ApiClient {
    constructor(private baseUrl = "", private fetchFn: FetchLike = fetch.bind(globalThis)) {}

    private async post<T>(path: string, body: unknown): Promise<T> {
        const resp = await this.fetchFn(this.baseUrl + path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!resp.ok) throw await parseError(resp);
        return resp.json() as Promise<T>;
    }

    private async get<T>(path: string): Promise<T> {
        const resp = await this.fetchFn(this.baseUrl + path);
        if (!resp.ok) throw await parseError(resp);
        return resp.json() as Promise<T>;
    }

    createSession(user: string, query: string): Promise<SessionPayload> {
        return this.post("/api/session", { user, query });
    }

    expand(sessionId: string, entityId: string): Promise<GraphPayload> {
        return this.post(`/api/session/${sessionId}/expand`, { entity: entityId });
    }

    getGraph(sessionId: string): Promise<GraphPayload> {
        return this.get(`/api/session/${sessionId}/graph`);
    }

    getTab(sessionId: string, source: SourceKind): Promise<TabPayload> {
        return this.get(`/api/session/${sessionId}/tab/${source}`);
    }

    getDoc(sessionId: string, docId: string): Promise<DocumentPayload> {
        return this.get(`/api/doc/${sessionId}/${docId}`);
    }

    /** Fire-and-forget interaction event with a single retry. */
    async sendEvent(sessionId: string, event: EventBody): Promise<void> {
        const attempt = () => this.post<{ ok: boolean }>(`/api/session/${sessionId}/event`, event);
        try {
            await attempt();
        } catch {
            try {
                await attempt();
            } catch {
                // Metrics loss is acceptable; never break the UI over logging.
            }
        }
    }
}
