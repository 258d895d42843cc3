import { ApiError, DecisionBody, SessionView } from "./types.js";

type FetchLike = typeof fetch;

/** Thin typed wrapper over the teaching endpoints. */
export class TeachClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let code = `http_${response.status}`;
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { error?: string; detail?: string };
        code = body.error ?? code;
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, detail);
    }
    return response;
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.request(path, init);
    return (await response.json()) as T;
  }

  async createSession(): Promise<string> {
    const body = await this.requestJson<{ session_id: string }>("/teach/sessions", {
      method: "POST",
    });
    return body.session_id;
  }

  async getView(sessionId: string): Promise<SessionView> {
    return this.requestJson<SessionView>(`/teach/sessions/${sessionId}`);
  }

  async sendMessage(sessionId: string, text: string): Promise<SessionView> {
    return this.requestJson<SessionView>(`/teach/sessions/${sessionId}/message`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  async decide(sessionId: string, decision: DecisionBody): Promise<SessionView> {
    return this.requestJson<SessionView>(`/teach/sessions/${sessionId}/decision`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(decision),
    });
  }

  /** Export returns raw markdown, not a view. */
  async exportStories(sessionId: string): Promise<string> {
    const response = await this.request(`/teach/sessions/${sessionId}/decision`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ choice: "export" }),
    });
    return response.text();
  }
}
