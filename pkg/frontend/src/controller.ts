import { TeachClient } from "./api.js";
import { ApiError, SessionView } from "./types.js";

/**
 * Drives one teaching session against the server.
 *
 * The controller owns no authoritative state: `view` is always the last
 * thing the server said, and a 409 (decision raced the session state)
 * resolves by re-fetching the view. While a request is in flight every
 * other mutation is rejected, so one user decision maps to exactly one
 * POST.
 */
export class SessionController {
  view: SessionView | null = null;
  private inFlight = false;

  constructor(
    private readonly client: TeachClient,
    readonly sessionId: string,
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  async refresh(): Promise<SessionView> {
    this.view = await this.client.getView(this.sessionId);
    return this.view;
  }

  private async guarded(operation: () => Promise<SessionView>): Promise<SessionView> {
    if (this.inFlight) {
      throw new Error("a request is already in flight");
    }
    this.inFlight = true;
    try {
      this.view = await operation();
      return this.view;
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        // stale decision: the server view is the truth, re-sync and reset
        this.view = await this.client.getView(this.sessionId);
        return this.view;
      }
      throw error;
    } finally {
      this.inFlight = false;
    }
  }

  sendMessage(text: string): Promise<SessionView> {
    return this.guarded(() => this.client.sendMessage(this.sessionId, text));
  }

  confirm(): Promise<SessionView> {
    return this.guarded(() => this.client.decide(this.sessionId, { choice: "confirm" }));
  }

  wrongAction(action: string): Promise<SessionView> {
    return this.guarded(() => this.client.decide(this.sessionId, { choice: "wrong_action", action }));
  }

  wrongIntent(act: string): Promise<SessionView> {
    return this.guarded(() => this.client.decide(this.sessionId, { choice: "wrong_intent", act }));
  }

  async exportStories(): Promise<string> {
    if (this.inFlight) {
      throw new Error("a request is already in flight");
    }
    this.inFlight = true;
    try {
      return await this.client.exportStories(this.sessionId);
    } finally {
      this.inFlight = false;
    }
  }
}

export async function openSession(client: TeachClient): Promise<SessionController> {
  const sessionId = await client.createSession();
  const controller = new SessionController(client, sessionId);
  await controller.refresh();
  return controller;
}
