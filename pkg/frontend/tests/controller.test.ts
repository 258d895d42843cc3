import { describe, expect, it } from "vitest";

import { TeachClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { SessionView } from "../src/types.js";

function view(menu: SessionView["menu"], extra: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "s1",
    history: [],
    slots: {},
    proposal: null,
    menu,
    exportable: false,
    audit: [],
    ...extra,
  };
}

interface Recorded {
  url: string;
  method: string;
  body: unknown;
}

/** fetch stub: scripted responses, records every request. */
function fetchStub(script: Array<{ status: number; body: unknown }>) {
  const calls: Recorded[] = [];
  const impl: typeof fetch = async (input, init) => {
    const next = script.shift();
    if (!next) {
      throw new Error("fetch called more often than scripted");
    }
    calls.push({
      url: String(input),
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : null,
    });
    return new Response(JSON.stringify(next.body), {
      status: next.status,
      headers: { "content-type": "application/json" },
    });
  };
  return { impl, calls };
}

describe("SessionController", () => {
  it("maps one decision to exactly one POST", async () => {
    const { impl, calls } = fetchStub([{ status: 200, body: view("awaiting_message") }]);
    const controller = new SessionController(new TeachClient("", impl), "s1");
    await controller.confirm();
    expect(calls).toHaveLength(1);
    expect(calls[0]).toMatchObject({
      url: "/teach/sessions/s1/decision",
      method: "POST",
      body: { choice: "confirm" },
    });
  });

  it("rejects a second mutation while one is in flight", async () => {
    let release: (value: Response) => void = () => {};
    const gate = new Promise<Response>((resolve) => (release = resolve));
    let posts = 0;
    const impl: typeof fetch = async () => {
      posts += 1;
      return gate;
    };
    const controller = new SessionController(new TeachClient("", impl), "s1");
    const first = controller.confirm();
    await expect(controller.confirm()).rejects.toThrow("in flight");
    release(
      new Response(JSON.stringify(view("awaiting_message")), {
        status: 200,
        headers: { "content-type": "application/json" },
      }),
    );
    await first;
    expect(posts).toBe(1);
  });

  it("resolves a 409 by re-fetching the authoritative view", async () => {
    const fresh = view("decision", {
      proposal: { predicted_action: "utter_on_it", ranking: [["utter_on_it", 1]] },
    });
    const { impl, calls } = fetchStub([
      { status: 409, body: { error: "protocol_violation", detail: "stale" } },
      { status: 200, body: fresh },
    ]);
    const controller = new SessionController(new TeachClient("", impl), "s1");
    const result = await controller.confirm();
    expect(result.proposal?.predicted_action).toBe("utter_on_it");
    expect(calls[1]).toMatchObject({ url: "/teach/sessions/s1", method: "GET" });
    expect(controller.busy).toBe(false);
  });

  it("propagates non-conflict errors", async () => {
    const { impl } = fetchStub([
      { status: 400, body: { error: "bad_decision", detail: "unknown action" } },
    ]);
    const controller = new SessionController(new TeachClient("", impl), "s1");
    await expect(controller.wrongAction("utter_nope")).rejects.toThrow("bad_decision");
    expect(controller.busy).toBe(false);
  });

  it("sends wrong_intent with the corrected act", async () => {
    const { impl, calls } = fetchStub([{ status: 200, body: view("decision") }]);
    const controller = new SessionController(new TeachClient("", impl), "s1");
    await controller.wrongIntent("/greet{}");
    expect(calls[0]?.body).toEqual({ choice: "wrong_intent", act: "/greet{}" });
  });
});
