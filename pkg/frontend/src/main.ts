import { TeachClient } from "./api.js";
import { SessionController, openSession } from "./controller.js";
import { renderError, renderSession } from "./render.js";
import { ApiError } from "./types.js";

// The only file that touches the DOM: render strings go into #app, events
// arrive by delegation, and every handler re-renders from the server view.

const app = document.getElementById("app") as HTMLElement;
const errors = document.getElementById("errors") as HTMLElement;
const input = document.getElementById("message-input") as HTMLInputElement;
const sendButton = document.getElementById("send") as HTMLButtonElement;

const client = new TeachClient("");
let controller: SessionController | null = null;
let picking = false;

function redraw(): void {
  if (controller?.view) {
    app.innerHTML = renderSession(controller.view, picking);
    input.disabled = controller.view.menu !== "awaiting_message";
    sendButton.disabled = input.disabled;
  }
}

function showError(error: unknown): void {
  if (error instanceof ApiError) {
    errors.innerHTML = renderError(error.code, error.message);
  } else {
    errors.innerHTML = renderError("client_error", String(error));
  }
  window.setTimeout(() => (errors.innerHTML = ""), 6000);
}

async function act(operation: () => Promise<unknown>): Promise<void> {
  if (!controller || controller.busy) {
    return;
  }
  try {
    await operation();
  } catch (error) {
    showError(error);
    if (controller.view === null) {
      return;
    }
  }
  picking = false;
  redraw();
}

function downloadMarkdown(name: string, markdown: string): void {
  const blob = new Blob([markdown], { type: "text/markdown" });
  const url = URL.createObjectURL(blob);
  const anchor = document.createElement("a");
  anchor.href = url;
  anchor.download = `${name}.md`;
  anchor.click();
  URL.revokeObjectURL(url);
}

app.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const choice = target.dataset["choice"];
  const picked = target.dataset["action"];
  if (!controller) {
    return;
  }
  if (target.classList.contains("pick") && picked) {
    void act(() => controller!.wrongAction(picked));
  } else if (choice === "confirm") {
    void act(() => controller!.confirm());
  } else if (choice === "wrong_action") {
    picking = true;
    redraw();
  } else if (choice === "cancel_pick") {
    picking = false;
    redraw();
  } else if (choice === "wrong_intent") {
    const act_ = window.prompt("Corrected dialogue act (e.g. /greet{}):");
    if (act_) {
      void act(() => controller!.wrongIntent(act_));
    }
  } else if (choice === "export") {
    void act(async () => {
      const markdown = await controller!.exportStories();
      downloadMarkdown(controller!.sessionId, markdown);
    });
  }
});

async function send(): Promise<void> {
  const text = input.value.trim();
  if (!text) {
    return;
  }
  input.value = "";
  await act(() => controller!.sendMessage(text));
}

sendButton.addEventListener("click", () => void send());
input.addEventListener("keydown", (event) => {
  if (event.key === "Enter") {
    event.preventDefault();
    void send();
  }
});

void (async () => {
  try {
    controller = await openSession(client);
    redraw();
  } catch (error) {
    showError(error);
  }
})();
