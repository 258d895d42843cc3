import { HistoryItem, Proposal, SessionView } from "./types.js";

// Pure HTML-string renderers: no DOM access, no state, no reordering.
// main.ts injects the output and wires events by delegation.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function renderHistoryItem(item: HistoryItem): string {
  switch (item.kind) {
    case "action":
      return `<div class="turn turn-action">bot did: <code>${escapeHtml(item.name)}</code></div>`;
    case "user":
      return (
        `<div class="turn turn-user">user said: <b>${escapeHtml(item.text)}</b>` +
        `<span class="intent">intent: ${escapeHtml(item.intent)}</span></div>`
      );
    case "bot":
      return `<div class="turn turn-bot">bot said: ${escapeHtml(item.text)}</div>`;
  }
}

export function renderHistory(history: HistoryItem[]): string {
  if (history.length === 0) {
    return `<div class="turn turn-action">bot did: <code>[]</code></div>`;
  }
  return history.map(renderHistoryItem).join("\n");
}

export function renderSlots(slots: Record<string, string | number | null>): string {
  const rows = Object.entries(slots)
    .map(
      ([name, value]) =>
        `<tr><td>${escapeHtml(name)}</td><td class="${value === null ? "unset" : "set"}">` +
        `${value === null ? "None" : escapeHtml(String(value))}</td></tr>`,
    )
    .join("");
  return `<table class="slots"><tbody>${rows}</tbody></table>`;
}

/**
 * The ranked action list, in exactly the order the server sent it.
 * Bar widths use the raw probabilities; no client-side renormalization.
 */
export function renderRanking(proposal: Proposal, pickable: boolean): string {
  const rows = proposal.ranking
    .map(([action, probability]) => {
      const width = (probability * 100).toFixed(1);
      const pick = pickable
        ? ` <button class="pick" data-action="${escapeHtml(action)}">pick</button>`
        : "";
      return (
        `<li class="ranked-action" data-action="${escapeHtml(action)}">` +
        `<span class="bar" style="width:${width}%"></span>` +
        `<span class="action-name">${escapeHtml(action)}</span>` +
        `<span class="probability">${probability.toFixed(2)}</span>${pick}</li>`
      );
    })
    .join("\n");
  return `<ol class="ranking">${rows}</ol>`;
}

export function renderProposalBanner(proposal: Proposal): string {
  return (
    `<div class="banner">The bot wants to <b>[${escapeHtml(proposal.predicted_action)}]</b>` +
    ` due to the intent. Is this correct?</div>`
  );
}

/** The whole session panel; `picking` switches the menu into the
 * wrong-action picker state (a purely client-side view mode). */
export function renderSession(view: SessionView, picking = false): string {
  const parts = [
    `<section class="panel history-panel"><h2>Chat history</h2>${renderHistory(view.history)}</section>`,
    `<section class="panel slots-panel"><h2>Slots</h2>${renderSlots(view.slots)}</section>`,
  ];
  if (view.proposal) {
    parts.push(`<section class="panel proposal-panel">`);
    if (picking) {
      parts.push(`<div class="banner">what is the next action for the bot?</div>`);
      parts.push(renderRanking(view.proposal, true));
      parts.push(`<div class="menu"><button data-choice="cancel_pick">Back</button></div>`);
    } else {
      parts.push(renderProposalBanner(view.proposal));
      parts.push(renderRanking(view.proposal, false));
      parts.push(
        `<div class="menu">` +
          `<button data-choice="confirm">Yes</button>` +
          `<button data-choice="wrong_action">No, intent is right but the action is wrong</button>` +
          `<button data-choice="wrong_intent">The intent is wrong</button>` +
          `<button data-choice="export"${view.exportable ? "" : " disabled"}>Export stories</button>` +
          `</div>`,
      );
    }
    parts.push(`</section>`);
  } else {
    parts.push(
      `<section class="panel proposal-panel"><div class="banner">Your turn — send a message.</div></section>`,
    );
  }
  return parts.join("\n");
}

export function renderError(code: string, detail: string): string {
  return `<div class="error-banner">${escapeHtml(code)}: ${escapeHtml(detail)}</div>`;
}
