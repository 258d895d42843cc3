// JSON shapes of the /teach/* endpoints. The server is the single source
// of truth; the client never reshapes or reorders what it receives.

export type HistoryItem =
  | { kind: "action"; name: string }
  | { kind: "user"; text: string; intent: string }
  | { kind: "bot"; text: string };

/** [action name, probability], already sorted descending by the server. */
export type RankingEntry = [string, number];

export interface Proposal {
  predicted_action: string;
  ranking: RankingEntry[];
}

export interface SessionView {
  session_id: string;
  history: HistoryItem[];
  slots: Record<string, string | number | null>;
  proposal: Proposal | null;
  menu: "decision" | "awaiting_message";
  exportable: boolean;
  audit: unknown[];
}

export type DecisionChoice = "confirm" | "wrong_action" | "wrong_intent" | "export";

export interface DecisionBody {
  choice: DecisionChoice;
  action?: string;
  act?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}
