import type { AskRequest, AskResponse, Mode } from "./types.js";

/** Chat session state and pure transition helpers.
 *
 * The UI keeps one in-flight ask per pane; the compare action issues a
 * rag/kgrag pair concurrently (two turns sharing a compare group).
 */

export type TurnStatus = "pending" | "done" | "error";

export interface ChatTurn {
  id: number;
  query: string;
  mode: Mode;
  status: TurnStatus;
  response?: AskResponse;
  error?: string;
  /** turns created by one compare action share a group id */
  compareGroup?: number;
}

export interface SessionState {
  sessionId: string;
  mode: Mode;
  useCache: boolean;
  turns: ChatTurn[];
  nextTurnId: number;
}

export function newSession(sessionId: string): SessionState {
  return { sessionId, mode: "kgrag", useCache: true, turns: [], nextTurnId: 1 };
}

export function setMode(state: SessionState, mode: Mode): SessionState {
  return { ...state, mode };
}

export function setUseCache(state: SessionState, useCache: boolean): SessionState {
  return { ...state, useCache };
}

export function pendingCount(state: SessionState): number {
  return state.turns.filter((t) => t.status === "pending").length;
}

/** Send is enabled only for a non-blank draft with nothing in flight. */
export function canSend(state: SessionState, draft: string): boolean {
  return draft.trim().length > 0 && pendingCount(state) === 0;
}

export function beginTurn(
  state: SessionState,
  query: string,
  mode: Mode,
  compareGroup?: number,
): { state: SessionState; turn: ChatTurn } {
  const turn: ChatTurn = { id: state.nextTurnId, query, mode, status: "pending", compareGroup };
  return {
    state: { ...state, nextTurnId: state.nextTurnId + 1, turns: [...state.turns, turn] },
    turn,
  };
}

/** Start a compare pair: the same query in rag and kgrag modes. */
export function beginCompare(
  state: SessionState,
  query: string,
): { state: SessionState; turns: ChatTurn[] } {
  const group = state.nextTurnId;
  const first = beginTurn(state, query, "rag", group);
  const second = beginTurn(first.state, query, "kgrag", group);
  return { state: second.state, turns: [first.turn, second.turn] };
}

function updateTurn(state: SessionState, id: number, patch: Partial<ChatTurn>): SessionState {
  return {
    ...state,
    turns: state.turns.map((t) => (t.id === id ? { ...t, ...patch } : t)),
  };
}

export function resolveTurn(state: SessionState, id: number, response: AskResponse): SessionState {
  return updateTurn(state, id, { status: "done", response, error: undefined });
}

export function failTurn(state: SessionState, id: number, error: string): SessionState {
  return updateTurn(state, id, { status: "error", error });
}

/** Reset a failed turn to pending for a retry. */
export function retryTurn(state: SessionState, id: number): SessionState {
  return updateTurn(state, id, { status: "pending", error: undefined });
}

export function compareSibling(state: SessionState, turn: ChatTurn): ChatTurn | undefined {
  if (turn.compareGroup === undefined) return undefined;
  return state.turns.find((t) => t.compareGroup === turn.compareGroup && t.id !== turn.id);
}

/** Request body for an ask; the session's current mode applies unless a
 * turn-specific mode (e.g. from a compare pair) overrides it. */
export function buildAskRequest(state: SessionState, query: string, mode?: Mode): AskRequest {
  return {
    session_id: state.sessionId,
    query,
    mode: mode ?? state.mode,
    use_cache: state.useCache,
  };
}
