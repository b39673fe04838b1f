import { ApiClient, ApiError } from "./api.js";
import { renderGraphMessage, renderNeighborhood } from "./graphview.js";
import { renderTranscript } from "./render.js";
import {
  SessionState,
  beginCompare,
  beginTurn,
  buildAskRequest,
  canSend,
  failTurn,
  newSession,
  resolveTurn,
  setMode,
  setUseCache,
} from "./state.js";
import type { Depth, Mode, NodeRef } from "./types.js";

const api = new ApiClient("");
let state: SessionState = newSession(`web-${Date.now().toString(36)}`);
let graphEntity: string | null = null;
let graphDepth: Depth = 1;

const doc = document;
const transcript = doc.getElementById("transcript") as HTMLElement;
const queryInput = doc.getElementById("query") as HTMLTextAreaElement;
const sendButton = doc.getElementById("send") as HTMLButtonElement;
const compareButton = doc.getElementById("compare") as HTMLButtonElement;
const modeSelect = doc.getElementById("mode") as HTMLSelectElement;
const cacheToggle = doc.getElementById("use-cache") as HTMLInputElement;
const graphPanel = doc.getElementById("graph-panel") as HTMLElement;
const healthLine = doc.getElementById("health") as HTMLElement;

function errorMessage(error: unknown): string {
  if (error instanceof ApiError) {
    const detail =
      typeof error.detail === "string" ? error.detail : JSON.stringify(error.detail);
    return `HTTP ${error.status}: ${detail}`;
  }
  return error instanceof Error ? error.message : String(error);
}

function refresh(): void {
  renderTranscript(doc, transcript, state.turns, {
    onRetry: retryAsk,
    onOpenNode: openNeighborhood,
    onCompareSame: runCompare,
  });
  transcript.scrollTop = transcript.scrollHeight;
  sendButton.disabled = !canSend(state, queryInput.value);
  compareButton.disabled = !canSend(state, queryInput.value);
}

async function runAsk(turnId: number, query: string, mode: Mode): Promise<void> {
  try {
    const response = await api.ask(buildAskRequest(state, query, mode));
    state = resolveTurn(state, turnId, response);
  } catch (error) {
    state = failTurn(state, turnId, errorMessage(error));
  }
  refresh();
}

function sendCurrent(): void {
  const query = queryInput.value.trim();
  if (!canSend(state, query)) return;
  const begun = beginTurn(state, query, state.mode);
  state = begun.state;
  queryInput.value = "";
  refresh();
  void runAsk(begun.turn.id, begun.turn.query, begun.turn.mode);
}

function runCompare(query: string): void {
  const trimmed = query.trim();
  if (!trimmed) return;
  const begun = beginCompare(state, trimmed);
  state = begun.state;
  refresh();
  // the two requests run concurrently and render independently
  for (const turn of begun.turns) {
    void runAsk(turn.id, turn.query, turn.mode);
  }
}

function retryAsk(turnId: number): void {
  const turn = state.turns.find((t) => t.id === turnId);
  if (!turn) return;
  state = {
    ...state,
    turns: state.turns.map((t) =>
      t.id === turnId ? { ...t, status: "pending", error: undefined } : t,
    ),
  };
  refresh();
  void runAsk(turn.id, turn.query, turn.mode);
}

async function loadNeighborhood(): Promise<void> {
  if (!graphEntity) return;
  try {
    const data = await api.neighborhood(graphEntity, graphDepth);
    renderNeighborhood(
      doc,
      graphPanel,
      data,
      { selected: graphEntity, depth: graphDepth },
      {
        onDepthChange: (depth) => {
          graphDepth = depth;
          void loadNeighborhood();
        },
        onSelectNode: (nodeId) => {
          graphEntity = nodeId;
          void loadNeighborhood();
        },
      },
    );
  } catch (error) {
    if (error instanceof ApiError && error.status === 409) {
      renderGraphMessage(
        doc,
        graphPanel,
        "no knowledge graph yet: ingest materials, extract and approve triples, then run the build step",
      );
    } else if (error instanceof ApiError && error.status === 404) {
      renderGraphMessage(doc, graphPanel, `unknown concept: ${graphEntity}`);
    } else {
      renderGraphMessage(doc, graphPanel, errorMessage(error));
    }
  }
}

function openNeighborhood(node: NodeRef): void {
  graphEntity = node.node_id;
  graphDepth = 1;
  void loadNeighborhood();
}

async function loadHealth(): Promise<void> {
  try {
    const health = await api.health();
    healthLine.textContent =
      `${health.document_count} docs, ${health.chunk_count} chunks, ` +
      `${health.node_count} concepts, ${health.edge_count} relations, ` +
      `${health.cache_entries} cached answers`;
  } catch (error) {
    healthLine.textContent = `service unreachable: ${errorMessage(error)}`;
  }
}

sendButton.addEventListener("click", sendCurrent);
compareButton.addEventListener("click", () => {
  const query = queryInput.value.trim();
  if (query) {
    queryInput.value = "";
    runCompare(query);
  }
});
queryInput.addEventListener("input", refresh);
queryInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && !event.shiftKey) {
    event.preventDefault();
    sendCurrent();
  }
});
modeSelect.addEventListener("change", () => {
  state = setMode(state, modeSelect.value as Mode);
});
cacheToggle.addEventListener("change", () => {
  state = setUseCache(state, cacheToggle.checked);
});

refresh();
void loadHealth();
