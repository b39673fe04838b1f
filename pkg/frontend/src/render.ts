import type { ChatTurn } from "./state.js";
import type { AskResponse, NodeRef } from "./types.js";

/** DOM renderers for chat turns. Every field of an AskResponse ends up
 * visible: answer text, mode and cache badges, provenance refs, timing,
 * and the cost estimate. */

export interface TurnHandlers {
  onRetry?: (turnId: number) => void;
  onOpenNode?: (node: NodeRef) => void;
  onCompareSame?: (query: string) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderAnswer(
  doc: Document,
  response: AskResponse,
  handlers: TurnHandlers,
): HTMLElement {
  const body = el(doc, "div", "turn-answer");

  const badges = el(doc, "div", "badges");
  const modeBadge = el(doc, "span", `badge badge-mode badge-mode-${response.mode}`, response.mode);
  modeBadge.dataset.mode = response.mode;
  badges.appendChild(modeBadge);
  if (response.cache_hit) {
    badges.appendChild(el(doc, "span", "badge badge-cache", "cache hit"));
  }
  badges.appendChild(el(doc, "span", "badge badge-timing", `${response.timing_ms} ms`));
  badges.appendChild(
    el(doc, "span", "badge badge-cost", `$${response.cost_estimate_usd.toFixed(6)}`),
  );
  body.appendChild(badges);

  body.appendChild(el(doc, "div", "answer-text", response.answer_text));

  const provenance = el(doc, "div", "provenance");
  if (response.chunk_refs.length > 0) {
    const chunks = el(doc, "div", "chunk-refs");
    chunks.appendChild(el(doc, "span", "provenance-label", "chunks:"));
    for (const ref of response.chunk_refs) {
      chunks.appendChild(
        el(doc, "span", "chunk-ref", `${ref.chunk_id} (${ref.score.toFixed(3)})`),
      );
    }
    provenance.appendChild(chunks);
  }
  if (response.node_refs.length > 0) {
    const nodes = el(doc, "div", "node-refs");
    nodes.appendChild(el(doc, "span", "provenance-label", "concepts:"));
    for (const ref of response.node_refs) {
      const chip = el(doc, "button", "node-ref", ref.display_name);
      chip.type = "button";
      chip.dataset.nodeId = ref.node_id;
      chip.addEventListener("click", () => handlers.onOpenNode?.(ref));
      nodes.appendChild(chip);
    }
    provenance.appendChild(nodes);
  }
  body.appendChild(provenance);
  return body;
}

export function renderTurn(doc: Document, turn: ChatTurn, handlers: TurnHandlers = {}): HTMLElement {
  const root = el(doc, "article", `turn turn-${turn.status}`);
  root.dataset.turnId = String(turn.id);
  if (turn.compareGroup !== undefined) {
    root.dataset.compareGroup = String(turn.compareGroup);
    root.classList.add("turn-compare");
  }

  const header = el(doc, "header", "turn-query");
  header.appendChild(el(doc, "span", "query-text", turn.query));
  const compareButton = el(doc, "button", "compare-same", "compare");
  compareButton.type = "button";
  compareButton.title = "ask this in rag and kgrag side by side";
  compareButton.addEventListener("click", () => handlers.onCompareSame?.(turn.query));
  header.appendChild(compareButton);
  root.appendChild(header);

  if (turn.status === "pending") {
    root.appendChild(el(doc, "div", "turn-pending", "thinking..."));
  } else if (turn.status === "error") {
    const errorBox = el(doc, "div", "turn-error");
    errorBox.appendChild(el(doc, "span", "error-text", turn.error ?? "request failed"));
    const retry = el(doc, "button", "retry", "retry");
    retry.type = "button";
    retry.addEventListener("click", () => handlers.onRetry?.(turn.id));
    errorBox.appendChild(retry);
    root.appendChild(errorBox);
  } else if (turn.response) {
    root.appendChild(renderAnswer(doc, turn.response, handlers));
  }
  return root;
}

/** Re-render the full transcript; compare pairs share a row. */
export function renderTranscript(
  doc: Document,
  container: HTMLElement,
  turns: ChatTurn[],
  handlers: TurnHandlers = {},
): void {
  container.replaceChildren();
  const rendered = new Set<number>();
  for (const turn of turns) {
    if (rendered.has(turn.id)) continue;
    if (turn.compareGroup !== undefined) {
      const group = turns.filter((t) => t.compareGroup === turn.compareGroup);
      const row = el(doc, "div", "compare-row");
      for (const member of group) {
        row.appendChild(renderTurn(doc, member, handlers));
        rendered.add(member.id);
      }
      container.appendChild(row);
    } else {
      container.appendChild(renderTurn(doc, turn, handlers));
      rendered.add(turn.id);
    }
  }
}
