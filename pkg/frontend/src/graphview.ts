import { MAX_LAYOUT_NODES, layoutGraph } from "./layout.js";
import type { Depth, Neighborhood } from "./types.js";

/** SVG rendering of a concept neighborhood with a depth control.
 *
 * Invariant: every rendered edge connects two rendered nodes (edges whose
 * endpoints are missing from the node list are dropped before drawing).
 */

const SVG_NS = "http://www.w3.org/2000/svg";

export interface GraphViewHandlers {
  onDepthChange?: (depth: Depth) => void;
  onSelectNode?: (nodeId: string) => void;
}

export interface GraphViewOptions {
  width?: number;
  height?: number;
  selected?: string;
  depth?: Depth;
}

export const DEPTH_CHOICES: Depth[] = [1, 2, 3, "max"];

export function renderNeighborhood(
  doc: Document,
  container: HTMLElement,
  data: Neighborhood,
  options: GraphViewOptions = {},
  handlers: GraphViewHandlers = {},
): void {
  const { width = 640, height = 420, selected, depth = 1 } = options;
  container.replaceChildren();

  const controls = doc.createElement("div");
  controls.className = "graph-controls";
  const label = doc.createElement("label");
  label.textContent = "depth ";
  const select = doc.createElement("select");
  select.className = "depth-select";
  for (const choice of DEPTH_CHOICES) {
    const option = doc.createElement("option");
    option.value = String(choice);
    option.textContent = String(choice);
    if (String(choice) === String(depth)) option.selected = true;
    select.appendChild(option);
  }
  select.addEventListener("change", () => {
    const value = select.value === "max" ? "max" : Number(select.value);
    handlers.onDepthChange?.(value);
  });
  label.appendChild(select);
  controls.appendChild(label);
  controls.appendChild(
    Object.assign(doc.createElement("span"), {
      className: "graph-counts",
      textContent: `${data.nodes.length} nodes, ${data.edges.length} edges`,
    }),
  );
  container.appendChild(controls);

  if (data.nodes.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "graph-empty";
    empty.textContent = "nothing to show";
    container.appendChild(empty);
    return;
  }
  if (data.nodes.length > MAX_LAYOUT_NODES) {
    const notice = doc.createElement("p");
    notice.className = "graph-too-large";
    notice.textContent =
      `neighborhood too large to draw (${data.nodes.length} nodes > ${MAX_LAYOUT_NODES}); ` +
      "reduce the depth";
    container.appendChild(notice);
    return;
  }

  const ids = new Set(data.nodes.map((n) => n.id));
  const edges = data.edges.filter((e) => ids.has(e.from) && ids.has(e.to));
  const positions = layoutGraph(data.nodes, edges, { width, height });

  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "graph-svg");

  for (const edge of edges) {
    const a = positions.get(edge.from)!;
    const b = positions.get(edge.to)!;
    const line = doc.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", a.x.toFixed(1));
    line.setAttribute("y1", a.y.toFixed(1));
    line.setAttribute("x2", b.x.toFixed(1));
    line.setAttribute("y2", b.y.toFixed(1));
    line.setAttribute("class", "graph-edge");
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = `${edge.from} — ${edge.predicate} → ${edge.to}`;
    line.appendChild(title);
    svg.appendChild(line);
  }

  for (const node of data.nodes) {
    const p = positions.get(node.id)!;
    const group = doc.createElementNS(SVG_NS, "g");
    group.setAttribute(
      "class",
      node.id === selected ? "graph-node graph-node-selected" : "graph-node",
    );
    (group as unknown as { dataset: DOMStringMap }).dataset.nodeId = node.id;
    const circle = doc.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", p.x.toFixed(1));
    circle.setAttribute("cy", p.y.toFixed(1));
    circle.setAttribute("r", node.id === selected ? "10" : "7");
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = node.context.slice(0, 240);
    circle.appendChild(title);
    group.appendChild(circle);
    const text = doc.createElementNS(SVG_NS, "text");
    text.setAttribute("x", (p.x + 10).toFixed(1));
    text.setAttribute("y", (p.y + 4).toFixed(1));
    text.textContent = node.display_name;
    group.appendChild(text);
    group.addEventListener("click", () => handlers.onSelectNode?.(node.id));
    svg.appendChild(group);
  }

  container.appendChild(svg);
}

export function renderGraphMessage(doc: Document, container: HTMLElement, message: string): void {
  container.replaceChildren();
  const p = doc.createElement("p");
  p.className = "graph-message";
  p.textContent = message;
  container.appendChild(p);
}
