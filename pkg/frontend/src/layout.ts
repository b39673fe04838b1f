import type { GraphEdge, GraphNode } from "./types.js";

/** Deterministic force-directed layout for small concept neighborhoods.
 *
 * Plain repulsion + springs + centering, seeded so the same graph always
 * lands in the same positions. Graphs beyond MAX_LAYOUT_NODES are not laid
 * out; the caller shows a "too large" notice instead.
 */

export const MAX_LAYOUT_NODES = 200;

export interface Point {
  x: number;
  y: number;
}

export interface LayoutOptions {
  width?: number;
  height?: number;
  iterations?: number;
  seed?: number;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function layoutGraph(
  nodes: GraphNode[],
  edges: GraphEdge[],
  options: LayoutOptions = {},
): Map<string, Point> {
  const { width = 640, height = 420, iterations = 150, seed = 42 } = options;
  if (nodes.length === 0) return new Map();
  if (nodes.length > MAX_LAYOUT_NODES) {
    throw new RangeError(`graph too large to lay out: ${nodes.length} > ${MAX_LAYOUT_NODES}`);
  }

  const rand = mulberry32(seed);
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 3;
  const pos = new Map<string, Point>();
  nodes.forEach((node, i) => {
    const angle = (2 * Math.PI * i) / nodes.length;
    pos.set(node.id, {
      x: cx + radius * Math.cos(angle) + (rand() - 0.5) * 10,
      y: cy + radius * Math.sin(angle) + (rand() - 0.5) * 10,
    });
  });

  const ids = nodes.map((n) => n.id);
  const links = edges.filter((e) => pos.has(e.from) && pos.has(e.to));
  const springLength = radius * 0.9;
  const repulsion = (radius * radius) / 2;

  for (let iter = 0; iter < iterations; iter++) {
    const cooling = 1 - iter / iterations;
    const force = new Map<string, Point>(ids.map((id) => [id, { x: 0, y: 0 }]));

    for (let i = 0; i < ids.length; i++) {
      for (let j = i + 1; j < ids.length; j++) {
        const a = pos.get(ids[i])!;
        const b = pos.get(ids[j])!;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const d2 = Math.max(dx * dx + dy * dy, 1);
        const push = repulsion / d2;
        const d = Math.sqrt(d2);
        const fx = (dx / d) * push;
        const fy = (dy / d) * push;
        const fa = force.get(ids[i])!;
        const fb = force.get(ids[j])!;
        fa.x += fx;
        fa.y += fy;
        fb.x -= fx;
        fb.y -= fy;
      }
    }

    for (const edge of links) {
      const a = pos.get(edge.from)!;
      const b = pos.get(edge.to)!;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      const d = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
      const pull = (d - springLength) * 0.05;
      const fx = (dx / d) * pull;
      const fy = (dy / d) * pull;
      const fa = force.get(edge.from)!;
      const fb = force.get(edge.to)!;
      fa.x += fx;
      fa.y += fy;
      fb.x -= fx;
      fb.y -= fy;
    }

    for (const id of ids) {
      const p = pos.get(id)!;
      const f = force.get(id)!;
      // gentle centering
      f.x += (cx - p.x) * 0.01;
      f.y += (cy - p.y) * 0.01;
      const step = 4 * cooling;
      const mag = Math.max(Math.sqrt(f.x * f.x + f.y * f.y), 1e-9);
      const scale = Math.min(step, mag) / mag;
      p.x += f.x * scale;
      p.y += f.y * scale;
      p.x = Math.min(Math.max(p.x, 20), width - 20);
      p.y = Math.min(Math.max(p.y, 20), height - 20);
    }
  }
  return pos;
}
