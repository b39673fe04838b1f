/** Wire types mirroring the engine's JSON API. */

export type Mode = "llm_only" | "rag" | "kgrag";

export const MODES: Mode[] = ["llm_only", "rag", "kgrag"];

export interface AskRequest {
  session_id: string;
  query: string;
  mode: Mode;
  use_cache: boolean;
}

export interface ChunkRef {
  chunk_id: string;
  score: number;
}

export interface NodeRef {
  node_id: string;
  display_name: string;
}

export interface AskResponse {
  answer_text: string;
  mode: Mode;
  cache_hit: boolean;
  chunk_refs: ChunkRef[];
  node_refs: NodeRef[];
  cost_estimate_usd: number;
  timing_ms: number;
}

export interface GraphNode {
  id: string;
  display_name: string;
  context: string;
}

export interface GraphEdge {
  from: string;
  to: string;
  predicate: string;
}

export interface Neighborhood {
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface Health {
  status: string;
  document_count: number;
  chunk_count: number;
  node_count: number;
  edge_count: number;
  cache_entries: number;
  graph_built: boolean;
  triple_count: number;
}

export type Depth = number | "max";
