"""Similarity retrieval over chunks and knowledge-guided retrieval over nodes.

Similarity retrieval scores the query against every chunk embedding
(exhaustive cosine, no ANN index; course corpora are small) and keeps the
top-k. Knowledge-guided retrieval scores the query against node-context
embeddings, takes the top-k nodes as seeds, expands them over undirected
edges, and concatenates the traversed nodes' contexts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import Chunk, Corpus, count_tokens, truncate_tokens
from .embedding import embed_text, top_k_indices
from .kg import KnowledgeGraph, traverse_kg

SIMILARITY_LABEL = "SIMILARITY CONTEXT:"
GRAPH_LABEL = "RELATED CONCEPTS (KNOWLEDGE GRAPH):"


@dataclass
class RetrievalParams:
    k: int = 5
    depth: int | str = "max"
    context_token_cap: int = 4000


@dataclass
class SimilarityContext:
    chunk_ids: list[str] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    text: str = ""

    def to_json_dict(self) -> dict:
        return {"chunk_ids": self.chunk_ids, "scores": self.scores, "context_text": self.text}


@dataclass
class ExpandedContext:
    seed_node_ids: list[str] = field(default_factory=list)
    traversed_node_ids: list[str] = field(default_factory=list)
    text: str = ""

    def to_json_dict(self) -> dict:
        return {
            "seed_node_ids": self.seed_node_ids,
            "node_ids": self.traversed_node_ids,
            "context_text": self.text,
        }


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    if matrix.size == 0:
        return matrix
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    return vec if norm == 0.0 else vec / norm


class ChunkIndex:
    """Chunk list plus a row-normalized embedding matrix."""

    def __init__(self, chunks: list[Chunk], matrix: np.ndarray):
        self.chunks = chunks
        self.matrix = matrix

    @classmethod
    def build(cls, corpus: Corpus, embedder) -> "ChunkIndex":
        chunks = corpus.chunks
        if not chunks:
            return cls([], np.zeros((0, getattr(embedder, "dim", 0))))
        matrix = np.stack([embed_text(embedder, c.text) for c in chunks])
        return cls(chunks, _normalize_rows(matrix))


class NodeIndex:
    """Graph node ids plus a row-normalized context-embedding matrix."""

    def __init__(self, node_ids: list[str], matrix: np.ndarray):
        self.node_ids = node_ids
        self.matrix = matrix

    @classmethod
    def build(cls, graph: KnowledgeGraph, embedder) -> "NodeIndex":
        node_ids = list(graph.nodes)
        if not node_ids:
            return cls([], np.zeros((0, getattr(embedder, "dim", 0))))
        matrix = np.stack(
            [embed_text(embedder, graph.nodes[node_id].context) for node_id in node_ids]
        )
        return cls(node_ids, _normalize_rows(matrix))


def rag_retrieve(
    query: str,
    corpus: Corpus,
    embedder,
    params: RetrievalParams | None = None,
    index: ChunkIndex | None = None,
) -> SimilarityContext:
    """Top-k chunks by cosine similarity, concatenated in descending-score order.

    The context is truncated at params.context_token_cap by dropping whole
    lowest-ranked chunks first; chunk_ids and scores list exactly the chunks
    whose text made it into the context.
    """
    params = params or RetrievalParams()
    index = index or ChunkIndex.build(corpus, embedder)
    if not index.chunks:
        return SimilarityContext()
    q = _unit(embed_text(embedder, query))
    scores = index.matrix @ q
    top = top_k_indices(scores.tolist(), params.k)
    kept_ids: list[str] = []
    kept_scores: list[float] = []
    kept_texts: list[str] = []
    total_tokens = 0
    for i in top:
        chunk = index.chunks[i]
        if total_tokens + chunk.token_count > params.context_token_cap:
            break
        total_tokens += chunk.token_count
        kept_ids.append(chunk.chunk_id)
        kept_scores.append(float(scores[i]))
        kept_texts.append(chunk.text)
    return SimilarityContext(chunk_ids=kept_ids, scores=kept_scores, text="\n\n".join(kept_texts))


def kgr_retrieve(
    query: str,
    graph: KnowledgeGraph,
    embedder,
    params: RetrievalParams | None = None,
    index: NodeIndex | None = None,
) -> ExpandedContext:
    """Knowledge-guided retrieval: seed top-k nodes, expand over edges.

    traversed_node_ids always contains the full expansion (seeds included),
    independent of the token cap; the cap only limits how many node contexts
    land in the text, dropping latest-ordered nodes first. Seed sections are
    never dropped.
    """
    params = params or RetrievalParams()
    if graph.node_count == 0:
        return ExpandedContext()
    index = index or NodeIndex.build(graph, embedder)
    q = _unit(embed_text(embedder, query))
    scores = index.matrix @ q
    top = top_k_indices(scores.tolist(), params.k)
    seeds = [index.node_ids[i] for i in top]
    traversed = traverse_kg(graph, seeds, params.depth)
    seed_set = set(seeds)
    sections: list[str] = []
    total_tokens = 0
    for node_id in traversed:
        node = graph.nodes[node_id]
        section = f"## {node.display_name}\n{node.context}"
        section_tokens = count_tokens(section)
        if node_id not in seed_set and total_tokens + section_tokens > params.context_token_cap:
            break
        total_tokens += section_tokens
        sections.append(section)
    return ExpandedContext(
        seed_node_ids=seeds,
        traversed_node_ids=traversed,
        text="\n\n".join(sections),
    )


def assemble_contexts(
    sim: SimilarityContext | None,
    exp: ExpandedContext | None,
    cap: int | None = None,
) -> str:
    """Combine the two contexts into one labeled text, similarity first.

    With a cap, truncation removes the expanded-section tail first, then the
    similarity tail; sections are never reordered. An empty context drops
    its section (and label) entirely.
    """
    sim_text = sim.text if sim else ""
    exp_text = exp.text if exp else ""
    sim_sec = f"{SIMILARITY_LABEL}\n{sim_text}" if sim_text else ""
    exp_sec = f"{GRAPH_LABEL}\n{exp_text}" if exp_text else ""
    combined = "\n\n".join(s for s in (sim_sec, exp_sec) if s)
    if cap is None or count_tokens(combined) <= cap:
        return combined
    sim_tokens = count_tokens(sim_sec)
    if sim_sec and sim_tokens >= cap:
        return truncate_tokens(sim_sec, cap)
    budget = cap - sim_tokens
    # A shred of the expanded section is only worth keeping if at least one
    # context token fits after its label.
    if exp_sec and budget > count_tokens(GRAPH_LABEL):
        exp_trunc = truncate_tokens(exp_sec, budget)
        return "\n\n".join(s for s in (sim_sec, exp_trunc) if s)
    return sim_sec
