"""Tutoring engine: owns the corpus, triple store, graph snapshot, and cache.

All state lives under a single data directory; no external database. Reads
(ask, neighborhood, health) run against an immutable snapshot captured at
call start. Mutating operations (ingest, extract, review import, build)
serialize among themselves and publish a new snapshot atomically, so an
in-flight ask never observes a partial rebuild.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .cache_cost import ChatCache, CostModel, bundled_cost_csv
from .config import Settings
from .corpus import Corpus
from .errors import ConfigurationError, ContractViolation
from .extraction import (
    CannedOutputs,
    ExtractionPromptTemplate,
    LlmChunkCompleter,
    extract_corpus,
    write_runs_jsonl,
)
from .generation import MODES, AnswerRecord, generate
from .kg import (
    BuildOptions,
    KnowledgeGraph,
    ReviewFlags,
    TripleStore,
    build_graph,
    export_triples_csv,
    import_triples_csv,
    neighborhood as kg_neighborhood,
)
from .retrieval import ChunkIndex, NodeIndex

log = logging.getLogger(__name__)

TRIPLES_FILENAME = "triples.csv"
GRAPH_FILENAME = "graph.json"
CACHE_FILENAME = "cache.jsonl"
RUNS_FILENAME = "extraction_runs.jsonl"
COST_FILENAME = "cost_per_qa.csv"


@dataclass(frozen=True)
class EngineState:
    """One immutable snapshot of everything the read path needs."""

    corpus: Corpus
    chunk_index: ChunkIndex
    graph: KnowledgeGraph | None
    node_index: NodeIndex | None
    version: int


@dataclass
class AskResult:
    answer_text: str
    mode: str
    cache_hit: bool
    chunk_refs: list[dict] = field(default_factory=list)
    node_refs: list[dict] = field(default_factory=list)
    cost_estimate_usd: float = 0.0
    timing_ms: int = 0

    def to_json_dict(self) -> dict:
        return {
            "answer_text": self.answer_text,
            "mode": self.mode,
            "cache_hit": self.cache_hit,
            "chunk_refs": self.chunk_refs,
            "node_refs": self.node_refs,
            "cost_estimate_usd": self.cost_estimate_usd,
            "timing_ms": self.timing_ms,
        }


def _refs_from_record(record: AnswerRecord) -> tuple[list[dict], list[dict]]:
    chunk_refs = [
        {"chunk_id": chunk_id, "score": score}
        for chunk_id, score in zip(record.chunk_ids, record.chunk_scores)
    ]
    node_refs = [
        {"node_id": node_id, "display_name": name}
        for node_id, name in zip(record.node_ids, record.node_display_names)
    ]
    return chunk_refs, node_refs


class TutorEngine:
    def __init__(self, data_dir: str | Path, settings: Settings | None = None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.settings = settings or Settings.load(self.data_dir)
        self.embedder = self.settings.build_retrieval_embedder()
        self.cache_embedder = self.settings.build_cache_embedder()
        self.llm = self.settings.build_llm()
        self.triples = TripleStore()
        self.cache = ChatCache(self.cache_embedder, self.settings.cache)
        self._write_lock = threading.RLock()
        self.cost_model = self._load_cost_model()
        self._state = self._load_state()

    # -- startup -------------------------------------------------------------

    def _load_cost_model(self) -> CostModel:
        path = self.data_dir / COST_FILENAME
        if not path.is_file():
            path.write_text(bundled_cost_csv(), encoding="utf-8")
        return CostModel.from_csv_file(path)

    def _load_state(self) -> EngineState:
        corpus = Corpus.load(self.data_dir, self.settings.corpus)
        triples_path = self.data_dir / TRIPLES_FILENAME
        if triples_path.is_file():
            triples, errors = import_triples_csv(triples_path.read_text(encoding="utf-8"))
            for error in errors:
                log.warning("triples.csv: %s", error)
            self.triples.replace_all(triples)
        graph = None
        node_index = None
        graph_path = self.data_dir / GRAPH_FILENAME
        if graph_path.is_file():
            graph = KnowledgeGraph.from_json_dict(
                json.loads(graph_path.read_text(encoding="utf-8"))
            )
            node_index = NodeIndex.build(graph, self.embedder)
        self.cache.load(self.data_dir / CACHE_FILENAME)
        chunk_index = ChunkIndex.build(corpus, self.embedder)
        return EngineState(corpus, chunk_index, graph, node_index, version=1)

    @property
    def state(self) -> EngineState:
        return self._state

    def _publish(self, **changes) -> EngineState:
        old = self._state
        new = EngineState(
            corpus=changes.get("corpus", old.corpus),
            chunk_index=changes.get("chunk_index", old.chunk_index),
            graph=changes.get("graph", old.graph),
            node_index=changes.get("node_index", old.node_index),
            version=old.version + 1,
        )
        self._state = new
        return new

    # -- ingestion -----------------------------------------------------------

    def ingest_path(self, path: str | Path) -> dict:
        """Ingest one text/markdown file, or every *.txt / *.md in a directory."""
        path = Path(path)
        with self._write_lock:
            corpus = self._state.corpus.clone()
            docs = 0
            if path.is_dir():
                files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".txt", ".md"))
                for file in files:
                    corpus.ingest_file(file)
                    docs += 1
            else:
                corpus.ingest_file(path)
                docs = 1
            return self._finish_ingest(corpus, docs)

    def ingest_text(self, doc_id: str, text: str, title: str | None = None) -> dict:
        with self._write_lock:
            corpus = self._state.corpus.clone()
            corpus.ingest_text(doc_id, text, title)
            return self._finish_ingest(corpus, 1)

    def _finish_ingest(self, corpus: Corpus, docs: int) -> dict:
        corpus.save(self.data_dir)
        chunk_index = ChunkIndex.build(corpus, self.embedder)
        state = self._publish(corpus=corpus, chunk_index=chunk_index)
        return {
            "documents_ingested": docs,
            "document_count": len(state.corpus),
            "chunk_count": len(state.corpus.chunks),
        }

    # -- extraction and review -------------------------------------------------

    def extract(self, canned_dir: str | Path | None = None) -> dict:
        with self._write_lock:
            canned = canned_dir or self.settings.canned_dir
            if canned:
                provider = CannedOutputs(canned)
            else:
                provider = LlmChunkCompleter(self.llm)
            runs = extract_corpus(self._state.corpus, provider, ExtractionPromptTemplate())
            write_runs_jsonl(runs, self.data_dir / RUNS_FILENAME)
            added = 0
            for run in runs:
                if not run.failed:
                    self.triples.add_all(run.parsed)
                    added += len(run.parsed)
            self._save_triples()
            return {
                "runs": len(runs),
                "failures": sum(1 for r in runs if r.failed),
                "triples_added": added,
                "pending_triples": len(self.triples.by_status("pending")),
            }

    def _save_triples(self) -> None:
        (self.data_dir / TRIPLES_FILENAME).write_text(
            export_triples_csv(self.triples.all()), encoding="utf-8"
        )

    def export_review_csv(self) -> str:
        return export_triples_csv(self.triples.all())

    def import_review_csv(self, data: str | bytes) -> dict:
        """Replace the triple store with a reviewed CSV."""
        with self._write_lock:
            triples, errors = import_triples_csv(data)
            self.triples.replace_all(triples)
            self._save_triples()
            return {"imported": len(triples), "errors": errors}

    def review(self, triple_id: int, status: str, flags: ReviewFlags | None = None) -> dict:
        with self._write_lock:
            triple = self.triples.set_review_status(triple_id, status, flags)
            self._save_triples()
            return {
                "triple_id": triple.triple_id,
                "subject": triple.subject,
                "predicate": triple.predicate,
                "object": triple.object,
                "status": triple.status,
            }

    # -- graph build -----------------------------------------------------------

    def build(self, include_pending: bool = False, node_context_cap: int | None = None) -> dict:
        with self._write_lock:
            include = {"approved", "pending"} if include_pending else {"approved"}
            opts = BuildOptions(include_status=frozenset(include))
            if node_context_cap is not None:
                opts.node_context_cap = node_context_cap
            graph = build_graph(self.triples.all(), self._state.corpus, opts)
            node_index = NodeIndex.build(graph, self.embedder)
            (self.data_dir / GRAPH_FILENAME).write_text(graph.to_json(), encoding="utf-8")
            state = self._publish(graph=graph, node_index=node_index)
            result = {
                "node_count": graph.node_count,
                "edge_count": graph.edge_count,
                "built_from": graph.built_from,
                "warnings": list(graph.warnings),
                "version": state.version,
            }
            if graph.node_count == 0:
                result["warnings"] = result["warnings"] + ["graph is empty (no included triples)"]
            return result

    # -- question answering ------------------------------------------------------

    def ask(
        self,
        query: str,
        mode: str = "kgrag",
        use_cache: bool = True,
        session_id: str = "",
    ) -> AskResult:
        started = time.monotonic()
        if not query.strip():
            raise ContractViolation("query must be non-empty")
        if mode not in MODES:
            raise ContractViolation(f"unknown mode {mode!r}; allowed: {', '.join(MODES)}")
        state = self._state
        if mode == "kgrag" and state.graph is None:
            raise ConfigurationError("kgrag mode requires a built knowledge graph")
        if session_id:
            log.debug("ask session=%s mode=%s", session_id, mode)

        if use_cache:
            found = self.cache.lookup(query)
            if found.hit:
                record = found.answer
                chunk_refs, node_refs = _refs_from_record(record)
                return AskResult(
                    answer_text=record.answer_text,
                    mode=record.mode,
                    cache_hit=True,
                    chunk_refs=chunk_refs,
                    node_refs=node_refs,
                    cost_estimate_usd=0.0,
                    timing_ms=int((time.monotonic() - started) * 1000),
                )

        record = generate(
            query,
            mode,
            llm=self.llm,
            embedder=self.embedder,
            corpus=state.corpus,
            graph=state.graph,
            params=self.settings.retrieval,
            chunk_index=state.chunk_index,
            node_index=state.node_index,
        )
        if use_cache:
            self.cache.insert(query, record)
            self.cache.save(self.data_dir / CACHE_FILENAME)
        chunk_refs, node_refs = _refs_from_record(record)
        per_qa = self.cost_model.per_qa_usd.get(self.settings.cost_provider_label, 0.0)
        return AskResult(
            answer_text=record.answer_text,
            mode=record.mode,
            cache_hit=False,
            chunk_refs=chunk_refs,
            node_refs=node_refs,
            cost_estimate_usd=per_qa,
            timing_ms=int((time.monotonic() - started) * 1000),
        )

    # -- graph queries -------------------------------------------------------------

    def neighborhood(self, entity: str, depth: int | str = 1) -> dict:
        state = self._state
        if state.graph is None:
            raise ConfigurationError("no knowledge graph built")
        nodes, edges = kg_neighborhood(state.graph, entity, depth)
        return {
            "nodes": [
                {"id": n.node_id, "display_name": n.display_name, "context": n.context}
                for n in nodes
            ],
            "edges": [{"from": e.from_id, "to": e.to_id, "predicate": e.predicate} for e in edges],
        }

    def health(self) -> dict:
        state = self._state
        return {
            "status": "ok",
            "document_count": len(state.corpus),
            "chunk_count": len(state.corpus.chunks),
            "node_count": state.graph.node_count if state.graph else 0,
            "edge_count": state.graph.edge_count if state.graph else 0,
            "cache_entries": len(self.cache),
            "graph_built": state.graph is not None,
            "triple_count": len(self.triples),
        }

    def flush_cache(self) -> None:
        with self._write_lock:
            self.cache.flush()
            self.cache.save(self.data_dir / CACHE_FILENAME)
