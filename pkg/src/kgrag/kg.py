"""Knowledge graph store: triples, review workflow, graph build and traversal.

Entities extracted as (subject, predicate, object) triples go through a
human review workflow (pending -> approved | rejected). Approved triples
are compiled into an immutable graph whose nodes carry a textual context
attribute sourced from the chunks the triples came from. Retrieval expands
a set of seed nodes over undirected edges.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from dataclasses import dataclass, field, replace
from typing import Iterable

from .corpus import Corpus, truncate_tokens
from .errors import ContractViolation, NotFoundError

TRIPLE_CSV_HEADER = [
    "subject",
    "predicate",
    "object",
    "source_chunk_id",
    "status",
    "precision",
    "completeness",
    "relevance",
]

STATUSES = ("pending", "approved", "rejected")

DEFAULT_NODE_CONTEXT_CAP = 2000


@dataclass
class ReviewFlags:
    precision: bool | None = None
    completeness: bool | None = None
    relevance: bool | None = None


@dataclass
class Triple:
    subject: str
    predicate: str
    object: str
    source_chunk_id: str = ""
    status: str = "pending"
    flags: ReviewFlags = field(default_factory=ReviewFlags)
    triple_id: int | None = None

    def validate(self) -> None:
        if not self.subject.strip() or not self.predicate.strip() or not self.object.strip():
            raise ContractViolation("triple fields must be non-empty after trimming")
        if self.status not in STATUSES:
            raise ContractViolation(f"unknown status {self.status!r}")


def canonical_entity_key(surface: str) -> str:
    """Trim, collapse internal whitespace to single spaces, case-fold."""
    return " ".join(surface.split()).casefold()


@dataclass(frozen=True)
class KgNode:
    node_id: str
    display_name: str
    context: str


@dataclass(frozen=True)
class KgEdge:
    from_id: str
    to_id: str
    predicate: str


class KnowledgeGraph:
    """Immutable once built; rebuilds produce a new graph object."""

    def __init__(
        self,
        nodes: dict[str, KgNode],
        edges: list[KgEdge],
        built_from: int = 0,
        warnings: list[str] | None = None,
    ):
        self.nodes = nodes
        self.edges = edges
        self.built_from = built_from
        self.warnings = warnings or []
        self._adjacency: dict[str, set[str]] = {node_id: set() for node_id in nodes}
        for edge in edges:
            self._adjacency[edge.from_id].add(edge.to_id)
            self._adjacency[edge.to_id].add(edge.from_id)

    def neighbors(self, node_id: str) -> set[str]:
        try:
            return self._adjacency[node_id]
        except KeyError:
            raise NotFoundError(f"unknown node: {node_id}") from None

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def to_json_dict(self) -> dict:
        return {
            "nodes": [
                {"id": n.node_id, "display_name": n.display_name, "context": n.context}
                for n in self.nodes.values()
            ],
            "edges": [
                {"from": e.from_id, "to": e.to_id, "predicate": e.predicate} for e in self.edges
            ],
            "built_from": self.built_from,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), ensure_ascii=False, indent=2)

    @classmethod
    def from_json_dict(cls, data: dict) -> "KnowledgeGraph":
        nodes = {
            n["id"]: KgNode(n["id"], n.get("display_name", n["id"]), n.get("context", ""))
            for n in data.get("nodes", [])
        }
        edges = [
            KgEdge(e["from"], e["to"], e.get("predicate", "")) for e in data.get("edges", [])
        ]
        return cls(nodes, edges, built_from=data.get("built_from", 0))


@dataclass
class BuildOptions:
    include_status: frozenset[str] = frozenset({"approved"})
    node_context_cap: int = DEFAULT_NODE_CONTEXT_CAP


def build_graph(
    triples: Iterable[Triple],
    corpus: Corpus | None = None,
    opts: BuildOptions | None = None,
) -> KnowledgeGraph:
    """Compile included triples into a KnowledgeGraph.

    One node per distinct canonical entity key over the included triples'
    subjects and objects; one edge per distinct (from, to, predicate). Node
    context concatenates the distinct source chunks mentioning the entity,
    in chunk_id order, truncated to opts.node_context_cap tokens. A triple
    referencing a missing chunk still creates its nodes (context falls back
    to the surface form) and records a warning.
    """
    opts = opts or BuildOptions()
    if not opts.include_status <= {"approved", "pending"}:
        raise ContractViolation(
            f"include_status must be a subset of {{'approved', 'pending'}}, got {set(opts.include_status)}"
        )
    warnings: list[str] = []
    display_names: dict[str, str] = {}
    chunk_ids_by_node: dict[str, set[str]] = {}
    edge_seen: set[tuple[str, str, str]] = set()
    edges: list[KgEdge] = []
    included = 0

    for triple in triples:
        if triple.status not in opts.include_status:
            continue
        try:
            triple.validate()
        except ContractViolation as exc:
            warnings.append(f"skipped invalid triple {triple!r}: {exc}")
            continue
        included += 1
        from_id = canonical_entity_key(triple.subject)
        to_id = canonical_entity_key(triple.object)
        for key, surface in ((from_id, triple.subject.strip()), (to_id, triple.object.strip())):
            display_names.setdefault(key, surface)
            bucket = chunk_ids_by_node.setdefault(key, set())
            if triple.source_chunk_id:
                bucket.add(triple.source_chunk_id)
        edge_key = (from_id, to_id, triple.predicate.strip())
        if edge_key not in edge_seen:
            edge_seen.add(edge_key)
            edges.append(KgEdge(*edge_key))

    nodes: dict[str, KgNode] = {}
    missing_reported: set[str] = set()
    for key, display in display_names.items():
        texts: list[str] = []
        for chunk_id in sorted(chunk_ids_by_node[key]):
            chunk = corpus.get_chunk(chunk_id) if corpus is not None else None
            if chunk is None:
                if chunk_id not in missing_reported:
                    warnings.append(f"source chunk {chunk_id} not found in corpus")
                    missing_reported.add(chunk_id)
                continue
            texts.append(chunk.text)
        context = "\n\n".join(texts) if texts else display
        context = truncate_tokens(context, opts.node_context_cap)
        nodes[key] = KgNode(node_id=key, display_name=display, context=context)

    return KnowledgeGraph(nodes, edges, built_from=included, warnings=warnings)


def traverse_kg(
    graph: KnowledgeGraph, seeds: Iterable[str], depth: int | str = "max"
) -> list[str]:
    """Breadth-first expansion from seed nodes over undirected edges.

    Returns seeds first (in given order, de-duplicated), then each BFS layer
    with ties inside a layer broken by ascending node_id. With depth="max"
    this is the union of the connected components containing the seeds.
    """
    if depth != "max" and (not isinstance(depth, int) or depth < 0):
        raise ContractViolation(f"depth must be 'max' or a non-negative integer, got {depth!r}")
    seed_list: list[str] = []
    seen: set[str] = set()
    for seed in seeds:
        if seed not in graph.nodes:
            raise NotFoundError(f"unknown seed node: {seed}")
        if seed not in seen:
            seen.add(seed)
            seed_list.append(seed)

    result = list(seed_list)
    frontier = seed_list
    hops = 0
    while frontier and (depth == "max" or hops < depth):
        next_layer: set[str] = set()
        for node_id in frontier:
            for neighbor in graph.neighbors(node_id):
                if neighbor not in seen:
                    next_layer.add(neighbor)
        frontier = sorted(next_layer)
        seen.update(frontier)
        result.extend(frontier)
        hops += 1
    return result


def neighborhood(
    graph: KnowledgeGraph, entity: str, depth: int | str = 1
) -> tuple[list[KgNode], list[KgEdge]]:
    """Subgraph of nodes within depth undirected hops of entity, plus induced edges."""
    key = canonical_entity_key(entity)
    if key not in graph.nodes:
        raise NotFoundError(f"unknown entity: {entity}")
    node_ids = traverse_kg(graph, [key], depth)
    id_set = set(node_ids)
    nodes = [graph.nodes[node_id] for node_id in node_ids]
    edges = [e for e in graph.edges if e.from_id in id_set and e.to_id in id_set]
    return nodes, edges


# -- review workflow ----------------------------------------------------------


class TripleStore:
    """Holds extracted triples and serializes review-status writes."""

    def __init__(self):
        self._triples: dict[int, Triple] = {}
        self._next_id = 1
        self._lock = threading.RLock()

    def add(self, triple: Triple) -> Triple:
        triple.validate()
        with self._lock:
            stored = replace(triple, triple_id=self._next_id)
            self._triples[self._next_id] = stored
            self._next_id += 1
            return stored

    def add_all(self, triples: Iterable[Triple]) -> list[Triple]:
        return [self.add(t) for t in triples]

    def get(self, triple_id: int) -> Triple:
        with self._lock:
            try:
                return self._triples[triple_id]
            except KeyError:
                raise NotFoundError(f"unknown triple: {triple_id}") from None

    def all(self) -> list[Triple]:
        with self._lock:
            return list(self._triples.values())

    def by_status(self, status: str) -> list[Triple]:
        with self._lock:
            return [t for t in self._triples.values() if t.status == status]

    def set_review_status(
        self, triple_id: int, status: str, flags: ReviewFlags | None = None
    ) -> Triple:
        """Record a review decision. pending -> approved|rejected only;
        re-applying the same decision is allowed and updates the flags."""
        if status not in ("approved", "rejected"):
            raise ContractViolation(f"review status must be approved or rejected, got {status!r}")
        with self._lock:
            triple = self.get(triple_id)
            if triple.status not in ("pending", status):
                raise ContractViolation(
                    f"triple {triple_id} is already {triple.status}; cannot change to {status}"
                )
            updated = replace(triple, status=status, flags=flags or triple.flags)
            self._triples[triple_id] = updated
            return updated

    def replace_all(self, triples: Iterable[Triple]) -> None:
        """Swap in a full set of triples, e.g. after a review CSV import."""
        with self._lock:
            self._triples = {}
            self._next_id = 1
            for triple in triples:
                self.add(triple)

    def __len__(self) -> int:
        with self._lock:
            return len(self._triples)


# -- CSV round-trip ------------------------------------------------------------


def _flag_to_csv(value: bool | None) -> str:
    if value is None:
        return ""
    return "true" if value else "false"


def _flag_from_csv(raw: str) -> bool | None:
    raw = raw.strip().lower()
    if raw == "":
        return None
    if raw == "true":
        return True
    if raw == "false":
        return False
    raise ValueError(f"expected true/false/empty, got {raw!r}")


def export_triples_csv(triples: Iterable[Triple]) -> str:
    """Serialize triples as RFC 4180 CSV with the canonical header."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(TRIPLE_CSV_HEADER)
    for t in triples:
        writer.writerow(
            [
                t.subject,
                t.predicate,
                t.object,
                t.source_chunk_id,
                t.status,
                _flag_to_csv(t.flags.precision),
                _flag_to_csv(t.flags.completeness),
                _flag_to_csv(t.flags.relevance),
            ]
        )
    return buf.getvalue()


def import_triples_csv(data: str | bytes) -> tuple[list[Triple], list[str]]:
    """Parse a triple CSV. Malformed rows become per-row errors with their
    line number; parsing continues past them."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data))
    triples: list[Triple] = []
    errors: list[str] = []
    try:
        header = next(reader)
    except StopIteration:
        return [], ["line 1: empty file, expected header"]
    if header != TRIPLE_CSV_HEADER:
        errors.append(f"line 1: unexpected header {header!r}")
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(TRIPLE_CSV_HEADER):
            errors.append(f"line {line}: expected {len(TRIPLE_CSV_HEADER)} columns, got {len(row)}")
            continue
        subject, predicate, obj, source_chunk_id, status, prec, comp, rel = row
        if not subject.strip() or not predicate.strip() or not obj.strip():
            errors.append(f"line {line}: subject/predicate/object must be non-empty")
            continue
        if status not in STATUSES:
            errors.append(f"line {line}: unknown status {status!r}")
            continue
        try:
            flags = ReviewFlags(
                precision=_flag_from_csv(prec),
                completeness=_flag_from_csv(comp),
                relevance=_flag_from_csv(rel),
            )
        except ValueError as exc:
            errors.append(f"line {line}: {exc}")
            continue
        triples.append(
            Triple(
                subject=subject,
                predicate=predicate,
                object=obj,
                source_chunk_id=source_chunk_id,
                status=status,
                flags=flags,
            )
        )
    return triples, errors
