"""Semantic answer cache and the per-provider cost model.

The cache compares the embedding of a new query against stored query
embeddings; above the similarity threshold the stored answer is returned
unchanged (flagged as a cache hit) and nothing downstream runs. Entries are
kept under an LRU policy where both lookups and inserts refresh recency.

The cost model maps provider labels to a per-Q&A price and scales by query
volume and cache hit rate.
"""

from __future__ import annotations

import csv
import io
import json
import threading
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .embedding import cosine_similarity, embed_text
from .errors import ContractViolation, NotFoundError
from .generation import AnswerRecord

COST_CSV_HEADER = ["provider", "cost_per_qa_usd"]


@dataclass
class CacheConfig:
    threshold: float = 0.85
    capacity: int = 1024

    def validate(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ContractViolation(f"threshold must be in [0, 1], got {self.threshold}")
        if self.capacity < 1:
            raise ContractViolation(f"capacity must be >= 1, got {self.capacity}")


@dataclass
class ChatCacheEntry:
    query_text: str
    query_embedding: np.ndarray
    answer: AnswerRecord
    created_at: float
    hits: int = 0


@dataclass
class LookupResult:
    hit: bool
    entry: ChatCacheEntry | None = None
    best_score: float = 0.0

    @property
    def answer(self) -> AnswerRecord | None:
        """The stored answer, content untouched, flagged as a cache hit."""
        if self.entry is None:
            return None
        return replace(self.entry.answer, cache_hit=True)


class ChatCache:
    """LRU semantic cache over (query, embedding, answer) entries.

    The embedder given here is the cache's designated embedder; it may be a
    smaller model than the retrieval embedder. Lookups are serialized with
    inserts by a single lock (a linear scan over <= capacity entries is
    cheap at this scale, and no lookup can observe a half-inserted entry).
    """

    def __init__(self, embedder, config: CacheConfig | None = None):
        self.embedder = embedder
        self.config = config or CacheConfig()
        self.config.validate()
        self._entries: dict[int, ChatCacheEntry] = {}  # insertion order = recency order
        self._next_id = 1
        self._lock = threading.RLock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def entries(self) -> list[ChatCacheEntry]:
        with self._lock:
            return list(self._entries.values())

    def _touch(self, entry_id: int) -> None:
        entry = self._entries.pop(entry_id)
        self._entries[entry_id] = entry

    def lookup(self, query: str, config: CacheConfig | None = None) -> LookupResult:
        cfg = config or self.config
        query_vec = embed_text(self.embedder, query)
        with self._lock:
            best_id: int | None = None
            best_score = 0.0
            first = True
            for entry_id, entry in self._entries.items():
                score = cosine_similarity(query_vec, entry.query_embedding)
                # >= lets a more recent entry win ties
                if first or score >= best_score:
                    best_id, best_score, first = entry_id, score, False
            if best_id is None or best_score < cfg.threshold:
                return LookupResult(hit=False, best_score=best_score)
            entry = self._entries[best_id]
            entry.hits += 1
            self._touch(best_id)
            return LookupResult(hit=True, entry=entry, best_score=best_score)

    def insert(self, query: str, answer: AnswerRecord, config: CacheConfig | None = None) -> ChatCacheEntry:
        cfg = config or self.config
        query_vec = embed_text(self.embedder, query)
        entry = ChatCacheEntry(
            query_text=query,
            query_embedding=query_vec,
            answer=answer,
            created_at=time.time(),
        )
        with self._lock:
            self._entries[self._next_id] = entry
            self._next_id += 1
            while len(self._entries) > cfg.capacity:
                oldest_id = next(iter(self._entries))
                del self._entries[oldest_id]
        return entry

    def flush(self) -> None:
        with self._lock:
            self._entries.clear()

    # -- persistence (JSON lines, oldest recency first) -----------------------

    def save(self, path: str | Path) -> None:
        with self._lock:
            with open(path, "w", encoding="utf-8") as fh:
                for entry in self._entries.values():
                    fh.write(
                        json.dumps(
                            {
                                "query": entry.query_text,
                                "embedding": entry.query_embedding.tolist(),
                                "answer": entry.answer.to_json_dict(),
                                "created_at": entry.created_at,
                                "hits": entry.hits,
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )

    def load(self, path: str | Path) -> int:
        path = Path(path)
        if not path.is_file():
            return 0
        loaded = 0
        with self._lock:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    data = json.loads(line)
                    entry = ChatCacheEntry(
                        query_text=data["query"],
                        query_embedding=np.asarray(data["embedding"], dtype=np.float64),
                        answer=AnswerRecord.from_json_dict(data["answer"]),
                        created_at=data.get("created_at", 0.0),
                        hits=data.get("hits", 0),
                    )
                    self._entries[self._next_id] = entry
                    self._next_id += 1
                    loaded += 1
            while len(self._entries) > self.config.capacity:
                del self._entries[next(iter(self._entries))]
        return loaded


def cache_lookup(query: str, cache: ChatCache, cfg: CacheConfig | None = None) -> LookupResult:
    return cache.lookup(query, cfg)


def cache_insert(
    query: str, answer: AnswerRecord, cache: ChatCache, cfg: CacheConfig | None = None
) -> ChatCacheEntry:
    return cache.insert(query, answer, cfg)


# -- cost model ----------------------------------------------------------------


@dataclass
class CostModel:
    per_qa_usd: dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        for label, cost in self.per_qa_usd.items():
            if cost <= 0:
                raise ContractViolation(f"cost for {label!r} must be > 0, got {cost}")

    def _lookup(self, label: str) -> float:
        try:
            return self.per_qa_usd[label]
        except KeyError:
            known = ", ".join(sorted(self.per_qa_usd))
            raise NotFoundError(f"unknown provider {label!r}; known providers: {known}") from None

    def estimate_cost(self, provider_label: str, n_queries: int, cache_hit_rate: float) -> float:
        """USD cost of serving n_queries at the given cache hit rate."""
        if not 0.0 <= cache_hit_rate <= 1.0:
            raise ContractViolation(f"cache_hit_rate must be in [0, 1], got {cache_hit_rate}")
        if n_queries < 0:
            raise ContractViolation(f"n_queries must be >= 0, got {n_queries}")
        return self._lookup(provider_label) * n_queries * (1.0 - cache_hit_rate)

    def cost_ratio(self, a_label: str, b_label: str) -> float:
        return self._lookup(a_label) / self._lookup(b_label)

    @classmethod
    def from_csv(cls, data: str | bytes) -> "CostModel":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        reader = csv.reader(io.StringIO(data))
        header = next(reader, None)
        if header != COST_CSV_HEADER:
            raise ContractViolation(f"cost CSV header must be {COST_CSV_HEADER}, got {header}")
        per_qa: dict[str, float] = {}
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ContractViolation(f"cost CSV row must have 2 columns, got {row}")
            per_qa[row[0]] = float(row[1])
        model = cls(per_qa)
        model.validate()
        return model

    @classmethod
    def from_csv_file(cls, path: str | Path) -> "CostModel":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def bundled_cost_csv() -> str:
    """The cost table shipped with the package."""
    return resources.files("kgrag").joinpath("data/cost_per_qa.csv").read_text(encoding="utf-8")


def bundled_cost_model() -> CostModel:
    return CostModel.from_csv(bundled_cost_csv())


def estimate_cost(
    model: CostModel, provider_label: str, n_queries: int, cache_hit_rate: float
) -> float:
    return model.estimate_cost(provider_label, n_queries, cache_hit_rate)


def cost_ratio(model: CostModel, a_label: str, b_label: str) -> float:
    return model.cost_ratio(a_label, b_label)
