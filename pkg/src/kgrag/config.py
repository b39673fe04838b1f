"""Engine settings: provider wiring, cache and retrieval knobs.

Settings live in ``settings.json`` inside the data directory. Every field
has an offline-friendly default (deterministic local embedder, stub LLM) so
a fresh data directory works with no configuration at all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .cache_cost import CacheConfig
from .corpus import CorpusConfig
from .embedding import DEFAULT_DIM, LocalHashEmbedder, RemoteEmbedder
from .errors import ConfigurationError
from .generation import RemoteLlm, StubLlm
from .retrieval import RetrievalParams

SETTINGS_FILENAME = "settings.json"


def _build_embedder(spec: dict):
    kind = spec.get("kind", "local")
    if kind == "local":
        return LocalHashEmbedder(dim=int(spec.get("dim", DEFAULT_DIM)))
    if kind == "remote":
        for key in ("endpoint", "model", "dim"):
            if key not in spec:
                raise ConfigurationError(f"remote embedding config requires {key!r}")
        return RemoteEmbedder(
            endpoint=spec["endpoint"],
            model=spec["model"],
            dim=int(spec["dim"]),
            api_key_env=spec.get("api_key_env", "KGRAG_EMBEDDING_API_KEY"),
        )
    raise ConfigurationError(f"unknown embedding kind {kind!r}")


def _build_llm(spec: dict):
    kind = spec.get("kind", "stub")
    if kind == "stub":
        return StubLlm()
    if kind == "remote":
        for key in ("endpoint", "model"):
            if key not in spec:
                raise ConfigurationError(f"remote llm config requires {key!r}")
        return RemoteLlm(
            endpoint=spec["endpoint"],
            model=spec["model"],
            api_key_env=spec.get("api_key_env", "KGRAG_LLM_API_KEY"),
            system_message=spec.get("system_message", ""),
            temperature=float(spec.get("temperature", 0.0)),
        )
    raise ConfigurationError(f"unknown llm kind {kind!r}")


@dataclass
class Settings:
    embedding: dict = field(default_factory=lambda: {"kind": "local", "dim": DEFAULT_DIM})
    cache_embedding: dict | None = None  # defaults to the retrieval embedder config
    llm: dict = field(default_factory=lambda: {"kind": "stub"})
    cache: CacheConfig = field(default_factory=CacheConfig)
    retrieval: RetrievalParams = field(default_factory=RetrievalParams)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    cost_provider_label: str = "DeepSeek-V3"
    canned_dir: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "Settings":
        settings = cls()
        settings.embedding = data.get("embedding", settings.embedding)
        settings.cache_embedding = data.get("cache_embedding", settings.cache_embedding)
        settings.llm = data.get("llm", settings.llm)
        cache = data.get("cache", {})
        settings.cache = CacheConfig(
            threshold=float(cache.get("threshold", 0.85)),
            capacity=int(cache.get("capacity", 1024)),
        )
        retrieval = data.get("retrieval", {})
        depth = retrieval.get("depth", "max")
        settings.retrieval = RetrievalParams(
            k=int(retrieval.get("k", 5)),
            depth=depth if depth == "max" else int(depth),
            context_token_cap=int(retrieval.get("context_token_cap", 4000)),
        )
        corpus = data.get("corpus", {})
        settings.corpus = CorpusConfig(
            chunk_size=int(corpus.get("chunk_size", 1000)),
            overlap=int(corpus.get("overlap", 0)),
        )
        cost = data.get("cost", {})
        settings.cost_provider_label = cost.get("provider_label", "DeepSeek-V3")
        extraction = data.get("extraction", {})
        settings.canned_dir = extraction.get("canned_dir")
        return settings

    @classmethod
    def load(cls, data_dir: str | Path) -> "Settings":
        path = Path(data_dir) / SETTINGS_FILENAME
        if not path.is_file():
            return cls()
        try:
            return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        except (ValueError, TypeError) as exc:
            raise ConfigurationError(f"invalid settings file {path}: {exc}") from exc

    def build_retrieval_embedder(self):
        return _build_embedder(self.embedding)

    def build_cache_embedder(self):
        return _build_embedder(self.cache_embedding or self.embedding)

    def build_llm(self):
        return _build_llm(self.llm)
