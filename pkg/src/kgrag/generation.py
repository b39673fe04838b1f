"""Answer generation in three modes: plain LLM, similarity-grounded, graph-enhanced.

The tutor prompt wraps retrieved material and the student question; the
plain mode uses a reduced prompt with no material section at all. Providers
are a deterministic stub (hash of the prompt, for offline runs and tests)
and a generic chat-completions HTTP client.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, field

from .corpus import Corpus, count_tokens
from .errors import ConfigurationError, ContractViolation, ProviderError
from .kg import KnowledgeGraph
from .retrieval import (
    ChunkIndex,
    ExpandedContext,
    NodeIndex,
    RetrievalParams,
    SimilarityContext,
    assemble_contexts,
    kgr_retrieve,
    rag_retrieve,
)

MODES = ("llm_only", "rag", "kgrag")

CONTENT_SLOT = "{retrieved_content}"
QUERY_SLOT = "{original_query}"

TUTOR_TEMPLATE = (
    "You are an expert tutor. Using the following course material: "
    "{retrieved_content}, please answer the student's question: "
    "{original_query}. Explain concepts clearly with detail."
)

TUTOR_TEMPLATE_NO_MATERIAL = (
    "You are an expert tutor. Please answer the student's question: "
    "{original_query}. Explain concepts clearly with detail."
)


@dataclass
class TutorPromptTemplate:
    """Template with slots for retrieved content and the student query."""

    template: str = TUTOR_TEMPLATE

    def render(self, context_text: str, query: str) -> str:
        return self.template.replace(CONTENT_SLOT, context_text).replace(QUERY_SLOT, query)


def render_tutor_prompt(context_text: str, query: str) -> str:
    return TutorPromptTemplate().render(context_text, query)


def render_plain_prompt(query: str) -> str:
    return TUTOR_TEMPLATE_NO_MATERIAL.replace(QUERY_SLOT, query)


class StubLlm:
    """Deterministic provider: answer is a hash of the full prompt.

    Keeps every prompt it saw in ``calls`` so tests can assert on what the
    model would actually receive.
    """

    kind = "stub"
    name = "stub"

    def __init__(self):
        self.calls: list[str] = []

    def complete(self, prompt: str) -> str:
        self.calls.append(prompt)
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        return f"STUB-ANSWER\n{digest}"


class RemoteLlm:
    """Generic chat-completions client (system + user messages in, text out).

    Transient failures are retried up to ``max_retries`` times with
    exponential backoff; temperature defaults to 0 for reproducible tutoring.
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "KGRAG_LLM_API_KEY",
        system_message: str = "",
        temperature: float = 0.0,
        timeout: float = 120.0,
        max_retries: int = 2,
        name: str | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.system_message = system_message
        self.temperature = temperature
        self.timeout = timeout
        self.max_retries = max_retries
        self.name = name or model

    def complete(self, prompt: str) -> str:
        import httpx

        headers = {}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        messages = []
        if self.system_message:
            messages.append({"role": "system", "content": self.system_message})
        messages.append({"role": "user", "content": prompt})
        payload = {"model": self.model, "messages": messages, "temperature": self.temperature}

        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(0.5 * (2 ** (attempt - 1)))
            try:
                resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if resp.status_code in (429, 500, 502, 503, 504):
                last_error = ProviderError(
                    f"LLM endpoint returned {resp.status_code}", status=resp.status_code
                )
                continue
            if resp.status_code != 200:
                raise ProviderError(
                    f"LLM endpoint returned {resp.status_code}",
                    status=resp.status_code,
                    retries=attempt,
                )
            body = resp.json()
            try:
                content = body["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError):
                content = body.get("content")
            if not isinstance(content, str):
                raise ProviderError("LLM response missing message content", retries=attempt)
            return content
        raise ProviderError(
            f"LLM request failed after {self.max_retries + 1} attempts: {last_error}",
            retries=self.max_retries,
        )


@dataclass
class AnswerRecord:
    answer_text: str
    mode: str
    chunk_ids: list[str] = field(default_factory=list)
    chunk_scores: list[float] = field(default_factory=list)
    node_ids: list[str] = field(default_factory=list)
    node_display_names: list[str] = field(default_factory=list)
    prompt_token_count: int = 0
    provider_name: str = ""
    cache_hit: bool = False

    def to_json_dict(self) -> dict:
        return {
            "answer_text": self.answer_text,
            "mode": self.mode,
            "chunk_ids": self.chunk_ids,
            "chunk_scores": self.chunk_scores,
            "node_ids": self.node_ids,
            "node_display_names": self.node_display_names,
            "prompt_token_count": self.prompt_token_count,
            "provider_name": self.provider_name,
            "cache_hit": self.cache_hit,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "AnswerRecord":
        return cls(
            answer_text=data["answer_text"],
            mode=data["mode"],
            chunk_ids=list(data.get("chunk_ids", [])),
            chunk_scores=list(data.get("chunk_scores", [])),
            node_ids=list(data.get("node_ids", [])),
            node_display_names=list(data.get("node_display_names", [])),
            prompt_token_count=data.get("prompt_token_count", 0),
            provider_name=data.get("provider_name", ""),
            cache_hit=data.get("cache_hit", False),
        )


def build_prompt(
    query: str,
    mode: str,
    corpus: Corpus | None,
    graph: KnowledgeGraph | None,
    embedder,
    params: RetrievalParams | None = None,
    chunk_index: ChunkIndex | None = None,
    node_index: NodeIndex | None = None,
) -> tuple[str, SimilarityContext | None, ExpandedContext | None]:
    """Retrieve per mode and render the tutor prompt."""
    if mode not in MODES:
        raise ContractViolation(f"unknown mode {mode!r}; allowed: {', '.join(MODES)}")
    if mode == "llm_only":
        return render_plain_prompt(query), None, None
    if corpus is None:
        raise ConfigurationError(f"mode {mode} requires a corpus")
    params = params or RetrievalParams()
    sim = rag_retrieve(query, corpus, embedder, params, index=chunk_index)
    exp: ExpandedContext | None = None
    if mode == "kgrag":
        if graph is None:
            raise ConfigurationError("mode kgrag requires a built knowledge graph")
        exp = kgr_retrieve(query, graph, embedder, params, index=node_index)
    context_text = assemble_contexts(sim, exp)
    return render_tutor_prompt(context_text, query), sim, exp


def generate(
    query: str,
    mode: str,
    *,
    llm,
    embedder,
    corpus: Corpus | None = None,
    graph: KnowledgeGraph | None = None,
    params: RetrievalParams | None = None,
    chunk_index: ChunkIndex | None = None,
    node_index: NodeIndex | None = None,
) -> AnswerRecord:
    """Produce an answer with full retrieval provenance."""
    prompt, sim, exp = build_prompt(
        query, mode, corpus, graph, embedder, params, chunk_index, node_index
    )
    answer_text = llm.complete(prompt)
    record = AnswerRecord(
        answer_text=answer_text,
        mode=mode,
        prompt_token_count=count_tokens(prompt),
        provider_name=getattr(llm, "name", ""),
    )
    if sim is not None:
        record.chunk_ids = list(sim.chunk_ids)
        record.chunk_scores = list(sim.scores)
    if exp is not None:
        record.node_ids = list(exp.traversed_node_ids)
        record.node_display_names = [
            graph.nodes[node_id].display_name if graph and node_id in graph.nodes else node_id
            for node_id in exp.traversed_node_ids
        ]
    return record
