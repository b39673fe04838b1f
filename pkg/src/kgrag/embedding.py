"""Embedding providers and vector math for similarity retrieval.

Two provider kinds are supported:

* ``local-deterministic``: a hashed bag-of-words embedder. Same text in,
  bitwise-same vector out, no network. This is what tests and offline runs
  use, and it is the default everywhere.
* ``remote``: a generic embeddings HTTP endpoint (text in, float array out)
  so any vendor can be plugged in via configuration.
"""

from __future__ import annotations

import math
import os
import re
import threading

import numpy as np

from .errors import ContractViolation, ProviderError

_TERM_RE = re.compile(r"[^\W_]+")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

DEFAULT_DIM = 256


def fnv1a_64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def local_hash_embed(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic bag-of-words embedding.

    Lowercases, splits on non-alphanumeric runs, hashes each term with
    FNV-1a 64-bit into one of ``dim`` signed buckets (sign from bit 63),
    and L2-normalizes the signed counts unless the vector is all-zero.
    """
    if dim < 1:
        raise ContractViolation(f"dim must be >= 1, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for term in _TERM_RE.findall(text.lower()):
        h = fnv1a_64(term.encode("utf-8"))
        sign = 1.0 if (h >> 63) == 0 else -1.0
        vec[h % dim] += sign
    norm = math.sqrt(float(np.dot(vec, vec)))
    if norm == 0.0:
        return vec
    return vec / norm


def cosine_similarity(a, b) -> float:
    """Standard cosine similarity; 0.0 if either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def top_k_indices(scores, k: int) -> list[int]:
    """Indices of the k highest scores, descending; ties by ascending index."""
    if k < 0:
        raise ContractViolation(f"k must be >= 0, got {k}")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order[: min(k, len(order))]


class LocalHashEmbedder:
    """Deterministic offline embedding provider."""

    kind = "local-deterministic"

    def __init__(self, dim: int = DEFAULT_DIM, name: str = "local-hash"):
        if dim < 1:
            raise ContractViolation(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.name = name

    def embed(self, text: str) -> np.ndarray:
        return local_hash_embed(text, self.dim)


class RemoteEmbedder:
    """Generic embeddings HTTP client.

    Request body is ``{"model": ..., "input": text}``; the response must
    carry the vector in an ``embedding`` field (a top-level one or the
    OpenAI-style ``data[0].embedding`` nesting).
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        model: str,
        dim: int,
        api_key_env: str = "KGRAG_EMBEDDING_API_KEY",
        timeout: float = 30.0,
        max_in_flight: int = 8,
        name: str | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.name = name or model
        self._slots = threading.Semaphore(max_in_flight)

    def embed(self, text: str) -> np.ndarray:
        import httpx

        headers = {}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {"model": self.model, "input": text}
        with self._slots:
            try:
                resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            except httpx.HTTPError as exc:
                raise ProviderError(f"embedding request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(
                f"embedding endpoint returned {resp.status_code}", status=resp.status_code
            )
        body = resp.json()
        values = body.get("embedding")
        if values is None and isinstance(body.get("data"), list) and body["data"]:
            values = body["data"][0].get("embedding")
        if values is None:
            raise ProviderError("embedding response missing 'embedding' field")
        vec = np.asarray(values, dtype=np.float64)
        if vec.ndim != 1:
            raise ProviderError(f"embedding response has shape {vec.shape}, expected 1-D")
        return vec


def embed_text(provider, text: str) -> np.ndarray:
    """Embed text with the given provider; all finite values, provider dim."""
    vec = provider.embed(text)
    if not np.all(np.isfinite(vec)):
        raise ProviderError(f"provider {provider.name} returned non-finite values")
    return vec
