"""Course material ingestion and fixed-size token chunking.

A token is a maximal run of non-whitespace characters. This is deliberately
provider-independent: chunk boundaries never depend on which embedding or
LLM vendor is configured, so chunk ids are stable across re-runs.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ContractViolation, EncodingError, IngestionError, NotFoundError

_TOKEN_RE = re.compile(r"\S+")

CHUNKS_CSV_HEADER = ["chunk_id", "doc_id", "ordinal", "token_count", "text"]


def tokenize(text: str) -> list[str]:
    """Split text into whitespace-delimited tokens, in order."""
    return text.split()


def count_tokens(text: str) -> int:
    return len(text.split())


def truncate_tokens(text: str, max_tokens: int) -> str:
    """Cut text after its max_tokens-th token, preserving internal whitespace."""
    if max_tokens <= 0:
        return ""
    last_end = 0
    for i, m in enumerate(_TOKEN_RE.finditer(text)):
        if i == max_tokens:
            return text[:last_end]
        last_end = m.end()
    return text


@dataclass
class Document:
    doc_id: str
    title: str
    body: str


@dataclass
class Chunk:
    chunk_id: str
    doc_id: str
    ordinal: int
    text: str
    token_count: int


@dataclass
class CorpusConfig:
    chunk_size: int = 1000
    overlap: int = 0

    def validate(self) -> None:
        if self.chunk_size < 1:
            raise ContractViolation(f"chunk_size must be >= 1, got {self.chunk_size}")
        if not 0 <= self.overlap < self.chunk_size:
            raise ContractViolation(
                f"overlap must satisfy 0 <= overlap < chunk_size, got {self.overlap}"
            )


def chunk_id_for(doc_id: str, ordinal: int) -> str:
    return f"{doc_id}-{ordinal:04d}"


def chunk_document(doc: Document, cfg: CorpusConfig | None = None) -> list[Chunk]:
    """Segment a document into fixed-size token chunks.

    With overlap 0 the chunks partition the document token sequence exactly;
    only the last chunk of a document may be shorter than chunk_size.
    """
    cfg = cfg or CorpusConfig()
    cfg.validate()
    tokens = tokenize(doc.body)
    if not tokens:
        return []
    step = cfg.chunk_size - cfg.overlap
    chunks: list[Chunk] = []
    ordinal = 0
    for start in range(0, len(tokens), step):
        window = tokens[start : start + cfg.chunk_size]
        if not window:
            break
        chunks.append(
            Chunk(
                chunk_id=chunk_id_for(doc.doc_id, ordinal),
                doc_id=doc.doc_id,
                ordinal=ordinal,
                text=" ".join(window),
                token_count=len(window),
            )
        )
        ordinal += 1
        if start + cfg.chunk_size >= len(tokens):
            break
    return chunks


class Corpus:
    """An ordered collection of documents and their chunks.

    Ingestion replaces any previous document with the same doc_id. Reads of a
    built corpus are safe from concurrent readers; ingestion itself must be
    serialized by the caller.
    """

    def __init__(self, config: CorpusConfig | None = None):
        self.config = config or CorpusConfig()
        self.config.validate()
        self._documents: dict[str, Document] = {}
        self._chunks_by_doc: dict[str, list[Chunk]] = {}

    # -- ingestion -----------------------------------------------------------

    def ingest_text(self, doc_id: str, body: str, title: str | None = None) -> Document:
        if not doc_id:
            raise ContractViolation("doc_id must be non-empty")
        doc = Document(doc_id=doc_id, title=title or doc_id, body=body)
        self._documents[doc_id] = doc
        self._chunks_by_doc[doc_id] = chunk_document(doc, self.config)
        return doc

    def ingest_file(self, path: str | Path) -> Document:
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise IngestionError(f"cannot read {path}: {exc}") from exc
        try:
            body = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"{path} is not valid UTF-8: {exc}") from exc
        return self.ingest_text(doc_id=path.stem, body=body, title=path.stem)

    # -- accessors -----------------------------------------------------------

    @property
    def documents(self) -> list[Document]:
        return list(self._documents.values())

    def get_document(self, doc_id: str) -> Document:
        try:
            return self._documents[doc_id]
        except KeyError:
            raise NotFoundError(f"unknown document: {doc_id}") from None

    def chunks_for(self, doc_id: str) -> list[Chunk]:
        return list(self._chunks_by_doc.get(doc_id, []))

    @property
    def chunks(self) -> list[Chunk]:
        out: list[Chunk] = []
        for doc_id in self._documents:
            out.extend(self._chunks_by_doc[doc_id])
        return out

    def get_chunk(self, chunk_id: str) -> Chunk | None:
        for chunks in self._chunks_by_doc.values():
            for chunk in chunks:
                if chunk.chunk_id == chunk_id:
                    return chunk
        return None

    def __len__(self) -> int:
        return len(self._documents)

    def clone(self) -> "Corpus":
        """Shallow copy for snapshot swaps; documents and chunks are shared."""
        other = Corpus(CorpusConfig(self.config.chunk_size, self.config.overlap))
        other._documents = dict(self._documents)
        other._chunks_by_doc = {k: list(v) for k, v in self._chunks_by_doc.items()}
        return other

    # -- persistence ---------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        """Persist as docs/<doc_id>.txt plus chunks.csv (RFC 4180)."""
        directory = Path(directory)
        docs_dir = directory / "docs"
        docs_dir.mkdir(parents=True, exist_ok=True)
        for doc in self._documents.values():
            (docs_dir / f"{doc.doc_id}.txt").write_text(doc.body, encoding="utf-8")
        with open(directory / "chunks.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CHUNKS_CSV_HEADER)
            for chunk in self.chunks:
                writer.writerow(
                    [chunk.chunk_id, chunk.doc_id, chunk.ordinal, chunk.token_count, chunk.text]
                )

    @classmethod
    def load(cls, directory: str | Path, config: CorpusConfig | None = None) -> "Corpus":
        directory = Path(directory)
        corpus = cls(config)
        chunks_path = directory / "chunks.csv"
        docs_dir = directory / "docs"
        if docs_dir.is_dir():
            for path in sorted(docs_dir.glob("*.txt")):
                doc_id = path.stem
                body = path.read_text(encoding="utf-8")
                corpus._documents[doc_id] = Document(doc_id=doc_id, title=doc_id, body=body)
                corpus._chunks_by_doc[doc_id] = []
        if chunks_path.is_file():
            with open(chunks_path, encoding="utf-8", newline="") as fh:
                reader = csv.DictReader(fh)
                for row in reader:
                    chunk = Chunk(
                        chunk_id=row["chunk_id"],
                        doc_id=row["doc_id"],
                        ordinal=int(row["ordinal"]),
                        text=row["text"],
                        token_count=int(row["token_count"]),
                    )
                    corpus._chunks_by_doc.setdefault(chunk.doc_id, []).append(chunk)
        for chunks in corpus._chunks_by_doc.values():
            chunks.sort(key=lambda c: c.ordinal)
        # Reconstruct bodies for docs present only in chunks.csv.
        for doc_id, chunks in corpus._chunks_by_doc.items():
            if doc_id not in corpus._documents:
                body = " ".join(c.text for c in chunks)
                corpus._documents[doc_id] = Document(doc_id, doc_id, body)
        return corpus
