"""LLM-driven triple extraction over corpus chunks.

Each chunk is rendered into a standardized extraction prompt and sent to a
provider; the raw output is scanned for flat bracketed groups like
``[Entity1, Relationship, Entity2]``. The parser is total: malformed groups
become warnings, never exceptions. A canned-output provider replays fixture
files keyed by chunk_id so the whole pipeline runs offline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .corpus import Chunk, Corpus
from .errors import ExtractionPipelineError, ProviderError
from .kg import Triple

EXTRACTION_INSTRUCTION = (
    "Extract entities and relationships from the following text in "
    "[Entity1, Relationship, Entity2] format"
)

DEFAULT_EXTRACTION_TEMPLATE = EXTRACTION_INSTRUCTION + "\n\n{chunk_text}"

CHUNK_SLOT = "{chunk_text}"


@dataclass
class ExtractionPromptTemplate:
    """Template text with a {chunk_text} slot."""

    template: str = DEFAULT_EXTRACTION_TEMPLATE

    def render(self, chunk_text: str) -> str:
        if CHUNK_SLOT not in self.template:
            raise ProviderError(f"extraction template missing {CHUNK_SLOT} slot")
        return self.template.replace(CHUNK_SLOT, chunk_text)


def render_extraction_prompt(chunk: Chunk, template: ExtractionPromptTemplate | None = None) -> str:
    """Render the extraction prompt for one chunk; contains the chunk verbatim."""
    template = template or ExtractionPromptTemplate()
    return template.render(chunk.text)


def parse_triples(raw: str, chunk_id: str = "") -> tuple[list[Triple], list[str]]:
    """Scan arbitrary LLM output for flat [a, b, c] groups.

    Groups with nested brackets, a field count other than 3, or any empty
    field are skipped with a warning. Surrounding prose is ignored. Returned
    triples are pending and carry chunk_id as provenance.
    """
    triples: list[Triple] = []
    warnings: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        start = raw.find("[", i)
        if start == -1:
            break
        end = raw.find("]", start + 1)
        if end == -1:
            warnings.append(f"unclosed bracket at position {start}")
            break
        inner = raw[start + 1 : end]
        nested = inner.find("[")
        if nested != -1:
            warnings.append(f"nested bracket group at position {start}; skipped")
            i = start + 1 + nested
            continue
        fields = [f.strip() for f in inner.split(",")]
        if len(fields) != 3:
            warnings.append(
                f"bracket group at position {start} has {len(fields)} fields, expected 3"
            )
        elif any(not f for f in fields):
            warnings.append(f"bracket group at position {start} has an empty field")
        else:
            triples.append(
                Triple(
                    subject=fields[0],
                    predicate=fields[1],
                    object=fields[2],
                    source_chunk_id=chunk_id,
                    status="pending",
                )
            )
        i = end + 1
    return triples, warnings


class ChunkCompleter(Protocol):
    """Anything that can produce raw extraction output for a chunk."""

    def complete_chunk(self, chunk_id: str, prompt: str) -> str: ...


class CannedOutputs:
    """Replays fixture outputs keyed by chunk_id.

    Accepts either a mapping {chunk_id: raw_output} or a directory of
    <chunk_id>.txt files. A chunk with no canned output is treated as a
    provider failure for that chunk.
    """

    def __init__(self, source: Mapping[str, str] | str | Path):
        if isinstance(source, (str, Path)):
            self._directory: Path | None = Path(source)
            self._mapping: dict[str, str] = {}
        else:
            self._directory = None
            self._mapping = dict(source)

    def complete_chunk(self, chunk_id: str, prompt: str) -> str:
        if self._directory is not None:
            path = self._directory / f"{chunk_id}.txt"
            if not path.is_file():
                raise ProviderError(f"no canned output for chunk {chunk_id} at {path}")
            return path.read_text(encoding="utf-8")
        try:
            return self._mapping[chunk_id]
        except KeyError:
            raise ProviderError(f"no canned output for chunk {chunk_id}") from None


class LlmChunkCompleter:
    """Adapts a generation-side LLM provider to the extraction interface."""

    def __init__(self, llm):
        self._llm = llm

    def complete_chunk(self, chunk_id: str, prompt: str) -> str:
        return self._llm.complete(prompt)


@dataclass
class ExtractionRun:
    run_id: str
    chunk_id: str
    raw_llm_output: str = ""
    parsed: list[Triple] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def to_json_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "chunk_id": self.chunk_id,
            "raw_llm_output": self.raw_llm_output,
            "triples": [
                {
                    "subject": t.subject,
                    "predicate": t.predicate,
                    "object": t.object,
                    "source_chunk_id": t.source_chunk_id,
                }
                for t in self.parsed
            ],
            "warnings": self.warnings,
            "error": self.error,
        }


def extract_corpus(
    corpus: Corpus,
    provider: ChunkCompleter,
    template: ExtractionPromptTemplate | None = None,
) -> list[ExtractionRun]:
    """Run extraction over every chunk of the corpus.

    A per-chunk provider failure is recorded on its run and the pipeline
    continues; if more than half of the chunks fail, the whole run is
    rejected with ExtractionPipelineError (runs attached for inspection).
    """
    template = template or ExtractionPromptTemplate()
    runs: list[ExtractionRun] = []
    failures = 0
    for index, chunk in enumerate(corpus.chunks):
        run = ExtractionRun(run_id=f"run-{index:04d}-{chunk.chunk_id}", chunk_id=chunk.chunk_id)
        prompt = template.render(chunk.text)
        try:
            raw = provider.complete_chunk(chunk.chunk_id, prompt)
        except Exception as exc:  # provider errors must not kill the pipeline
            run.error = str(exc)
            failures += 1
        else:
            run.raw_llm_output = raw
            run.parsed, run.warnings = parse_triples(raw, chunk.chunk_id)
        runs.append(run)
    if runs and failures * 2 > len(runs):
        error = ExtractionPipelineError(
            f"{failures} of {len(runs)} chunk extractions failed (more than half)"
        )
        error.runs = runs
        raise error
    return runs


def write_runs_jsonl(runs: Iterable[ExtractionRun], path: str | Path) -> None:
    """Persist an extraction report, one run per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for run in runs:
            fh.write(json.dumps(run.to_json_dict(), ensure_ascii=False) + "\n")
