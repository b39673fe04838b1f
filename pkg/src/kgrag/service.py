"""HTTP service exposing the tutoring pipeline.

Plain request/response JSON, no streaming. Mutating endpoints serialize
through the engine's write lock; read endpoints serve from the current
snapshot. The built chat UI, when present, is served statically at ``/``.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse, JSONResponse
from pydantic import BaseModel, Field

from .engine import TutorEngine
from .errors import (
    ConfigurationError,
    ContractViolation,
    IngestionError,
    KgragError,
    NotFoundError,
    ProviderError,
)
from .generation import MODES
from .kg import ReviewFlags


class AskRequest(BaseModel):
    session_id: str = ""
    query: str
    mode: str = "kgrag"
    use_cache: bool = True


class ChunkRef(BaseModel):
    chunk_id: str
    score: float


class NodeRef(BaseModel):
    node_id: str
    display_name: str


class AskResponse(BaseModel):
    answer_text: str
    mode: str
    cache_hit: bool
    chunk_refs: list[ChunkRef] = Field(default_factory=list)
    node_refs: list[NodeRef] = Field(default_factory=list)
    cost_estimate_usd: float = 0.0
    timing_ms: int = 0


class GraphNodeModel(BaseModel):
    id: str
    display_name: str
    context: str


class GraphEdgeModel(BaseModel):
    from_id: str = Field(alias="from")
    to: str
    predicate: str

    model_config = {"populate_by_name": True}


class NeighborhoodResponse(BaseModel):
    nodes: list[GraphNodeModel]
    edges: list[GraphEdgeModel]


class HealthResponse(BaseModel):
    status: str
    document_count: int
    chunk_count: int
    node_count: int
    edge_count: int
    cache_entries: int
    graph_built: bool
    triple_count: int


class IngestRequest(BaseModel):
    path: str | None = None
    doc_id: str | None = None
    text: str | None = None
    title: str | None = None


class ExtractRequest(BaseModel):
    canned_dir: str | None = None


class BuildRequest(BaseModel):
    include_pending: bool = False
    node_context_cap: int | None = None


class ReviewRequest(BaseModel):
    triple_id: int
    status: str
    precision: bool | None = None
    completeness: bool | None = None
    relevance: bool | None = None


FALLBACK_INDEX = """<!doctype html>
<html><head><title>kgrag</title></head>
<body>
<h1>kgrag tutoring engine</h1>
<p>The engine is running. The chat UI has not been built; see the README
for how to build the frontend, or use the JSON API under <code>/api</code>.</p>
</body></html>
"""


def create_app(engine: TutorEngine, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="kgrag", version="0.1.0")

    @app.exception_handler(KgragError)
    async def kgrag_error_handler(request, exc: KgragError):
        status = 500
        body: dict = {"detail": str(exc)}
        if isinstance(exc, NotFoundError):
            status = 404
        elif isinstance(exc, (ContractViolation, IngestionError)):
            status = 400
        elif isinstance(exc, ConfigurationError):
            status = 409
        elif isinstance(exc, ProviderError):
            status = 502
        return JSONResponse(status_code=status, content=body)

    @app.post("/api/ask", response_model=AskResponse)
    def ask(req: AskRequest) -> AskResponse:
        if not req.query.strip():
            raise HTTPException(status_code=400, detail="query must be non-empty")
        if req.mode not in MODES:
            raise HTTPException(
                status_code=400,
                detail={"error": f"unknown mode {req.mode!r}", "allowed_modes": list(MODES)},
            )
        result = engine.ask(
            req.query, mode=req.mode, use_cache=req.use_cache, session_id=req.session_id
        )
        return AskResponse(**result.to_json_dict())

    @app.get("/api/graph/neighborhood", response_model=NeighborhoodResponse)
    def graph_neighborhood(
        entity: str = Query(...), depth: str = Query("1")
    ) -> NeighborhoodResponse:
        if depth == "max":
            parsed_depth: int | str = "max"
        else:
            try:
                parsed_depth = int(depth)
            except ValueError:
                raise HTTPException(
                    status_code=400, detail=f"depth must be an integer or 'max', got {depth!r}"
                ) from None
        data = engine.neighborhood(entity, parsed_depth)
        return NeighborhoodResponse(**data)

    @app.get("/api/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(**engine.health())

    @app.post("/api/ingest")
    def ingest(req: IngestRequest) -> dict:
        if req.path:
            return engine.ingest_path(req.path)
        if req.doc_id is not None and req.text is not None:
            return engine.ingest_text(req.doc_id, req.text, req.title)
        raise HTTPException(status_code=400, detail="provide either path or doc_id+text")

    @app.post("/api/extract")
    def extract(req: ExtractRequest) -> dict:
        return engine.extract(canned_dir=req.canned_dir)

    @app.post("/api/graph/build")
    def build(req: BuildRequest) -> dict:
        return engine.build(
            include_pending=req.include_pending, node_context_cap=req.node_context_cap
        )

    @app.post("/api/triples/review")
    def review(req: ReviewRequest) -> dict:
        flags = ReviewFlags(
            precision=req.precision, completeness=req.completeness, relevance=req.relevance
        )
        return engine.review(req.triple_id, req.status, flags)

    ui_path = Path(ui_dir) if ui_dir else None
    if ui_path and ui_path.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_path), html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def index() -> str:
            return FALLBACK_INDEX

    return app
