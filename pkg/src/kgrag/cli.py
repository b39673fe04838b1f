"""Command-line interface for the tutoring engine."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import KgragError

DEFAULT_DATA_DIR = "kgrag_data"


def _data_dir(args) -> Path:
    return Path(args.data_dir or os.environ.get("KGRAG_DATA_DIR") or DEFAULT_DATA_DIR)


def _engine(args):
    from .config import Settings
    from .engine import TutorEngine

    data_dir = _data_dir(args)
    settings = Settings.load(data_dir)
    chunk_size = getattr(args, "chunk_size", None)
    overlap = getattr(args, "overlap", None)
    if chunk_size is not None:
        settings.corpus.chunk_size = chunk_size
    if overlap is not None:
        settings.corpus.overlap = overlap
    return TutorEngine(data_dir, settings)


def cmd_ingest(args) -> int:
    engine = _engine(args)
    result = engine.ingest_path(args.path)
    print(
        f"ingested {result['documents_ingested']} document(s); "
        f"corpus now has {result['document_count']} documents, {result['chunk_count']} chunks"
    )
    return 0


def cmd_extract(args) -> int:
    engine = _engine(args)
    result = engine.extract(canned_dir=args.canned)
    print(
        f"extraction: {result['runs']} runs, {result['failures']} failures, "
        f"{result['triples_added']} triples added ({result['pending_triples']} pending review)"
    )
    return 0


def cmd_review_export(args) -> int:
    engine = _engine(args)
    Path(args.csv).write_text(engine.export_review_csv(), encoding="utf-8")
    print(f"exported {len(engine.triples)} triples to {args.csv}")
    return 0


def cmd_review_import(args) -> int:
    engine = _engine(args)
    result = engine.import_review_csv(Path(args.csv).read_text(encoding="utf-8"))
    print(f"imported {result['imported']} triples from {args.csv}")
    for error in result["errors"]:
        print(f"  warning: {error}", file=sys.stderr)
    return 0


def cmd_build(args) -> int:
    engine = _engine(args)
    result = engine.build(
        include_pending=args.include_pending, node_context_cap=args.context_cap
    )
    print(
        f"graph built: {result['node_count']} nodes, {result['edge_count']} edges "
        f"(from {result['built_from']} triples)"
    )
    for warning in result["warnings"]:
        print(f"  warning: {warning}", file=sys.stderr)
    return 0


def cmd_ask(args) -> int:
    engine = _engine(args)
    result = engine.ask(
        args.query, mode=args.mode, use_cache=not args.no_cache, session_id=args.session
    )
    if args.json:
        print(json.dumps(result.to_json_dict(), ensure_ascii=False, indent=2))
        return 0
    print(result.answer_text)
    print()
    tag = "cache hit" if result.cache_hit else f"{result.timing_ms} ms"
    print(f"[mode={result.mode} | {tag} | est. cost ${result.cost_estimate_usd:.6f}]")
    if result.chunk_refs:
        print("chunks: " + ", ".join(r["chunk_id"] for r in result.chunk_refs))
    if result.node_refs:
        print("concepts: " + ", ".join(r["display_name"] for r in result.node_refs))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    engine = _engine(args)
    ui_dir = args.ui_dir or os.environ.get("KGRAG_UI_DIR")
    app = create_app(engine, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_cost(args) -> int:
    from .cache_cost import CostModel, bundled_cost_model

    table = _data_dir(args) / "cost_per_qa.csv"
    model = CostModel.from_csv_file(table) if table.is_file() else bundled_cost_model()
    cost = model.estimate_cost(args.provider, args.n, args.hit_rate)
    print(f"{args.provider}: {args.n} queries at hit rate {args.hit_rate} -> ${cost:.6f}")
    return 0


def cmd_cache_flush(args) -> int:
    engine = _engine(args)
    engine.flush_cache()
    print("cache flushed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgrag",
        description="Knowledge-graph-enhanced RAG tutoring engine",
    )
    parser.add_argument(
        "--data-dir",
        default=None,
        help=f"engine data directory (default: $KGRAG_DATA_DIR or ./{DEFAULT_DATA_DIR})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="ingest a text/markdown file or directory")
    p_ingest.add_argument("path")
    p_ingest.add_argument("--chunk-size", type=int, default=None)
    p_ingest.add_argument("--overlap", type=int, default=None)
    p_ingest.set_defaults(func=cmd_ingest)

    p_extract = sub.add_parser("extract", help="run triple extraction over all chunks")
    p_extract.add_argument("--canned", default=None, help="directory of canned <chunk_id>.txt outputs")
    p_extract.set_defaults(func=cmd_extract)

    p_review = sub.add_parser("review", help="export or import the triple review CSV")
    review_sub = p_review.add_subparsers(dest="review_command", required=True)
    p_rexport = review_sub.add_parser("export")
    p_rexport.add_argument("csv")
    p_rexport.set_defaults(func=cmd_review_export)
    p_rimport = review_sub.add_parser("import")
    p_rimport.add_argument("csv")
    p_rimport.set_defaults(func=cmd_review_import)

    p_build = sub.add_parser("build", help="build the knowledge graph from reviewed triples")
    p_build.add_argument("--include-pending", action="store_true")
    p_build.add_argument("--context-cap", type=int, default=None)
    p_build.set_defaults(func=cmd_build)

    p_ask = sub.add_parser("ask", help="ask a question")
    p_ask.add_argument("query")
    p_ask.add_argument("--mode", default="kgrag", choices=["llm_only", "rag", "kgrag"])
    p_ask.add_argument("--no-cache", action="store_true")
    p_ask.add_argument("--session", default="")
    p_ask.add_argument("--json", action="store_true")
    p_ask.set_defaults(func=cmd_ask)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--ui-dir", default=None, help="built frontend to serve at /")
    p_serve.set_defaults(func=cmd_serve)

    p_cost = sub.add_parser("cost", help="estimate provider cost for a query volume")
    p_cost.add_argument("--provider", required=True)
    p_cost.add_argument("--n", type=int, default=1)
    p_cost.add_argument("--hit-rate", type=float, default=0.0)
    p_cost.set_defaults(func=cmd_cost)

    p_flush = sub.add_parser("cache-flush", help="empty the semantic answer cache")
    p_flush.set_defaults(func=cmd_cache_flush)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KgragError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
