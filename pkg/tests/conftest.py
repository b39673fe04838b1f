import json
from pathlib import Path

import pytest

from kgrag.config import Settings
from kgrag.corpus import Corpus, CorpusConfig
from kgrag.embedding import LocalHashEmbedder
from kgrag.engine import TutorEngine
from kgrag.kg import BuildOptions, Triple, build_graph

FIXTURES = Path(__file__).parent / "fixtures"
FINANCE_DIR = FIXTURES / "finance"


@pytest.fixture
def embedder():
    return LocalHashEmbedder(dim=256)


@pytest.fixture
def finance_dir():
    return FINANCE_DIR


@pytest.fixture
def expected_counts():
    return json.loads((FINANCE_DIR / "expected_counts.json").read_text())


def make_finance_corpus() -> Corpus:
    corpus = Corpus(CorpusConfig(chunk_size=1000))
    for path in sorted((FINANCE_DIR / "docs").glob("*.txt")):
        corpus.ingest_file(path)
    return corpus


def finance_triples() -> list[Triple]:
    """The approved triples of the toy finance fixture."""
    rows = [
        ("Treasury Securities", "Are A Type Of", "Fixed-Income Securities", "treasury_basics-0000"),
        ("Duration", "Measures Price Sensitivity Of", "Fixed-Income Securities", "treasury_basics-0000"),
        ("Mortgage-Backed Securities", "Are A Type Of", "Fixed-Income Securities", "mbs_securitization-0000"),
        ("Mortgage-Backed Securities", "Affects", "Sub-Prime Crisis", "subprime_crisis-0000"),
        ("Collateralized Debt Obligations", "Repackage", "Mortgage-Backed Securities", "subprime_crisis-0000"),
        ("Sub-Prime Crisis", "Devalued", "Collateralized Debt Obligations", "subprime_crisis-0000"),
    ]
    return [
        Triple(subject=s, predicate=p, object=o, source_chunk_id=c, status="approved")
        for s, p, o, c in rows
    ]


@pytest.fixture
def finance_corpus():
    return make_finance_corpus()


@pytest.fixture
def finance_graph(finance_corpus):
    return build_graph(finance_triples(), finance_corpus, BuildOptions())


def build_finance_engine(data_dir: Path, settings: Settings | None = None) -> TutorEngine:
    """Stand up an engine over the finance fixture: ingest, extract from the
    canned outputs, approve everything except the junk triple, build."""
    engine = TutorEngine(data_dir, settings)
    engine.ingest_path(FINANCE_DIR / "docs")
    engine.extract(canned_dir=FINANCE_DIR / "canned")
    for triple in engine.triples.all():
        if triple.subject == "Financial Markets":
            engine.triples.set_review_status(triple.triple_id, "rejected")
        else:
            engine.triples.set_review_status(triple.triple_id, "approved")
    engine.build()
    return engine


@pytest.fixture
def finance_engine(tmp_path):
    return build_finance_engine(tmp_path / "data")


# -- independent oracles shared across test modules ----------------------------


class UnionFind:
    """Independent connected-components oracle."""

    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def component(self, x) -> set:
        root = self.find(x)
        return {y for y in self.parent if self.find(y) == root}


def component_union(node_ids, edge_pairs, seeds) -> set:
    """Union of the undirected components containing each seed."""
    uf = UnionFind(node_ids)
    for a, b in edge_pairs:
        uf.union(a, b)
    expected: set = set()
    for seed in seeds:
        expected |= uf.component(seed)
    return expected
