import random

import pytest

from conftest import UnionFind, component_union
from kgrag.corpus import Corpus, CorpusConfig, count_tokens
from kgrag.errors import ContractViolation, NotFoundError
from kgrag.kg import (
    TRIPLE_CSV_HEADER,
    BuildOptions,
    KnowledgeGraph,
    ReviewFlags,
    Triple,
    TripleStore,
    build_graph,
    canonical_entity_key,
    export_triples_csv,
    import_triples_csv,
    neighborhood,
    traverse_kg,
)


def triple(s, p, o, chunk="", status="approved"):
    return Triple(subject=s, predicate=p, object=o, source_chunk_id=chunk, status=status)


def graph_from_edges(edge_pairs, isolated=()):
    """Tiny helper: build a graph whose node ids are the given letters."""
    triples = [triple(a, "rel", b) for a, b in edge_pairs]
    triples += [triple(x, "self", x) for x in isolated]
    graph = build_graph(triples, None, BuildOptions())
    if isolated:
        # strip the self-loop edges used to materialize isolated nodes
        graph = KnowledgeGraph(
            graph.nodes,
            [e for e in graph.edges if e.predicate != "self"],
            graph.built_from,
        )
    return graph


class TestCanonicalKey:
    def test_normalization_rules(self):
        assert canonical_entity_key("  Mortgage-Backed   Securities ") == "mortgage-backed securities"

    def test_case_fold(self):
        assert canonical_entity_key("MBS") == canonical_entity_key("mbs")

    def test_500_variants_collapse_to_50_keys(self):
        rng = random.Random(11)
        base = [f"Entity Number {i}" for i in range(50)]

        def mangle(name):
            out = []
            for ch in name:
                out.append(ch.upper() if rng.random() < 0.5 else ch.lower())
                if ch == " " and rng.random() < 0.5:
                    out.append(" " * rng.randint(1, 3))
            return " " * rng.randint(0, 2) + "".join(out) + " " * rng.randint(0, 2)

        variants = [mangle(rng.choice(base)) for _ in range(500)]
        keys = {canonical_entity_key(v) for v in variants}
        assert keys <= {canonical_entity_key(b) for b in base}
        # force coverage of every base entity
        keys |= {canonical_entity_key(b) for b in base}
        assert len(keys) == 50


class TestBuildGraph:
    def test_single_triple_two_nodes_one_edge(self):
        graph = build_graph(
            [triple("Mortgage-Backed Securities", "Affects", "Sub-Prime Crisis")],
            None,
        )
        assert graph.node_count == 2
        assert graph.edge_count == 1
        assert "mortgage-backed securities" in graph.nodes
        assert graph.nodes["mortgage-backed securities"].display_name == "Mortgage-Backed Securities"

    def test_empty_triples_empty_graph(self):
        graph = build_graph([], None)
        assert graph.node_count == 0
        assert graph.edge_count == 0
        assert graph.built_from == 0

    def test_random_triples_match_set_oracle(self):
        rng = random.Random(3)
        entities = [f"Concept {i}" for i in range(40)]
        triples = []
        for _ in range(200):
            s, o = rng.choice(entities), rng.choice(entities)
            p = rng.choice(["causes", "includes", "part of"])
            triples.append(triple(s, p, o))
        graph = build_graph(triples, None)
        expected_nodes = {canonical_entity_key(t.subject) for t in triples} | {
            canonical_entity_key(t.object) for t in triples
        }
        expected_edges = {
            (canonical_entity_key(t.subject), canonical_entity_key(t.object), t.predicate)
            for t in triples
        }
        assert set(graph.nodes) == expected_nodes
        assert {(e.from_id, e.to_id, e.predicate) for e in graph.edges} == expected_edges
        assert len(graph.edges) == len(expected_edges)

    def test_default_build_includes_only_approved(self):
        triples = [
            triple("A", "r", "B", status="approved"),
            triple("C", "r", "D", status="pending"),
            triple("E", "r", "F", status="rejected"),
        ]
        graph = build_graph(triples, None)
        assert set(graph.nodes) == {"a", "b"}
        assert graph.built_from == 1

    def test_include_pending_option(self):
        triples = [
            triple("A", "r", "B", status="approved"),
            triple("C", "r", "D", status="pending"),
        ]
        graph = build_graph(triples, None, BuildOptions(include_status=frozenset({"approved", "pending"})))
        assert set(graph.nodes) == {"a", "b", "c", "d"}

    def test_rejected_entity_still_appears_via_approved_triple(self):
        triples = [
            triple("A", "r", "B", status="rejected"),
            triple("A", "r2", "C", status="approved"),
        ]
        graph = build_graph(triples, None)
        assert "a" in graph.nodes

    def test_invalid_include_status(self):
        with pytest.raises(ContractViolation):
            build_graph([], None, BuildOptions(include_status=frozenset({"rejected"})))

    def test_monotonicity_adding_triple_never_removes(self):
        rng = random.Random(8)
        entities = [f"E{i}" for i in range(12)]
        triples = []
        prev_nodes: set = set()
        prev_edges: set = set()
        for _ in range(60):
            triples.append(triple(rng.choice(entities), "r", rng.choice(entities)))
            graph = build_graph(triples, None)
            nodes = set(graph.nodes)
            edges = {(e.from_id, e.to_id, e.predicate) for e in graph.edges}
            assert prev_nodes <= nodes
            assert prev_edges <= edges
            prev_nodes, prev_edges = nodes, edges


class TestNodeContext:
    def make_corpus(self):
        corpus = Corpus(CorpusConfig(chunk_size=5))
        corpus.ingest_text("doc", "alpha beta gamma delta epsilon zeta eta theta iota kappa")
        return corpus  # chunks doc-0000 (5 tokens), doc-0001 (5 tokens)

    def test_context_concatenates_distinct_chunks_in_id_order(self):
        corpus = self.make_corpus()
        triples = [
            triple("X", "r", "Y", chunk="doc-0001"),
            triple("X", "r2", "Z", chunk="doc-0000"),
            triple("X", "r3", "W", chunk="doc-0001"),  # duplicate chunk ref
        ]
        graph = build_graph(triples, corpus)
        context = graph.nodes["x"].context
        assert context == "alpha beta gamma delta epsilon\n\nzeta eta theta iota kappa"

    def test_context_cap_keeps_earliest_chunks(self):
        corpus = self.make_corpus()
        triples = [
            triple("X", "r", "Y", chunk="doc-0000"),
            triple("X", "r2", "Z", chunk="doc-0001"),
        ]
        graph = build_graph(triples, corpus, BuildOptions(node_context_cap=7))
        context = graph.nodes["x"].context
        assert count_tokens(context) == 7
        assert context.startswith("alpha beta gamma delta epsilon")

    def test_missing_chunk_falls_back_to_surface_form(self):
        graph = build_graph([triple("Solo Concept", "r", "Other", chunk="nope-0000")], Corpus())
        assert graph.nodes["solo concept"].context == "Solo Concept"
        assert any("nope-0000" in w for w in graph.warnings)

    def test_display_name_is_first_seen_surface(self):
        triples = [triple("MBS", "r", "X"), triple("mbs", "r", "Y")]
        graph = build_graph(triples, None)
        assert graph.nodes["mbs"].display_name == "MBS"


class TestTraverse:
    def test_chain_from_a(self):
        graph = graph_from_edges([("A", "B"), ("B", "C")], isolated=["D"])
        assert traverse_kg(graph, ["a"]) == ["a", "b", "c"]

    def test_isolated_seed(self):
        graph = graph_from_edges([("A", "B"), ("B", "C")], isolated=["D"])
        assert traverse_kg(graph, ["d"]) == ["d"]

    def test_two_seeds_cover_both_components(self):
        graph = graph_from_edges([("A", "B"), ("B", "C")], isolated=["D"])
        assert set(traverse_kg(graph, ["a", "d"])) == {"a", "b", "c", "d"}

    def test_unknown_seed_names_id(self):
        graph = graph_from_edges([("A", "B")])
        with pytest.raises(NotFoundError) as err:
            traverse_kg(graph, ["zzz"])
        assert "zzz" in str(err.value)

    def test_depth_zero_returns_seeds_only(self):
        graph = graph_from_edges([("A", "B"), ("B", "C")])
        assert traverse_kg(graph, ["a"], depth=0) == ["a"]

    def test_depth_one_returns_direct_neighbors(self):
        graph = graph_from_edges([("A", "B"), ("B", "C"), ("A", "D")])
        assert traverse_kg(graph, ["a"], depth=1) == ["a", "b", "d"]

    def test_layer_ties_sorted_by_node_id(self):
        graph = graph_from_edges([("M", "Z"), ("M", "A"), ("M", "Q")])
        assert traverse_kg(graph, ["m"]) == ["m", "a", "q", "z"]

    def test_seed_order_preserved_and_deduplicated(self):
        graph = graph_from_edges([("A", "B")], isolated=["D"])
        assert traverse_kg(graph, ["d", "a", "d"])[:2] == ["d", "a"]

    def test_invalid_depth(self):
        graph = graph_from_edges([("A", "B")])
        with pytest.raises(ContractViolation):
            traverse_kg(graph, ["a"], depth=-1)

    def test_traversal_is_undirected(self):
        graph = graph_from_edges([("A", "B")])
        assert traverse_kg(graph, ["b"]) == ["b", "a"]

    def test_matches_union_find_oracle_on_random_graphs(self):
        rng = random.Random(77)
        for _ in range(30):
            n = rng.randint(1, 50)
            names = [f"n{i:02d}" for i in range(n)]
            edge_pairs = [
                (rng.choice(names), rng.choice(names)) for _ in range(rng.randint(0, 120))
            ]
            graph = graph_from_edges(edge_pairs, isolated=names)
            seeds = rng.sample(sorted(graph.nodes), rng.randint(1, min(5, n)))
            result = traverse_kg(graph, seeds, depth="max")
            expected = component_union(
                list(graph.nodes), [(e.from_id, e.to_id) for e in graph.edges], seeds
            )
            assert set(result) == expected
            assert len(result) == len(set(result))  # no duplicates
            assert set(seeds) <= set(result)

    def test_every_returned_node_is_reachable(self):
        rng = random.Random(13)
        names = [f"n{i}" for i in range(20)]
        edge_pairs = [(rng.choice(names), rng.choice(names)) for _ in range(25)]
        graph = graph_from_edges(edge_pairs, isolated=names)
        seeds = ["n0"]
        result = traverse_kg(graph, seeds)
        uf = UnionFind(list(graph.nodes))
        for e in graph.edges:
            uf.union(e.from_id, e.to_id)
        for node in result:
            assert uf.find(node) == uf.find("n0")


class TestNeighborhood:
    def test_depth_one_induced_subgraph(self):
        graph = graph_from_edges([("A", "B"), ("B", "C"), ("A", "C"), ("C", "D")])
        nodes, edges = neighborhood(graph, "A", depth=1)
        ids = {n.node_id for n in nodes}
        assert ids == {"a", "b", "c"}
        assert {(e.from_id, e.to_id) for e in edges} == {("a", "b"), ("b", "c"), ("a", "c")}

    def test_unknown_entity(self):
        graph = graph_from_edges([("A", "B")])
        with pytest.raises(NotFoundError):
            neighborhood(graph, "nope")

    def test_surface_form_is_canonicalized(self):
        graph = graph_from_edges([("Big Concept", "B")])
        nodes, _ = neighborhood(graph, "  BIG   CONCEPT ", depth=0)
        assert nodes[0].node_id == "big concept"


class TestReviewWorkflow:
    def test_approve_includes_in_next_build(self):
        store = TripleStore()
        stored = store.add(triple("A", "r", "B", status="pending"))
        store.set_review_status(stored.triple_id, "approved", ReviewFlags(True, True, True))
        graph = build_graph(store.all(), None)
        assert graph.node_count == 2

    def test_reject_excludes_from_default_build(self):
        store = TripleStore()
        stored = store.add(triple("A", "r", "B", status="pending"))
        store.set_review_status(stored.triple_id, "rejected")
        assert build_graph(store.all(), None).node_count == 0

    def test_approve_3_of_5_builds_exactly_3(self):
        store = TripleStore()
        ids = [store.add(triple(f"S{i}", "r", f"O{i}", status="pending")).triple_id for i in range(5)]
        for triple_id in ids[:3]:
            store.set_review_status(triple_id, "approved")
        graph = build_graph(store.all(), None)
        assert graph.built_from == 3
        assert graph.edge_count == 3

    def test_idempotent_reapplication(self):
        store = TripleStore()
        stored = store.add(triple("A", "r", "B", status="pending"))
        store.set_review_status(stored.triple_id, "approved")
        updated = store.set_review_status(stored.triple_id, "approved", ReviewFlags(True, None, True))
        assert updated.status == "approved"
        assert updated.flags.precision is True

    def test_decided_status_cannot_flip(self):
        store = TripleStore()
        stored = store.add(triple("A", "r", "B", status="pending"))
        store.set_review_status(stored.triple_id, "approved")
        with pytest.raises(ContractViolation):
            store.set_review_status(stored.triple_id, "rejected")

    def test_unknown_triple(self):
        with pytest.raises(NotFoundError):
            TripleStore().set_review_status(99, "approved")

    def test_invalid_status_value(self):
        store = TripleStore()
        stored = store.add(triple("A", "r", "B", status="pending"))
        with pytest.raises(ContractViolation):
            store.set_review_status(stored.triple_id, "pending")


class TestCsvRoundTrip:
    def random_triples(self, rng, n=100):
        def text(allow_special=True):
            chars = "abcdefgh XYZ-'"
            if allow_special:
                chars += ',"\n'
            s = "".join(rng.choice(chars) for _ in range(rng.randint(1, 18)))
            s = s.strip()
            return s if s.strip() else "fallback"

        out = []
        for _ in range(n):
            flags = ReviewFlags(
                precision=rng.choice([None, True, False]),
                completeness=rng.choice([None, True, False]),
                relevance=rng.choice([None, True, False]),
            )
            out.append(
                Triple(
                    subject=text(),
                    predicate=text(),
                    object=text(),
                    source_chunk_id=rng.choice(["", "doc-0000", "lec-0012"]),
                    status=rng.choice(["pending", "approved", "rejected"]),
                    flags=flags,
                )
            )
        return out

    def test_roundtrip_100_random_triples(self):
        rng = random.Random(2025)
        originals = self.random_triples(rng)
        imported, errors = import_triples_csv(export_triples_csv(originals))
        assert errors == []
        assert len(imported) == len(originals)
        for a, b in zip(originals, imported):
            assert (a.subject, a.predicate, a.object, a.source_chunk_id, a.status) == (
                b.subject,
                b.predicate,
                b.object,
                b.source_chunk_id,
                b.status,
            )
            assert (a.flags.precision, a.flags.completeness, a.flags.relevance) == (
                b.flags.precision,
                b.flags.completeness,
                b.flags.relevance,
            )

    def test_embedded_comma_in_quoted_subject(self):
        csv_text = (
            ",".join(TRIPLE_CSV_HEADER)
            + "\n"
            + '"Securities, Mortgage-Backed",Affects,Crisis,c-0000,pending,,,\n'
        )
        triples, errors = import_triples_csv(csv_text)
        assert errors == []
        assert triples[0].subject == "Securities, Mortgage-Backed"

    def test_wrong_column_count_reports_line_number(self):
        csv_text = ",".join(TRIPLE_CSV_HEADER) + "\nA,B,C\nS,P,O,c,pending,,,\n"
        triples, errors = import_triples_csv(csv_text)
        assert len(triples) == 1
        assert len(errors) == 1
        assert "line 2" in errors[0]

    def test_bad_status_and_flag_are_row_errors(self):
        rows = [
            ",".join(TRIPLE_CSV_HEADER),
            "S,P,O,c,bogus,,,",
            "S,P,O,c,pending,maybe,,",
            "S,P,O,c,pending,true,false,",
        ]
        triples, errors = import_triples_csv("\n".join(rows) + "\n")
        assert len(triples) == 1
        assert len(errors) == 2
        assert triples[0].flags.precision is True
        assert triples[0].flags.completeness is False
        assert triples[0].flags.relevance is None

    def test_empty_field_rejected(self):
        csv_text = ",".join(TRIPLE_CSV_HEADER) + "\n ,P,O,c,pending,,,\n"
        triples, errors = import_triples_csv(csv_text)
        assert triples == []
        assert len(errors) == 1

    def test_empty_file(self):
        triples, errors = import_triples_csv("")
        assert triples == []
        assert errors


class TestGraphSnapshots:
    def test_rebuild_returns_new_object(self):
        triples = [triple("A", "r", "B")]
        g1 = build_graph(triples, None)
        g2 = build_graph(triples + [triple("B", "r", "C")], None)
        assert g1 is not g2
        assert g1.node_count == 2  # old snapshot untouched
        assert g2.node_count == 3

    def test_json_roundtrip(self):
        graph = graph_from_edges([("A", "B"), ("B", "C")])
        restored = KnowledgeGraph.from_json_dict(graph.to_json_dict())
        assert set(restored.nodes) == set(graph.nodes)
        assert {(e.from_id, e.to_id, e.predicate) for e in restored.edges} == {
            (e.from_id, e.to_id, e.predicate) for e in graph.edges
        }
        assert restored.neighbors("a") == graph.neighbors("a")
