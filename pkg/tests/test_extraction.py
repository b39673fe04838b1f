import json
import random
import re
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FINANCE_DIR, make_finance_corpus
from kgrag.corpus import Chunk, Corpus, CorpusConfig, tokenize
from kgrag.errors import ExtractionPipelineError, ProviderError
from kgrag.extraction import (
    EXTRACTION_INSTRUCTION,
    CannedOutputs,
    ExtractionPromptTemplate,
    LlmChunkCompleter,
    extract_corpus,
    parse_triples,
    render_extraction_prompt,
    write_runs_jsonl,
)


def make_chunk(text, chunk_id="doc-0000"):
    return Chunk(chunk_id=chunk_id, doc_id="doc", ordinal=0, text=text, token_count=len(text.split()))


def reference_scan(raw):
    """Independent oracle: flat bracket groups with exactly 3 non-empty fields."""
    found = []
    for group in re.findall(r"\[([^\[\]]*)\]", raw):
        fields = [f.strip() for f in group.split(",")]
        if len(fields) == 3 and all(fields):
            found.append(tuple(fields))
    return found


class TestPrompt:
    def test_contains_instruction_and_chunk(self):
        chunk = make_chunk("MBS are affected by the subprime crisis")
        prompt = render_extraction_prompt(chunk)
        assert EXTRACTION_INSTRUCTION in prompt
        assert "MBS are affected by the subprime crisis" in prompt

    def test_empty_chunk_allowed(self):
        prompt = render_extraction_prompt(make_chunk(""))
        assert EXTRACTION_INSTRUCTION in prompt

    def test_token_count_is_instruction_plus_chunk(self):
        words = " ".join(f"w{i}" for i in range(1000))
        prompt = render_extraction_prompt(make_chunk(words))
        assert len(tokenize(prompt)) == len(tokenize(EXTRACTION_INSTRUCTION)) + 1000

    def test_custom_template_requires_slot(self):
        with pytest.raises(ProviderError):
            ExtractionPromptTemplate("no slot here").render("text")


class TestParseTriples:
    def test_example_from_finance_material(self):
        triples, warnings = parse_triples(
            "[Mortgage-Backed Securities, Affects, Sub-Prime Crisis]", "c-0000"
        )
        assert warnings == []
        assert len(triples) == 1
        t = triples[0]
        assert (t.subject, t.predicate, t.object) == (
            "Mortgage-Backed Securities",
            "Affects",
            "Sub-Prime Crisis",
        )
        assert t.source_chunk_id == "c-0000"
        assert t.status == "pending"

    def test_two_groups_with_surrounding_prose(self):
        raw = "noise [A, rel, B] text [C, rel2, D] tail"
        triples, _ = parse_triples(raw)
        assert [(t.subject, t.predicate, t.object) for t in triples] == list(reference_scan(raw))
        assert len(triples) == 2

    def test_wrong_arity_warns(self):
        triples, warnings = parse_triples("[A, B]")
        assert triples == []
        assert len(warnings) == 1

    def test_four_fields_warns(self):
        triples, warnings = parse_triples("[A, B, C, D]")
        assert triples == []
        assert len(warnings) == 1

    def test_empty_field_warns(self):
        triples, warnings = parse_triples("[A, , C]")
        assert triples == []
        assert len(warnings) == 1

    def test_nested_brackets_skipped_with_warning(self):
        triples, warnings = parse_triples("[A, [B], C]")
        assert triples == []
        assert any("nested" in w for w in warnings)

    def test_unclosed_bracket(self):
        triples, warnings = parse_triples("prefix [A, B, C")
        assert triples == []
        assert any("unclosed" in w for w in warnings)

    def test_fields_are_trimmed(self):
        triples, _ = parse_triples("[  spaced subject ,  rel  , obj  ]")
        assert triples[0].subject == "spaced subject"
        assert triples[0].predicate == "rel"
        assert triples[0].object == "obj"

    def test_fuzz_never_raises_and_matches_oracle(self):
        rng = random.Random(31337)
        alphabet = string.ascii_letters + string.digits + "[],. \n\t-'"
        for _ in range(2000):
            raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 120)))
            triples, _ = parse_triples(raw)
            for t in triples:
                assert t.subject == t.subject.strip() and t.subject
                assert t.predicate == t.predicate.strip() and t.predicate
                assert t.object == t.object.strip() and t.object

    @settings(max_examples=300)
    @given(st.text(max_size=200))
    def test_fuzz_hypothesis_total(self, raw):
        triples, warnings = parse_triples(raw)
        assert isinstance(triples, list)
        assert isinstance(warnings, list)


class FixedOutputProvider:
    """One fixed triple per chunk."""

    def complete_chunk(self, chunk_id, prompt):
        return f"[Subject {chunk_id}, relates to, Object {chunk_id}]"


class FlakyProvider:
    def __init__(self, fail_chunk_ids):
        self.fail_chunk_ids = set(fail_chunk_ids)

    def complete_chunk(self, chunk_id, prompt):
        if chunk_id in self.fail_chunk_ids:
            raise ProviderError(f"provider down for {chunk_id}")
        return "[A, r, B]"


def three_chunk_corpus():
    corpus = Corpus(CorpusConfig(chunk_size=4))
    corpus.ingest_text("doc", "one two three four five six seven eight nine ten eleven twelve")
    assert len(corpus.chunks) == 3
    return corpus


class TestExtractCorpus:
    def test_stub_one_triple_per_chunk(self):
        corpus = three_chunk_corpus()
        runs = extract_corpus(corpus, FixedOutputProvider())
        assert len(runs) == 3
        triples = [t for run in runs for t in run.parsed]
        assert len(triples) == 3
        assert all(t.status == "pending" for t in triples)
        assert {t.source_chunk_id for t in triples} == {c.chunk_id for c in corpus.chunks}

    def test_provider_down_on_one_chunk_pipeline_continues(self):
        corpus = three_chunk_corpus()
        runs = extract_corpus(corpus, FlakyProvider(["doc-0001"]))
        assert len(runs) == 3
        assert sum(1 for r in runs if r.failed) == 1
        assert sum(1 for r in runs if not r.failed) == 2

    def test_majority_failures_raise_pipeline_error(self):
        corpus = three_chunk_corpus()
        with pytest.raises(ExtractionPipelineError) as err:
            extract_corpus(corpus, FlakyProvider(["doc-0000", "doc-0001"]))
        assert len(err.value.runs) == 3

    def test_half_failures_do_not_raise(self):
        corpus = Corpus(CorpusConfig(chunk_size=4))
        corpus.ingest_text("doc", "one two three four five six seven eight")
        runs = extract_corpus(corpus, FlakyProvider(["doc-0000"]))
        assert sum(1 for r in runs if r.failed) == 1

    def test_idempotent_triple_multiset(self):
        corpus = three_chunk_corpus()
        canned = {c.chunk_id: f"[X {c.ordinal}, r, Y] and [P, q, R]" for c in corpus.chunks}
        provider = CannedOutputs(canned)
        first = extract_corpus(corpus, provider)
        second = extract_corpus(corpus, provider)

        def multiset(runs):
            return sorted(
                (t.subject, t.predicate, t.object, t.source_chunk_id)
                for run in runs
                for t in run.parsed
            )

        assert multiset(first) == multiset(second)

    def test_canned_directory_missing_file_is_chunk_failure(self, tmp_path):
        corpus = Corpus(CorpusConfig(chunk_size=4))
        corpus.ingest_text("doc", "one two three four five six seven eight")
        (tmp_path / "doc-0000.txt").write_text("[A, r, B]")
        runs = extract_corpus(corpus, CannedOutputs(tmp_path))
        assert [r.failed for r in runs] == [False, True]

    def test_finance_fixture_matches_hand_listed_expectation(self):
        corpus = make_finance_corpus()
        runs = extract_corpus(corpus, CannedOutputs(FINANCE_DIR / "canned"))
        parsed = sorted(
            (t.subject, t.predicate, t.object) for run in runs for t in run.parsed
        )
        expected = sorted(
            [
                ("Treasury Securities", "Are A Type Of", "Fixed-Income Securities"),
                ("Duration", "Measures Price Sensitivity Of", "Fixed-Income Securities"),
                ("Financial Markets", "Are", "Complicated"),
                ("Mortgage-Backed Securities", "Are A Type Of", "Fixed-Income Securities"),
                ("Mortgage-Backed Securities", "Affects", "Sub-Prime Crisis"),
                ("Collateralized Debt Obligations", "Repackage", "Mortgage-Backed Securities"),
                ("Sub-Prime Crisis", "Devalued", "Collateralized Debt Obligations"),
            ]
        )
        assert parsed == expected

    def test_llm_adapter_sends_prompt(self):
        class RecordingLlm:
            name = "rec"

            def __init__(self):
                self.prompts = []

            def complete(self, prompt):
                self.prompts.append(prompt)
                return "[A, r, B]"

        corpus = Corpus(CorpusConfig(chunk_size=4))
        corpus.ingest_text("doc", "alpha beta gamma")
        llm = RecordingLlm()
        extract_corpus(corpus, LlmChunkCompleter(llm))
        assert len(llm.prompts) == 1
        assert "alpha beta gamma" in llm.prompts[0]
        assert EXTRACTION_INSTRUCTION in llm.prompts[0]

    def test_runs_jsonl_report(self, tmp_path):
        corpus = three_chunk_corpus()
        runs = extract_corpus(corpus, FlakyProvider(["doc-0002"]))
        path = tmp_path / "runs.jsonl"
        write_runs_jsonl(runs, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 3
        records = [json.loads(line) for line in lines]
        assert records[0]["chunk_id"] == "doc-0000"
        assert records[2]["error"] is not None
