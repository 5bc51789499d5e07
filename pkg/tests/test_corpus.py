"""Problem loading, variant building, and training-record export."""

from __future__ import annotations

import json
from decimal import Decimal

import pytest

from mpot import corpus, pysrc
from mpot.harness import GoldAnswer
from mpot.jsonl import JsonlError
from mpot.langs import NO_COMMENT


def write_problems(path, rows):
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return path


def make_base(n=3) -> corpus.Corpus:
    samples = []
    for i in range(n):
        problem = corpus.Problem(
            id=f"q{i}",
            lang="en",
            question=f"What is {i} + {i}?",
            gold=GoldAnswer(Decimal(2 * i)),
        )
        solution = corpus.PotSolution(
            source=(
                "def solver():\n"
                f"    # add {i} twice\n"
                f"    a = {i}\n"
                "    answer = a + a  # total\n"
                "    return answer\n"
            ),
            comment_lang="en",
            provenance="oracle-synthesized",
        )
        samples.append(corpus.Sample(problem=problem, solution=solution))
    return corpus.Corpus(samples=tuple(samples), variant="cross-en-en")


def comment_map(base: corpus.Corpus, langs, marker="übersetzt"):
    out = {}
    for lang in langs:
        per_id = {}
        for sample in base.samples:
            spans = pysrc.extract_comments(sample.solution.source)
            per_id[sample.problem.id] = [f" {marker}-{lang}-{i}" for i in range(len(spans))]
        out[lang] = per_id
    return out


def question_map(base: corpus.Corpus, langs):
    return {lang: {s.problem.id: f"[{lang}] {s.problem.question}" for s in base.samples} for lang in langs}


class TestLoadProblems:
    def test_direct_field_mapping(self, tmp_path):
        path = write_problems(tmp_path / "p.jsonl", [{"id": "q1", "question": "How many?", "answer": "11"}])
        (problem,) = corpus.load_problems(path, "en")
        assert problem.id == "q1"
        assert problem.gold == GoldAnswer(Decimal(11))
        assert problem.cot is None

    def test_empty_file(self, tmp_path):
        path = tmp_path / "p.jsonl"
        path.write_text("", encoding="utf-8")
        assert corpus.load_problems(path, "en") == []

    def test_duplicate_id_rejected(self, tmp_path):
        rows = [
            {"id": "q1", "question": "a?", "answer": 1},
            {"id": "q1", "question": "b?", "answer": 2},
        ]
        path = write_problems(tmp_path / "p.jsonl", rows)
        with pytest.raises(JsonlError, match="duplicate"):
            corpus.load_problems(path, "en")

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "p.jsonl"
        path.write_text('{"id": "q1", "question": "a?", "answer": 1}\n{broken\n', encoding="utf-8")
        with pytest.raises(JsonlError, match=":2:"):
            corpus.load_problems(path, "en")

    def test_gold_normalization(self, tmp_path):
        path = write_problems(tmp_path / "p.jsonl", [{"id": "q1", "question": "?", "answer": "1,250.50"}])
        (problem,) = corpus.load_problems(path, "en")
        assert problem.gold.value == Decimal("1250.50")


class TestBuildVariant:
    def test_parallel_cardinality(self):
        base = make_base(4)
        langs = ["de", "fr", "ru", "zh", "ja", "th", "sw", "bn", "es"]
        built = corpus.build_variant(
            base,
            translations=question_map(base, langs),
            translated_comments=comment_map(base, langs),
            target="multi-parallel",
        )
        assert len(built) == 10 * len(base)
        assert built.languages == frozenset(langs) | {"en"}

    def test_no_comment_variant(self):
        base = make_base()
        built = corpus.build_variant(base, target="cross-en-nc")
        assert sorted(s.problem.id for s in built.samples) == sorted(s.problem.id for s in base.samples)
        for sample in built.samples:
            assert sample.solution.comment_lang == NO_COMMENT
            assert pysrc.extract_comments(sample.solution.source) == []

    def test_cross_question_keeps_programs_byte_identical(self):
        base = make_base()
        built = corpus.build_variant(
            base,
            translations=question_map(base, ["de"]),
            target="multi-cross-question",
        )
        assert built.languages == frozenset({"en", "de"})
        by_lang = {}
        for sample in built.samples:
            by_lang.setdefault(sample.problem.lang, []).append(sample)
        assert set(by_lang) == {"en", "de"}
        for sample in by_lang["de"]:
            assert sample.problem.question.startswith("[de] ")
            original = next(s for s in base.samples if s.problem.id == sample.problem.id)
            ours = [(t.kind, t.text) for t in pysrc.tokenize(sample.solution.source)]
            theirs = [(t.kind, t.text) for t in pysrc.tokenize(original.solution.source)]
            assert ours == theirs

    def test_cross_comment_translates_comments_only(self):
        base = make_base()
        built = corpus.build_variant(
            base,
            translated_comments=comment_map(base, ["de"]),
            target="multi-cross-comment",
        )
        de = [s for s in built.samples if s.solution.comment_lang == "de"]
        assert de
        for sample in de:
            assert sample.problem.lang == "en"
            assert "übersetzt-de" in sample.solution.source

    def test_multi_nc_translates_questions_and_strips_comments(self):
        base = make_base()
        built = corpus.build_variant(
            base,
            translations=question_map(base, ["de", "fr"]),
            target="multi-nc",
        )
        assert built.languages == frozenset({"en", "de", "fr"})
        assert len(built) == 3 * len(base)
        for sample in built.samples:
            assert sample.solution.comment_lang == NO_COMMENT
            assert pysrc.extract_comments(sample.solution.source) == []
            if sample.problem.lang != "en":
                assert sample.problem.question.startswith(f"[{sample.problem.lang}] ")

    def test_missing_translation_lists_keys(self):
        base = make_base()
        partial = question_map(base, ["de"])
        del partial["de"]["q1"]
        with pytest.raises(corpus.CorpusError, match="q1"):
            corpus.build_variant(base, translations=partial, target="multi-cross-question")

    def test_language_major_sample_order(self):
        base = make_base(2)
        built = corpus.build_variant(
            base,
            translations=question_map(base, ["de"]),
            target="multi-cross-question",
        )
        order = [(s.problem.lang, s.problem.id) for s in built.samples]
        assert order == [("en", "q0"), ("en", "q1"), ("de", "q0"), ("de", "q1")]

    def test_deterministic(self):
        base = make_base()
        kwargs = dict(
            translations=question_map(base, ["de", "fr"]),
            translated_comments=comment_map(base, ["de", "fr"]),
            target="multi-parallel",
        )
        assert corpus.build_variant(base, **kwargs) == corpus.build_variant(base, **kwargs)

    def test_requires_cross_en_en_base(self):
        base = make_base()
        nc = corpus.build_variant(base, target="cross-en-nc")
        with pytest.raises(corpus.CorpusError, match="cross-en-en"):
            corpus.build_variant(nc, target="cross-en-nc")

    def test_nc_solution_invariant_enforced(self):
        with pytest.raises(corpus.CorpusError, match="nc"):
            corpus.PotSolution(source="x = 1  # oops\n", comment_lang=NO_COMMENT, provenance="transformed")


class TestExportTrainingRecords:
    def test_single_sample_record(self, tmp_path):
        base = make_base(1)
        path = corpus.export_training_records(base, tmp_path / "train.jsonl")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert base.samples[0].problem.question in record["prompt"]
        assert record["completion"] == base.samples[0].solution.source
        assert record["lang"] == "en"
        assert record["variant"] == "cross-en-en"

    def test_parallel_counts_equal_per_language(self, tmp_path):
        base = make_base(3)
        built = corpus.build_variant(
            base,
            translations=question_map(base, ["de", "fr"]),
            translated_comments=comment_map(base, ["de", "fr"]),
            target="multi-parallel",
        )
        path = corpus.export_training_records(built, tmp_path / "train.jsonl")
        counts = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            counts[json.loads(line)["lang"]] = counts.get(json.loads(line)["lang"], 0) + 1
        assert set(counts.values()) == {3}

    def test_round_trip_prompts(self, tmp_path):
        base = make_base(2)
        path = corpus.export_training_records(base, tmp_path / "train.jsonl")
        prompts = [json.loads(line)["prompt"] for line in path.read_text(encoding="utf-8").splitlines()]
        expected = [corpus.render_training_prompt(s.problem.question, "en") for s in base.samples]
        assert prompts == expected

    def test_language_name_substituted(self):
        prompt = corpus.render_training_prompt("Wie viele?", "de")
        assert "German" in prompt
        assert "[language]" not in prompt
        assert "Wie viele?" in prompt

    def test_unknown_template_rejected(self, tmp_path):
        base = make_base(1)
        with pytest.raises(corpus.CorpusError, match="template"):
            corpus.export_training_records(base, tmp_path / "train.jsonl", template="other")


class TestSamplesRoundTrip:
    def test_write_then_read(self, tmp_path):
        base = make_base(2)
        path = corpus.write_samples(base, tmp_path / "samples.jsonl")
        loaded = corpus.read_samples(path)
        assert loaded.variant == "cross-en-en"
        assert [s.problem.id for s in loaded.samples] == [s.problem.id for s in base.samples]
        assert [s.solution.source for s in loaded.samples] == [s.solution.source for s in base.samples]
