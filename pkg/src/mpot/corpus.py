"""Questions, program solutions, and the six question/comment language layouts.

A base corpus pairs English questions with English-commented solver programs.
The variant builder derives the other layouts from it: stripping comments,
swapping in translated comments, pairing translated questions with the
original programs, or both. Translations always arrive as files, never from
the network, so corpus builds are offline-reproducible and deterministic.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

from . import pysrc
from .harness import GoldAnswer, parse_number
from .jsonl import JsonlError, read_records, write_records
from .langs import LANGUAGES, LANGUAGE_NAMES, NO_COMMENT, canonical_order, parse_comment_lang, parse_lang

PROVENANCES = ("oracle-synthesized", "transformed", "model-generated")

# variant tag -> (question language policy, comment language policy)
VARIANTS: dict[str, tuple[str, str]] = {
    "cross-en-en": ("en", "en"),
    "cross-en-nc": ("en", "nc"),
    "multi-cross-comment": ("en", "multi"),
    "multi-cross-question": ("multi", "en"),
    "multi-parallel": ("multi", "multi"),
    "multi-nc": ("multi", "nc"),
}

TRAINING_TEMPLATE = "mathoctopus"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Problem:
    id: str
    lang: str
    question: str
    gold: GoldAnswer
    cot: Optional[str] = None

    def __post_init__(self):
        parse_lang(self.lang)
        if not self.question.strip():
            raise CorpusError(f"problem {self.id!r} has an empty question")


@dataclass(frozen=True)
class PotSolution:
    source: str
    comment_lang: str
    provenance: str

    def __post_init__(self):
        parse_comment_lang(self.comment_lang)
        if self.provenance not in PROVENANCES:
            raise CorpusError(f"unknown provenance {self.provenance!r}")
        if self.comment_lang == NO_COMMENT and pysrc.extract_comments(self.source):
            raise CorpusError("solution tagged 'nc' still contains comments")


@dataclass(frozen=True)
class Sample:
    problem: Problem
    solution: PotSolution


@dataclass(frozen=True)
class Corpus:
    samples: tuple[Sample, ...]
    variant: str
    languages: frozenset[str] = field(default_factory=lambda: frozenset({"en"}))

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise CorpusError(f"unknown variant tag {self.variant!r}")
        if self.variant.startswith("cross-") and self.languages != frozenset({"en"}):
            raise CorpusError("cross variants hold English-only questions")
        if self.variant == "multi-parallel":
            pairs = [(s.problem.id, s.problem.lang) for s in self.samples]
            ids = {pid for pid, _ in pairs}
            want = {(pid, lang) for pid in ids for lang in self.languages}
            if len(pairs) != len(set(pairs)) or set(pairs) != want:
                raise CorpusError("multi-parallel corpus must hold every (id, language) pair exactly once")

    def __len__(self) -> int:
        return len(self.samples)


def load_problems(path, lang: str) -> list[Problem]:
    """Read problems from a JSONL file of {id, question, answer, cot?} records.

    Records keep file order; answers are normalized with the same number
    rules used for answer comparison. Duplicate ids and malformed lines are
    errors (malformed lines are reported with their line number).
    """
    parse_lang(lang)
    problems: list[Problem] = []
    seen: set[str] = set()
    for lineno, record in read_records(path):
        for key in ("id", "question", "answer"):
            if key not in record:
                raise JsonlError(path, lineno, f"missing field {key!r}")
        pid = str(record["id"])
        if pid in seen:
            raise JsonlError(path, lineno, f"duplicate problem id {pid!r}")
        seen.add(pid)
        gold_value = parse_number(str(record["answer"]))
        if gold_value is None:
            raise JsonlError(path, lineno, f"answer {record['answer']!r} is not numeric")
        problems.append(
            Problem(
                id=pid,
                lang=lang,
                question=str(record["question"]),
                gold=GoldAnswer(gold_value),
                cot=str(record["cot"]) if record.get("cot") is not None else None,
            )
        )
    return problems


TranslationMap = Mapping[str, Mapping[str, str]]
CommentMap = Mapping[str, Mapping[str, Sequence[str]]]


def _require(map_: Mapping, lang: str, ids, what: str) -> None:
    have = map_.get(lang, {})
    missing = [pid for pid in ids if pid not in have]
    if missing:
        preview = ", ".join(missing[:5]) + ("..." if len(missing) > 5 else "")
        raise CorpusError(f"missing {what} for language {lang!r}: {preview}")


def build_variant(
    base: Corpus,
    translations: TranslationMap | None = None,
    translated_comments: CommentMap | None = None,
    target: str = "cross-en-en",
) -> Corpus:
    """Derive a dataset variant from a base English/English corpus.

    translations maps language -> id -> question text; translated_comments
    maps language -> id -> one replacement per comment, in order, each
    including any leading whitespace after the '#'. Output order is language
    major (canonical order) with the base sample order within each language.
    """
    if base.variant != "cross-en-en":
        raise CorpusError(f"variant building starts from a cross-en-en corpus, got {base.variant!r}")
    if target not in VARIANTS:
        raise CorpusError(f"unknown variant tag {target!r}")
    q_policy, c_policy = VARIANTS[target]
    translations = translations or {}
    translated_comments = translated_comments or {}

    if q_policy == "multi" or c_policy == "multi":
        extra = set()
        if q_policy == "multi":
            extra |= set(translations)
        if c_policy == "multi":
            extra |= set(translated_comments)
        languages = canonical_order(extra | {"en"})
    else:
        languages = ["en"]

    ids = [s.problem.id for s in base.samples]
    for lang in languages:
        if lang == "en":
            continue
        if q_policy == "multi":
            _require(translations, lang, ids, "question translation")
        if c_policy == "multi":
            _require(translated_comments, lang, ids, "comment translations")

    out: list[Sample] = []
    for lang in languages:
        for sample in base.samples:
            problem = sample.problem
            solution = sample.solution
            if q_policy == "multi" and lang != "en":
                problem = replace(problem, lang=lang, question=translations[lang][problem.id], cot=None)
            if c_policy == "nc":
                solution = PotSolution(
                    source=pysrc.strip_comments(solution.source),
                    comment_lang=NO_COMMENT,
                    provenance="transformed",
                )
            elif c_policy == "multi" and lang != "en":
                reps = list(translated_comments[lang][problem.id])
                try:
                    swapped = pysrc.replace_comments(solution.source, reps)
                except ValueError as exc:
                    raise CorpusError(f"problem {problem.id!r}, language {lang!r}: {exc}") from exc
                solution = PotSolution(source=swapped, comment_lang=lang, provenance="transformed")
            out.append(Sample(problem=problem, solution=solution))
    return Corpus(samples=tuple(out), variant=target, languages=frozenset(languages))


def _load_template(template: str) -> str:
    if template != TRAINING_TEMPLATE:
        raise CorpusError(f"unknown training template {template!r}")
    ref = importlib.resources.files("mpot.data").joinpath("mathoctopus_template.txt")
    return ref.read_text(encoding="utf-8")


def render_training_prompt(question: str, lang: str, template: str = TRAINING_TEMPLATE) -> str:
    text = _load_template(template)
    return text.replace("[language]", LANGUAGE_NAMES[parse_lang(lang)]).replace("[Question]", question)


def export_training_records(corpus: Corpus, path, template: str = TRAINING_TEMPLATE) -> Path:
    """Write one {prompt, completion, lang, variant} record per sample."""
    records = (
        {
            "prompt": render_training_prompt(s.problem.question, s.problem.lang, template),
            "completion": s.solution.source,
            "lang": s.problem.lang,
            "variant": corpus.variant,
        }
        for s in corpus.samples
    )
    return write_records(path, records)


def write_samples(corpus: Corpus, path) -> Path:
    """Persist samples as {id, lang, question, pot_source, comment_lang, gold} lines."""
    records = (
        {
            "id": s.problem.id,
            "lang": s.problem.lang,
            "question": s.problem.question,
            "pot_source": s.solution.source,
            "comment_lang": s.solution.comment_lang,
            "gold": str(s.problem.gold.value),
        }
        for s in corpus.samples
    )
    return write_records(path, records)


def read_samples(path, variant: str = "cross-en-en", provenance: str = "oracle-synthesized") -> Corpus:
    """Load a samples file back into a corpus."""
    samples = []
    langs = set()
    for lineno, record in read_records(path):
        try:
            gold_value = parse_number(str(record["gold"]))
            if gold_value is None:
                raise CorpusError(f"gold {record['gold']!r} is not numeric")
            problem = Problem(
                id=str(record["id"]),
                lang=str(record["lang"]),
                question=str(record["question"]),
                gold=GoldAnswer(gold_value),
            )
            solution = PotSolution(
                source=str(record["pot_source"]),
                comment_lang=str(record["comment_lang"]),
                provenance=provenance,
            )
        except (KeyError, CorpusError, ValueError) as exc:
            raise JsonlError(path, lineno, str(exc)) from exc
        langs.add(problem.lang)
        samples.append(Sample(problem=problem, solution=solution))
    return Corpus(samples=tuple(samples), variant=variant, languages=frozenset(langs or {"en"}))


def read_translations(path) -> dict[str, dict[str, str]]:
    """Question translations from {id, lang, question} lines."""
    out: dict[str, dict[str, str]] = {}
    for lineno, record in read_records(path):
        try:
            lang = parse_lang(str(record["lang"]))
            out.setdefault(lang, {})[str(record["id"])] = str(record["question"])
        except (KeyError, ValueError) as exc:
            raise JsonlError(path, lineno, str(exc)) from exc
    return out


def read_translated_comments(path) -> dict[str, dict[str, list[str]]]:
    """Comment translations from {id, lang, comments: [...]} lines."""
    out: dict[str, dict[str, list[str]]] = {}
    for lineno, record in read_records(path):
        try:
            lang = parse_lang(str(record["lang"]))
            comments = [str(c) for c in record["comments"]]
            out.setdefault(lang, {})[str(record["id"])] = comments
        except (KeyError, TypeError, ValueError) as exc:
            raise JsonlError(path, lineno, str(exc)) from exc
    return out
