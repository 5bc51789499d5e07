"""LLM-judged functional-correctness scores for candidate programs.

An evaluator endpoint rates each program on an integer 0-4 scale against its
question; the rubric lives in a data file so experiments can swap it without
code changes. Unparseable replies are retried, then recorded as score 0 with
a flag rather than dropped, keeping downstream denominators stable.
"""

from __future__ import annotations

import importlib.resources
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .jsonl import JsonlError, read_records, write_records
from .langs import parse_lang
from .synth import ChatClient, ChatMessage, GenerationParams, OracleConfig, TransportError

ICE_MIN, ICE_MAX = 0, 4
PARSE_RETRIES = 2

# a trailing ".5" marks a non-integer rating (a parse error), but sentence
# punctuation after the digit is fine
_SCORE_RE = re.compile(r"score\s*[:=]?\s*([0-4])(?!\.?\d)", re.IGNORECASE)
_DIGIT_RE = re.compile(r"(?<![\d.])([0-4])(?!\.?\d)")


class IceParseError(ValueError):
    pass


@dataclass(frozen=True)
class IceScore:
    value: int

    def __post_init__(self):
        if not ICE_MIN <= self.value <= ICE_MAX:
            raise ValueError(f"score {self.value} outside [{ICE_MIN}, {ICE_MAX}]")


@dataclass(frozen=True)
class QualityRecord:
    id: str
    lang: str
    index: int
    ice: IceScore
    raw_response: str
    flagged: bool = False


def _rubric() -> str:
    ref = importlib.resources.files("mpot.data").joinpath("ice_rubric.txt")
    return ref.read_text(encoding="utf-8").rstrip("\n")


def render_ice_prompt(question: str, program: str) -> list[ChatMessage]:
    """System rubric plus a user payload carrying question and code verbatim."""
    if not program.strip():
        raise ValueError("cannot rate an empty program")
    user = f"Question:\n{question}\n\nCandidate program:\n{program}"
    return [ChatMessage("system", _rubric()), ChatMessage("user", user)]


def parse_ice_response(text: str) -> IceScore:
    """Read the score from an evaluator reply.

    Prefers the last "Score: <n>" marker; otherwise falls back to the last
    standalone digit in range. Anything else is a parse error.
    """
    matches = _SCORE_RE.findall(text)
    if matches:
        return IceScore(int(matches[-1]))
    digits = _DIGIT_RE.findall(text)
    if digits:
        return IceScore(int(digits[-1]))
    raise IceParseError(f"no score found in reply: {text[:120]!r}")


@dataclass(frozen=True)
class ScoringItem:
    """One candidate program queued for quality scoring."""

    id: str
    lang: str
    index: int
    question: str
    program: str


def score_code_quality(
    items: Iterable[ScoringItem],
    evaluator: OracleConfig,
    workers: int = 1,
    client: Optional[ChatClient] = None,
    max_tokens: int = 256,
) -> list[QualityRecord]:
    """Rate each item, returning records sorted by (id, lang, index).

    Transport failures and persistent parse failures become flagged score-0
    records; the run always completes.
    """
    client = client or ChatClient(evaluator)
    items = list(items)

    def score_one(item: ScoringItem) -> QualityRecord:
        messages = render_ice_prompt(item.question, item.program)
        last_reply = ""
        for _ in range(1 + PARSE_RETRIES):
            try:
                last_reply = client.complete(messages, GenerationParams(max_tokens=max_tokens))[0]
            except TransportError as exc:
                return QualityRecord(item.id, item.lang, item.index, IceScore(0), str(exc), flagged=True)
            try:
                return QualityRecord(item.id, item.lang, item.index, parse_ice_response(last_reply), last_reply)
            except IceParseError:
                continue
        return QualityRecord(item.id, item.lang, item.index, IceScore(0), last_reply, flagged=True)

    if workers <= 1:
        records = [score_one(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(score_one, items))
    return sorted(records, key=lambda r: (r.id, r.lang, r.index))


def mean_scores_by_lang(scores: Iterable[tuple[str, int]]) -> tuple[dict[str, float], float]:
    """Per-language mean scores and their unweighted macro mean."""
    buckets: dict[str, list[int]] = {}
    for lang, ice in scores:
        buckets.setdefault(parse_lang(lang), []).append(ice)
    if not buckets:
        raise ValueError("no scores to summarize")
    per_lang = {lang: sum(vals) / len(vals) for lang, vals in sorted(buckets.items())}
    overall = sum(per_lang.values()) / len(per_lang)
    return per_lang, overall


def write_quality(path, records: Iterable[QualityRecord]) -> Path:
    rows = (
        {"id": r.id, "lang": r.lang, "index": r.index, "ice": r.ice.value, "flagged": r.flagged}
        for r in records
    )
    return write_records(path, rows)


def read_quality(path) -> dict[tuple[str, str, int], tuple[int, bool]]:
    """Quality scores keyed by (id, lang, index) -> (score, flagged)."""
    out: dict[tuple[str, str, int], tuple[int, bool]] = {}
    for lineno, record in read_records(path):
        try:
            key = (str(record["id"]), parse_lang(str(record["lang"])), int(record["index"]))
            score = IceScore(int(record["ice"])).value
        except (KeyError, ValueError) as exc:
            raise JsonlError(path, lineno, str(exc)) from exc
        out[key] = (score, bool(record.get("flagged", False)))
    return out
