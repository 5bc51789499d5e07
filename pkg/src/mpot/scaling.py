"""Test-time answer aggregation over sampled candidates.

Two strategies: plain majority voting over executed answers, and soft voting
that ranks answer groups by their mean code-quality score. Candidates whose
programs failed to run carry no vote; when nothing ran, the vote abstains and
scores as incorrect downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

from .harness import ExecutionOutcome, compare_answer
from .jsonl import JsonlError, read_records, write_records
from .langs import parse_lang

# Sampling defaults for candidate generation; all overridable per run.
DEFAULT_NUM_SAMPLES = 40
DEFAULT_TEMPERATURE = 0.7
DEFAULT_TOP_K = 50


class VotingError(ValueError):
    pass


@dataclass(frozen=True)
class Candidate:
    index: int
    completion: str
    outcome: ExecutionOutcome
    program: Optional[str] = None
    ice: Optional[int] = None


@dataclass(frozen=True)
class AnswerGroup:
    answer: Decimal
    members: tuple[int, ...]
    count: int
    mean_ice: Optional[float] = None


@dataclass(frozen=True)
class VoteResult:
    chosen: Optional[Decimal]
    method: str
    groups: tuple[AnswerGroup, ...]
    tie: bool
    abstained: bool

    def __post_init__(self):
        if self.abstained != (self.chosen is None):
            raise VotingError("a vote abstains exactly when it chooses nothing")
        if self.abstained != (len(self.groups) == 0):
            raise VotingError("a vote abstains exactly when no candidate executed")


def _check_indices(candidates: list[Candidate]) -> None:
    indices = [c.index for c in candidates]
    if len(indices) != len(set(indices)):
        raise VotingError("candidate indices must be unique")


def group_candidates(candidates: Iterable[Candidate]) -> list[AnswerGroup]:
    """Group executed candidates by answer, tolerant of float noise.

    Answers equal under the comparison tolerance share a group whose key is
    the first value seen, so grouping is deterministic in generation order.
    Failed candidates are left out entirely.
    """
    ordered = sorted(candidates, key=lambda c: c.index)
    _check_indices(ordered)
    keys: list[Decimal] = []
    members: list[list[Candidate]] = []
    for cand in ordered:
        if cand.outcome.status != "ok":
            continue
        value = cand.outcome.value
        for key, group in zip(keys, members):
            if compare_answer(value, key):
                group.append(cand)
                break
        else:
            keys.append(value)
            members.append([cand])
    groups = []
    for key, group in zip(keys, members):
        ices = [c.ice for c in group]
        mean_ice = sum(ices) / len(ices) if all(i is not None for i in ices) else None
        groups.append(
            AnswerGroup(
                answer=key,
                members=tuple(c.index for c in group),
                count=len(group),
                mean_ice=mean_ice,
            )
        )
    return groups


def majority_vote(candidates: Iterable[Candidate]) -> VoteResult:
    """Pick the most frequent answer; ties go to the earliest-generated group."""
    groups = group_candidates(candidates)
    if not groups:
        return VoteResult(chosen=None, method="sc", groups=(), tie=False, abstained=True)
    best_count = max(g.count for g in groups)
    contenders = [g for g in groups if g.count == best_count]
    winner = min(contenders, key=lambda g: min(g.members))
    return VoteResult(
        chosen=winner.answer,
        method="sc",
        groups=tuple(groups),
        tie=len(contenders) > 1,
        abstained=False,
    )


def soft_vote(candidates: Iterable[Candidate]) -> VoteResult:
    """Pick the answer group with the highest mean quality score.

    Ties break first on group size, then on the earliest-generated member,
    so constant scores reduce exactly to the majority vote. Every executed
    candidate must carry a score.
    """
    candidates = list(candidates)
    for cand in candidates:
        if cand.outcome.status == "ok" and cand.ice is None:
            raise VotingError(f"candidate {cand.index} executed ok but has no quality score")
    groups = group_candidates(candidates)
    if not groups:
        return VoteResult(chosen=None, method="soft-sc", groups=(), tie=False, abstained=True)

    by_index = {c.index: c for c in candidates}

    def exact_mean(group: AnswerGroup) -> Fraction:
        return Fraction(sum(by_index[i].ice for i in group.members), group.count)

    best_mean = max(exact_mean(g) for g in groups)
    contenders = [g for g in groups if exact_mean(g) == best_mean]
    best_count = max(g.count for g in contenders)
    contenders = [g for g in contenders if g.count == best_count]
    winner = min(contenders, key=lambda g: min(g.members))
    top_mean_shared = sum(1 for g in groups if exact_mean(g) == best_mean) > 1
    return VoteResult(
        chosen=winner.answer,
        method="soft-sc",
        groups=tuple(groups),
        tie=top_mean_shared,
        abstained=False,
    )


def write_candidates(path, rows: Iterable[tuple[str, str, Candidate]]) -> Path:
    """Persist (problem id, language, candidate) rows as JSONL."""
    def encode():
        for pid, lang, cand in rows:
            record = {
                "id": pid,
                "lang": lang,
                "index": cand.index,
                "completion": cand.completion,
                "status": cand.outcome.status,
            }
            if cand.program is not None:
                record["program"] = cand.program
            if cand.outcome.value is not None:
                record["value"] = str(cand.outcome.value)
            if cand.ice is not None:
                record["ice"] = cand.ice
            yield record

    return write_records(path, encode())


def read_candidates(path) -> dict[tuple[str, str], list[Candidate]]:
    """Load candidates grouped by (problem id, language), in file order."""
    grouped: dict[tuple[str, str], list[Candidate]] = {}
    for lineno, record in read_records(path):
        try:
            lang = parse_lang(str(record["lang"]))
            status = str(record["status"])
            value = Decimal(str(record["value"])) if status == "ok" else None
            outcome = ExecutionOutcome(status=status, value=value)
            candidate = Candidate(
                index=int(record["index"]),
                completion=str(record.get("completion", "")),
                outcome=outcome,
                program=record.get("program"),
                ice=int(record["ice"]) if record.get("ice") is not None else None,
            )
        except (KeyError, ValueError, ArithmeticError) as exc:
            raise JsonlError(path, lineno, str(exc)) from exc
        grouped.setdefault((str(record["id"]), lang), []).append(candidate)
    return grouped
