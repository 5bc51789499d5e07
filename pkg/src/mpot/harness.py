"""Program execution and answer scoring.

Generated programs are shipped to a sandbox runner process over a one-line
JSON protocol (one request in on stdin, one reply out on stdout) and scored
against gold labels. Natural-language outputs are scored by extracting the
last number instead. Execution failures are never dropped: they count as
incorrect against the full denominator.
"""

from __future__ import annotations

import json
import math
import os
import re
import shlex
import subprocess
import sys
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Optional, Protocol, Sequence, Union

from .langs import LANGUAGES

OUTCOME_STATUSES = ("ok", "compile_error", "runtime_error", "timeout", "no_output")

# Absolute tolerance for answer comparison: gold answers are small integers
# or short decimals, so 1e-6 separates genuine mismatches from float noise.
ANSWER_TOLERANCE = Decimal("0.000001")

SOLVER_HEADER_RE = re.compile(r"^[ \t]*def\s+solver\s*\(\s*\)\s*:")
DRIVER_LINE = "result = solver()"

_CURRENCY = "$€£¥₹¢"
# Numbers with proper thousands groups, or plain integers/decimals. The
# leading minus only counts when not glued to a preceding digit, so "5-3"
# yields 3, not -3, while a freestanding "-3" keeps its sign.
_NUMBER_RE = re.compile(r"(?<![\d.])-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?")

RUNNER_ENV_VAR = "MPOT_RUNNER"


class ExtractionError(ValueError):
    """No program could be located in a completion."""


class RunnerUnavailableError(RuntimeError):
    """The runner process itself failed; distinct from the program failing."""


@dataclass(frozen=True)
class ExecutionLimits:
    wall_timeout: float = 10.0
    max_output_bytes: int = 65536
    allow_network: bool = False

    def __post_init__(self):
        if self.wall_timeout <= 0:
            raise ValueError("wall_timeout must be positive")


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str
    value: Optional[Decimal] = None
    stderr_excerpt: str = ""

    def __post_init__(self):
        if self.status not in OUTCOME_STATUSES:
            raise ValueError(f"unknown outcome status {self.status!r}")
        if (self.status == "ok") != (self.value is not None):
            raise ValueError("value must be present exactly when status is 'ok'")


@dataclass(frozen=True)
class GoldAnswer:
    value: Decimal

    def __post_init__(self):
        if not self.value.is_finite():
            raise ValueError("gold answer must be finite")


@dataclass
class EvalReport:
    per_language: dict[str, float]
    all: float
    counts: dict[str, tuple[int, int]]
    failure_breakdown: dict[str, int] = field(default_factory=dict)


class Executor(Protocol):
    def execute(self, source: str, limits: ExecutionLimits) -> ExecutionOutcome: ...


def extract_program(completion: str, assume_prefix: bool = False) -> str:
    """Pull the solver program out of a model completion.

    Returns the block from the first ``def solver():`` line through the end
    of its indented suite, with a ``result = solver()`` driver line appended
    for the runner. With assume_prefix, a completion that starts with an
    indented body (the header was part of the prompt) gets the header
    prepended instead of failing.
    """
    lines = completion.split("\n")
    header_idx = None
    for idx, line in enumerate(lines):
        if SOLVER_HEADER_RE.match(line):
            header_idx = idx
            break

    if header_idx is not None:
        header = lines[header_idx]
        base_indent = len(header) - len(header.lstrip())
        block = [header]
        for line in lines[header_idx + 1 :]:
            if not line.strip():
                block.append(line)
                continue
            indent = len(line) - len(line.lstrip())
            if indent <= base_indent:
                break
            block.append(line)
        if base_indent:
            block = [line[base_indent:] if line.strip() else line for line in block]
    elif assume_prefix:
        first = next((line for line in lines if line.strip()), None)
        if first is None or not first[0] in (" ", "\t"):
            raise ExtractionError("completion does not start with an indented solver body")
        block = ["def solver():"]
        for line in lines:
            if line.strip() and not line[0] in (" ", "\t"):
                break
            block.append(line)
    else:
        raise ExtractionError("no 'def solver():' definition found in completion")

    body = "\n".join(block).rstrip()
    return f"{body}\n\n{DRIVER_LINE}\n"


class RunnerExecutor:
    """Client side of the runner protocol: one process per execution."""

    def __init__(self, command: Sequence[str]):
        if not command:
            raise ValueError("runner command must not be empty")
        self.command = list(command)

    def execute(self, source: str, limits: ExecutionLimits) -> ExecutionOutcome:
        request = {"source": source, "timeout": limits.wall_timeout}
        if limits.allow_network:
            request["allow_network"] = True
        try:
            proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise RunnerUnavailableError(f"cannot start runner {self.command!r}: {exc}") from exc
        try:
            out, err = proc.communicate(json.dumps(request) + "\n", timeout=limits.wall_timeout + 1.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.communicate()
            return ExecutionOutcome("timeout", stderr_excerpt="runner did not reply within the wall limit")
        reply_line = next((line for line in out.splitlines() if line.strip()), "")
        try:
            reply = json.loads(reply_line)
        except json.JSONDecodeError as exc:
            if proc.returncode is not None and proc.returncode < 0:
                # killed by a signal before replying: the runner's own CPU
                # backstop fired, which is a program timeout, not an
                # environment failure
                return ExecutionOutcome("timeout", stderr_excerpt=f"runner killed by signal {-proc.returncode}")
            raise RunnerUnavailableError(
                f"runner produced no valid reply (exit {proc.returncode}): {err[:500]!r}"
            ) from exc
        return _outcome_from_reply(reply, limits)


def _outcome_from_reply(reply: dict, limits: ExecutionLimits) -> ExecutionOutcome:
    if reply.get("ok"):
        try:
            value = Decimal(str(reply["value"]))
        except (KeyError, InvalidOperation) as exc:
            raise RunnerUnavailableError(f"runner reply has a bad value field: {reply!r}") from exc
        return ExecutionOutcome("ok", value=value)
    error = reply.get("error") or {}
    kind = {
        "compile": "compile_error",
        "runtime": "runtime_error",
        "timeout": "timeout",
        "no_output": "no_output",
    }.get(error.get("kind"))
    if kind is None:
        raise RunnerUnavailableError(f"runner reply has an unknown error kind: {reply!r}")
    message = str(error.get("message", ""))[: min(500, limits.max_output_bytes)]
    return ExecutionOutcome(kind, stderr_excerpt=message)


def default_runner_command() -> list[str]:
    configured = os.environ.get(RUNNER_ENV_VAR)
    if configured:
        return shlex.split(configured)
    return [sys.executable, "-m", "pot_runner"]


def execute_program(
    source: str,
    limits: ExecutionLimits | None = None,
    executor: Executor | None = None,
) -> ExecutionOutcome:
    """Run one program under the given limits and normalize the outcome."""
    limits = limits or ExecutionLimits()
    if executor is None:
        executor = RunnerExecutor(default_runner_command())
    return executor.execute(source, limits)


def parse_number(text: str) -> Optional[Decimal]:
    """The last number in the text, normalized.

    Currency symbols are stripped, thousands separators removed, and a
    directly-attached unary minus is honored. Returns None when the text
    contains no number.
    """
    cleaned = text
    for symbol in _CURRENCY:
        if symbol in cleaned:
            cleaned = cleaned.replace(symbol, " ")
    last = None
    for match in _NUMBER_RE.finditer(cleaned):
        last = match.group()
    if last is None:
        return None
    return Decimal(last.replace(",", ""))


def extract_cot_answer(text: str) -> Optional[Decimal]:
    """Final numeric answer of a natural-language solution, if any."""
    return parse_number(text)


def _as_decimal(value) -> Optional[Decimal]:
    if value is None:
        return None
    if isinstance(value, GoldAnswer):
        return value.value
    if isinstance(value, Decimal):
        return value if value.is_finite() else None
    if isinstance(value, bool):
        return Decimal(int(value))
    if isinstance(value, int):
        return Decimal(value)
    if isinstance(value, float):
        return Decimal(repr(value)) if math.isfinite(value) else None
    if isinstance(value, str):
        return parse_number(value)
    return None


def compare_answer(predicted, gold) -> bool:
    """True when predicted and gold agree within the answer tolerance."""
    p = _as_decimal(predicted)
    g = _as_decimal(gold)
    if p is None or g is None:
        return False
    return abs(p - g) <= ANSWER_TOLERANCE


Record = tuple[str, Union[ExecutionOutcome, Decimal, float, int, None], Union[GoldAnswer, Decimal]]


def score_accuracy(records: Iterable[Record]) -> EvalReport:
    """Per-language accuracy with the unweighted macro mean.

    Each record is (language, outcome-or-extracted-value, gold). Execution
    outcomes that are not ok, and absent extracted values, score incorrect
    and are tallied in the failure breakdown.
    """
    totals: dict[str, int] = {}
    correct: dict[str, int] = {}
    breakdown: dict[str, int] = {}
    count = 0
    for lang, result, gold in records:
        count += 1
        if isinstance(result, ExecutionOutcome):
            status, value = result.status, result.value
        elif result is None:
            status, value = "no_output", None
        else:
            status, value = "ok", result
        totals[lang] = totals.get(lang, 0) + 1
        if status != "ok":
            breakdown[status] = breakdown.get(status, 0) + 1
        if value is not None and compare_answer(value, gold):
            correct[lang] = correct.get(lang, 0) + 1
    if count == 0:
        raise ValueError("score_accuracy needs at least one record")

    order = [lang for lang in LANGUAGES if lang in totals]
    order += sorted(set(totals) - set(order))
    per_language = {lang: 100.0 * correct.get(lang, 0) / totals[lang] for lang in order}
    macro = sum(per_language.values()) / len(per_language)
    counts = {lang: (correct.get(lang, 0), totals[lang]) for lang in order}
    ordered_breakdown = {s: breakdown[s] for s in OUTCOME_STATUSES if s in breakdown}
    return EvalReport(per_language=per_language, all=macro, counts=counts, failure_breakdown=ordered_breakdown)
