"""Shared test plumbing.

LocalExecutor runs candidate programs in-process with the same outcome
semantics as the sandbox runner protocol, so the whole suite works without
any runner child process. The program corpus generator builds deterministic
solver programs, from plain arithmetic to adversarial string/comment mixes,
for the tokenizer and transform property tests.
"""

from __future__ import annotations

import contextlib
import io
import json
import math
import random
import signal
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import pytest

from mpot.harness import ExecutionLimits, ExecutionOutcome

FIXTURES = Path(__file__).parent / "fixtures"


class _LocalTimeout(BaseException):
    pass


def _render_value(value) -> Decimal | None:
    if isinstance(value, bool):
        return Decimal(int(value))
    if isinstance(value, int):
        return Decimal(value)
    if isinstance(value, float):
        return Decimal(repr(value)) if math.isfinite(value) else None
    if isinstance(value, Decimal):
        return value if value.is_finite() else None
    return None


@dataclass
class LocalExecutor:
    """In-process stand-in for the sandbox runner."""

    def execute(self, source: str, limits: ExecutionLimits) -> ExecutionOutcome:
        try:
            code = compile(source, "<candidate>", "exec")
        except SyntaxError as exc:
            return ExecutionOutcome("compile_error", stderr_excerpt=str(exc))
        namespace: dict = {"__name__": "__candidate__"}

        def on_alarm(signum, frame):
            raise _LocalTimeout()

        previous = signal.signal(signal.SIGALRM, on_alarm)
        signal.setitimer(signal.ITIMER_REAL, limits.wall_timeout)
        try:
            with contextlib.redirect_stdout(io.StringIO()):
                exec(code, namespace)
                if "result" in namespace:
                    value = namespace["result"]
                elif callable(namespace.get("solver")):
                    value = namespace["solver"]()
                else:
                    return ExecutionOutcome("no_output", stderr_excerpt="no solver() or result")
        except _LocalTimeout:
            return ExecutionOutcome("timeout", stderr_excerpt="wall limit hit")
        except Exception as exc:  # noqa: BLE001 - candidate code can raise anything
            return ExecutionOutcome("runtime_error", stderr_excerpt=repr(exc)[:500])
        finally:
            signal.setitimer(signal.ITIMER_REAL, 0)
            signal.signal(signal.SIGALRM, previous)
        rendered = _render_value(value)
        if rendered is None:
            return ExecutionOutcome("no_output", stderr_excerpt=f"non-numeric result {type(value).__name__}")
        return ExecutionOutcome("ok", value=rendered)


@pytest.fixture
def local_executor() -> LocalExecutor:
    return LocalExecutor()


@pytest.fixture(scope="session")
def accuracy_grids() -> dict:
    return json.loads((FIXTURES / "accuracy_grids.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def ice_grids() -> dict:
    return json.loads((FIXTURES / "ice_grids.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def score_distribution() -> dict:
    return json.loads((FIXTURES / "score_distribution.json").read_text(encoding="utf-8"))


# --- deterministic program corpus ---------------------------------------

_COMMENT_TEXTS = [
    "start with the base amount",
    "zwei Dosen mit je drei Bällen",
    "осталось после продажи",
    "每天的收入",
    "ราคาต่อชิ้น",
    "jumla ya matunda",
    "মোট সংখ্যা",
    "the answer is",
    "",
    "   ",
    "no-space-comment",
]


def _plain_solver(rng: random.Random) -> str:
    a, b, c = rng.randint(2, 90), rng.randint(2, 30), rng.randint(1, 9)
    c1, c2 = rng.choice(_COMMENT_TEXTS), rng.choice(_COMMENT_TEXTS)
    return (
        "def solver():\n"
        f"    # {c1}\n"
        f"    base = {a}\n"
        f"    extra = {b} * {c}  # {c2}\n"
        "    answer = base + extra\n"
        "    return answer\n"
    )


def _string_hash_solver(rng: random.Random) -> str:
    tag = rng.choice(["# not a comment", "price # tag", "##", "x # y # z"])
    quote = rng.choice(['"', "'"])
    a = rng.randint(1, 50)
    return (
        "def solver():\n"
        f"    label = {quote}{tag}{quote}  # trailing note\n"
        f"    count = {a}\n"
        "    answer = count + len(label)\n"
        "    return answer\n"
    )


def _triple_quote_solver(rng: random.Random) -> str:
    a = rng.randint(3, 40)
    return (
        "def solver():\n"
        '    """Worked example.\n'
        "    # this hash lives in a docstring\n"
        "    price = ignored\n"
        '    """\n'
        f"    items = {a}\n"
        "    # halve and round down\n"
        "    answer = items // 2\n"
        "    return answer\n"
    )


def _prefix_string_solver(rng: random.Random) -> str:
    a = rng.randint(2, 25)
    kind = rng.choice(["f", "r", "rb"])
    if kind == "f":
        line = f'    note = f"#{{{a}}} units"'
    elif kind == "r":
        line = '    note = r"\\# escaped hash"'
    else:
        line = "    note = rb'# raw bytes'"
    return (
        "def solver():\n"
        "    # prefixed-string case\n"
        f"{line}\n"
        f"    answer = {a} + len(note)\n"
        "    return answer\n"
    )


def _escaped_quote_solver(rng: random.Random) -> str:
    a = rng.randint(5, 60)
    return (
        "def solver():\n"
        '    quip = "he said \\"#5\\" twice"  # keep the quote\n'
        f"    answer = {a} - 1\n"
        "    return answer\n"
    )


def _float_solver(rng: random.Random) -> str:
    a = rng.randint(3, 99)
    return (
        "def solver():\n"
        "    # fractional split\n"
        f"    total = {a}\n"
        "    answer = total / 2\n"
        "    return answer\n"
    )


def _eof_comment_solver(rng: random.Random) -> str:
    a = rng.randint(1, 30)
    # no trailing newline after the final comment on purpose
    return (
        "def solver():\n"
        f"    answer = {a} * 3\n"
        "    return answer\n"
        "# closing remark"
    )


_BUILDERS = [
    _plain_solver,
    _plain_solver,
    _plain_solver,
    _string_hash_solver,
    _triple_quote_solver,
    _prefix_string_solver,
    _escaped_quote_solver,
    _float_solver,
    _eof_comment_solver,
]


def build_program_corpus(count: int = 200, seed: int = 7) -> list[str]:
    rng = random.Random(seed)
    programs = []
    for i in range(count):
        builder = _BUILDERS[i % len(_BUILDERS)]
        source = builder(rng)
        compile(source, "<corpus>", "exec")
        programs.append(source)
    return programs


@pytest.fixture(scope="session")
def program_corpus() -> list[str]:
    return build_program_corpus()
