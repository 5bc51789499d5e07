"""Oracle-backed program synthesis and the comment translation hook.

Prompt rendering is pure; only the endpoint call is effectful. Completions
are fetched through a chat-completion HTTP endpoint with retries and an
optional content-addressed cache, so a populated cache makes every run
deterministic and offline.
"""

from __future__ import annotations

import importlib.resources
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Protocol, Sequence

import requests

from . import harness, pysrc
from .cache import CacheKey, ResponseCache
from .corpus import PotSolution, Problem, Sample
from .langs import LANGUAGE_NAMES, parse_lang

logger = logging.getLogger(__name__)

PROMPT_MODES = ("zero-shot", "few-shot", "few-shot-cot")

MAX_RETRIES = 3
BACKOFF_SECONDS = 0.5


class TransportError(RuntimeError):
    """Endpoint unreachable or persistently failing."""


class SynthesisError(ValueError):
    """The oracle replied, but no program could be extracted."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown chat role {self.role!r}")


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.0
    top_k: Optional[int] = None
    num_samples: int = 1
    max_tokens: int = 512
    seed: Optional[int] = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.num_samples < 1:
            raise ValueError("num_samples must be positive")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be positive")

    @property
    def is_greedy(self) -> bool:
        return self.temperature == 0 and self.num_samples == 1

    def key_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_k": self.top_k,
            "num_samples": self.num_samples,
            "max_tokens": self.max_tokens,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class OracleConfig:
    endpoint_url: str
    model_name: str
    auth_token_env: str = ""
    request_timeout: float = 60.0


@dataclass(frozen=True)
class Exemplar:
    question: str
    pot: str
    cot: Optional[str] = None

    def __post_init__(self):
        pysrc.tokenize(self.pot)


def load_exemplars() -> tuple[Exemplar, ...]:
    """The two shipped worked examples used by the few-shot modes."""
    ref = importlib.resources.files("mpot.data").joinpath("exemplars.json")
    raw = json.loads(ref.read_text(encoding="utf-8"))
    exemplars = tuple(Exemplar(question=e["question"], pot=e["pot"], cot=e.get("cot")) for e in raw)
    if len(exemplars) != 2:
        raise ValueError(f"few-shot modes carry exactly two exemplars, found {len(exemplars)}")
    return exemplars


def _system_text(language: str) -> str:
    ref = importlib.resources.files("mpot.data").joinpath("synthesis_system.txt")
    template = ref.read_text(encoding="utf-8").rstrip("\n")
    return template.replace("[language]", LANGUAGE_NAMES[parse_lang(language)])


def render_synthesis_prompt(mode: str, problem: Problem, language: str) -> list[ChatMessage]:
    """Build the chat messages for one synthesis request.

    zero-shot is system + question; the few-shot modes interleave the two
    shipped exemplars as user/assistant turns; few-shot-cot additionally
    carries a "Chain-of-thought:" line in every user turn, so the problem
    must have one.
    """
    if mode not in PROMPT_MODES:
        raise ValueError(f"unknown prompt mode {mode!r}")
    if mode == "few-shot-cot" and not problem.cot:
        raise ValueError(f"problem {problem.id!r} has no chain-of-thought text for mode {mode!r}")

    def user_turn(question: str, cot: Optional[str]) -> ChatMessage:
        content = f"Question: {question}"
        if mode == "few-shot-cot":
            content += f"\nChain-of-thought: {cot}"
        return ChatMessage("user", content)

    messages = [ChatMessage("system", _system_text(language))]
    if mode != "zero-shot":
        for exemplar in load_exemplars():
            messages.append(user_turn(exemplar.question, exemplar.cot))
            messages.append(ChatMessage("assistant", exemplar.pot))
    messages.append(user_turn(problem.question, problem.cot))
    return messages


Transport = Callable[[str, dict, dict, float], dict]


def http_transport(url: str, body: dict, headers: dict, timeout: float) -> dict:
    response = requests.post(url, json=body, headers=headers, timeout=timeout)
    response.raise_for_status()
    return response.json()


def offline_transport(url: str, body: dict, headers: dict, timeout: float) -> dict:
    raise TransportError("offline mode: response not in cache and network calls are forbidden")


class ChatClient:
    """Chat-completion client with retry, backoff, and response caching."""

    def __init__(
        self,
        config: OracleConfig,
        transport: Transport = http_transport,
        cache: Optional[ResponseCache] = None,
        max_retries: int = MAX_RETRIES,
        extra_params: Optional[dict] = None,
    ):
        self.config = config
        self.transport = transport
        self.cache = cache
        self.max_retries = max_retries
        self.extra_params = dict(extra_params or {})
        self._logged_top_k = False

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_token_env:
            import os

            token = os.environ.get(self.config.auth_token_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def _body(self, messages: Sequence[ChatMessage], params: GenerationParams) -> dict:
        body = {
            "model": self.config.model_name,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "n": params.num_samples,
        }
        if params.top_k is not None:
            # passthrough: not every provider accepts top_k in the core schema
            body["top_k"] = params.top_k
        if params.seed is not None:
            body["seed"] = params.seed
        body.update(self.extra_params)
        return body

    def _call(self, body: dict) -> dict:
        last_error = None
        for attempt in range(self.max_retries):
            try:
                return self.transport(self.config.endpoint_url, body, self._headers(), self.config.request_timeout)
            except TransportError:
                raise
            except Exception as exc:  # noqa: BLE001 - transport errors vary by backend
                last_error = exc
                if attempt + 1 < self.max_retries:
                    delay = BACKOFF_SECONDS * (2**attempt)
                    logger.warning("endpoint call failed (%s); retrying in %.1fs", exc, delay)
                    time.sleep(delay)
        raise TransportError(f"endpoint failed after {self.max_retries} attempts: {last_error}")

    def complete(self, messages: Sequence[ChatMessage], params: GenerationParams) -> list[str]:
        """Return the completion texts (num_samples of them)."""
        if params.top_k is not None and not self._logged_top_k:
            logger.info("run sends top_k=%s as a passthrough parameter", params.top_k)
            self._logged_top_k = True
        body = self._body(messages, params)
        key = CacheKey.for_request(self.config.model_name, body["messages"], params.key_dict())
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                return _extract_completions(json.loads(cached), params.num_samples)
        response = self._call(body)
        completions = _extract_completions(response, params.num_samples)
        if self.cache is not None:
            self.cache.put(key, json.dumps(response, ensure_ascii=False))
        return completions


def _extract_completions(response: dict, expected: int) -> list[str]:
    choices = response.get("choices")
    if not isinstance(choices, list) or not choices:
        raise TransportError(f"endpoint response has no choices: {str(response)[:200]}")
    texts = []
    for choice in choices:
        message = choice.get("message")
        if isinstance(message, dict) and "content" in message:
            texts.append(str(message["content"]))
        elif "text" in choice:
            texts.append(str(choice["text"]))
        else:
            raise TransportError(f"unrecognized choice shape: {str(choice)[:200]}")
    if len(texts) < expected:
        raise TransportError(f"endpoint returned {len(texts)} completions, expected {expected}")
    return texts[:expected]


def synthesize_pot(
    problem: Problem,
    oracle: OracleConfig,
    mode: str = "few-shot-cot",
    client: Optional[ChatClient] = None,
    max_tokens: int = 512,
) -> PotSolution:
    """Fetch one greedy completion and extract its solver program."""
    client = client or ChatClient(oracle)
    messages = render_synthesis_prompt(mode, problem, problem.lang)
    params = GenerationParams(temperature=0.0, num_samples=1, max_tokens=max_tokens)
    completion = client.complete(messages, params)[0]
    try:
        program = harness.extract_program(completion, assume_prefix=False)
    except harness.ExtractionError as exc:
        raise SynthesisError(f"problem {problem.id!r}: {exc}", raw=completion) from exc
    return PotSolution(source=program, comment_lang=problem.lang, provenance="oracle-synthesized")


def synthesize_corpus(
    problems: Iterable[Problem],
    oracle: OracleConfig,
    mode: str = "few-shot-cot",
    client: Optional[ChatClient] = None,
    workers: int = 1,
    max_attempts: int = 1,
) -> tuple[list[Sample], list[tuple[Problem, str]]]:
    """Synthesize programs for many problems with a bounded worker pool.

    Returns (samples, failures); failures carry the reason. max_attempts > 1
    retries problems whose completion had no extractable program.
    """
    client = client or ChatClient(oracle)
    problems = list(problems)

    def synth_one(problem: Problem):
        last = None
        for _ in range(max_attempts):
            try:
                return Sample(problem=problem, solution=synthesize_pot(problem, oracle, mode, client))
            except SynthesisError as exc:
                last = exc
        return (problem, str(last))

    if workers <= 1:
        results = [synth_one(p) for p in problems]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(synth_one, problems))
    samples = [r for r in results if isinstance(r, Sample)]
    failures = [r for r in results if not isinstance(r, Sample)]
    return samples, failures


@dataclass
class FilterResult:
    kept: list[Sample]
    rejected: list[tuple[Sample, harness.ExecutionOutcome]]
    retention: float


def verify_and_filter(
    samples: Iterable[Sample],
    limits: Optional[harness.ExecutionLimits] = None,
    executor: Optional[harness.Executor] = None,
    workers: int = 1,
) -> FilterResult:
    """Keep exactly the samples whose program executes to the gold answer."""
    samples = list(samples)
    limits = limits or harness.ExecutionLimits()

    def run(sample: Sample) -> harness.ExecutionOutcome:
        return harness.execute_program(sample.solution.source, limits, executor)

    if workers <= 1:
        outcomes = [run(s) for s in samples]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, samples))

    kept, rejected = [], []
    for sample, outcome in zip(samples, outcomes):
        if outcome.status == "ok" and harness.compare_answer(outcome.value, sample.problem.gold):
            kept.append(sample)
        else:
            rejected.append((sample, outcome))
    retention = len(kept) / len(samples) if samples else 0.0
    return FilterResult(kept=kept, rejected=rejected, retention=retention)


class Translator(Protocol):
    def translate(self, texts: Sequence[str], source_lang: str, target_lang: str) -> list[str]: ...


@dataclass
class ChatTranslator:
    """Machine translation through the same chat endpoint shape as the oracle."""

    client: ChatClient
    max_tokens: int = 1024

    def translate(self, texts: Sequence[str], source_lang: str, target_lang: str) -> list[str]:
        if not texts:
            return []
        src = LANGUAGE_NAMES[parse_lang(source_lang)]
        tgt = LANGUAGE_NAMES[parse_lang(target_lang)]
        numbered = "\n".join(f"{i + 1}. {t}" for i, t in enumerate(texts))
        messages = [
            ChatMessage(
                "system",
                f"Translate each numbered line from {src} to {tgt}. "
                "Reply with the same numbered lines, one translation per line, nothing else.",
            ),
            ChatMessage("user", numbered),
        ]
        reply = self.client.complete(messages, GenerationParams(max_tokens=self.max_tokens))[0]
        lines = [line.strip() for line in reply.splitlines() if line.strip()]
        out = []
        for i in range(len(texts)):
            prefix = f"{i + 1}."
            match = next((line for line in lines if line.startswith(prefix)), None)
            if match is None:
                raise TransportError(f"translator reply missing line {i + 1}: {reply[:200]!r}")
            out.append(match[len(prefix) :].strip())
        return out


def translate_comments(solution: PotSolution, translator: Translator, target: str) -> PotSolution:
    """Re-render a solution with its comments machine-translated.

    Only English-commented solutions qualify; everything except the comment
    text (and the comment-language tag) stays byte-identical. Translations
    containing newlines are flattened to spaces so the program still
    tokenizes to the same shape.
    """
    parse_lang(target)
    if solution.comment_lang != "en":
        raise ValueError(f"comment translation starts from English comments, got {solution.comment_lang!r}")
    spans = pysrc.extract_comments(solution.source)
    if not spans:
        return PotSolution(source=solution.source, comment_lang=target, provenance="transformed")

    # Surrounding whitespace inside each comment is layout, not content:
    # peel it off, translate the core, and splice it back unchanged.
    pieces = []
    for span in spans:
        body = span.body
        lead = body[: len(body) - len(body.lstrip())]
        rest = body[len(lead) :]
        core = rest.rstrip()
        pieces.append((lead, core, rest[len(core) :]))

    to_translate = [(i, core) for i, (_, core, _) in enumerate(pieces) if core]
    translated = translator.translate([core for _, core in to_translate], "en", target)
    if len(translated) != len(to_translate):
        raise TransportError(f"translator returned {len(translated)} segments for {len(to_translate)} comments")
    by_index = {}
    for (i, _), text in zip(to_translate, translated):
        if "\n" in text or "\r" in text:
            logger.warning("translation contained a newline; flattening to spaces")
            text = " ".join(text.replace("\r", "\n").split("\n"))
        by_index[i] = text
    replacements = [lead + by_index.get(i, core) + tail for i, (lead, core, tail) in enumerate(pieces)]
    swapped = pysrc.replace_comments(solution.source, replacements)
    return PotSolution(source=swapped, comment_lang=target, provenance="transformed")
