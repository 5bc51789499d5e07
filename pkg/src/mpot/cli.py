"""Command-line pipeline.

Stages map onto the two-phase workflow: question-to-program (synthesize,
variant, generate) and program-to-answer (evaluate, vote, quality, analyze,
report). Every command reads and writes declared JSONL artifacts only, and
every endpoint call goes through the response cache under the output
directory, so a populated cache makes reruns byte-identical and offline.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Optional

from . import corpus, harness, quality, reports, scaling, stats, synth
from .cache import ResponseCache
from .jsonl import read_records, write_records
from .langs import canonical_order

COMMANDS = ("synthesize", "variant", "generate", "evaluate", "vote", "quality", "analyze", "report")


class CommandError(RuntimeError):
    pass


def _endpoint(config_dict: Optional[dict], what: str) -> synth.OracleConfig:
    if not config_dict:
        raise CommandError(f"no {what} endpoint configured; add a {what!r} section to the config file")
    try:
        return synth.OracleConfig(
            endpoint_url=config_dict["endpoint_url"],
            model_name=config_dict["model_name"],
            auth_token_env=config_dict.get("auth_token_env", ""),
            request_timeout=float(config_dict.get("request_timeout", 60.0)),
        )
    except KeyError as exc:
        raise CommandError(f"{what} endpoint config is missing field {exc}") from exc


@dataclass
class RunConfig:
    problems: Optional[Path] = None
    samples: Optional[Path] = None
    candidates: Optional[Path] = None
    quality_file: Optional[Path] = None
    joined: Optional[Path] = None
    distribution: Optional[Path] = None
    translations: Optional[Path] = None
    translated_comments: Optional[Path] = None
    out: Path = Path("out")
    oracle: Optional[dict] = None
    evaluator: Optional[dict] = None
    translator: Optional[dict] = None
    model: Optional[dict] = None
    prompt_mode: str = "few-shot-cot"
    variant: Optional[str] = None
    langs: Optional[list[str]] = None
    k: int = 1
    temperature: float = 0.0
    top_k: Optional[int] = None
    max_tokens: int = 512
    seed: Optional[int] = None
    wall_timeout: float = 10.0
    workers: int = 1
    runner_cmd: Optional[list[str]] = None
    offline: bool = False
    assume_prefix: bool = False
    method: str = "sc"
    eval_inputs: list[tuple[str, Path]] = field(default_factory=list)
    quality_inputs: list[tuple[str, Path]] = field(default_factory=list)

    _PATH_FIELDS = (
        "problems",
        "samples",
        "candidates",
        "quality_file",
        "joined",
        "distribution",
        "translations",
        "translated_comments",
    )

    def __post_init__(self):
        if self.workers < 1:
            raise CommandError("worker count must be >= 1")
        if self.k < 1:
            raise CommandError("k must be >= 1")

    @classmethod
    def from_file(cls, path: Optional[Path]) -> "RunConfig":
        if path is None:
            return cls()
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise CommandError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise CommandError(f"config file {path} is not valid JSON: {exc.msg}") from exc
        config = cls()
        for key, value in raw.items():
            attr = "quality_file" if key == "quality" else key
            if not hasattr(config, attr) or attr.startswith("_"):
                raise CommandError(f"unknown config key {key!r}")
            if attr in cls._PATH_FIELDS or attr == "out":
                value = Path(value)
            if attr == "runner_cmd" and isinstance(value, str):
                value = shlex.split(value)
            setattr(config, attr, value)
        config.validate_paths()
        return config

    def validate_paths(self) -> None:
        for name in self._PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise CommandError(f"configured path for {name!r} does not exist: {value}")

    def client(self, endpoint: synth.OracleConfig) -> synth.ChatClient:
        transport = synth.offline_transport if self.offline else synth.http_transport
        cache = ResponseCache(self.out / "cache")
        return synth.ChatClient(endpoint, transport=transport, cache=cache)

    def executor(self) -> harness.Executor:
        command = self.runner_cmd or harness.default_runner_command()
        return harness.RunnerExecutor(command)

    def limits(self) -> harness.ExecutionLimits:
        return harness.ExecutionLimits(wall_timeout=self.wall_timeout)


def _require_artifact(path: Optional[Path], what: str, producer: str) -> Path:
    if path is None or not Path(path).exists():
        raise CommandError(f"missing {what} artifact ({path}); run the {producer!r} command first")
    return Path(path)


def _load_problem_map(config: RunConfig) -> dict[str, corpus.Problem]:
    path = _require_artifact(config.problems, "problems", "external input")
    problems = corpus.load_problems(path, lang="en")
    return {p.id: p for p in problems}


def cmd_synthesize(config: RunConfig) -> int:
    path = _require_artifact(config.problems, "problems", "external input")
    problems = corpus.load_problems(path, lang="en")
    oracle = _endpoint(config.oracle, "oracle")
    client = config.client(oracle)
    samples, failures = synth.synthesize_corpus(
        problems, oracle, mode=config.prompt_mode, client=client, workers=config.workers
    )
    result = synth.verify_and_filter(samples, config.limits(), config.executor(), workers=config.workers)
    kept_corpus = corpus.Corpus(samples=tuple(result.kept), variant="cross-en-en")
    corpus.write_samples(kept_corpus, config.out / "samples.jsonl")
    write_records(
        config.out / "rejected.jsonl",
        (
            {"id": s.problem.id, "status": outcome.status, "detail": outcome.stderr_excerpt}
            for s, outcome in result.rejected
        ),
    )
    summary = {
        "total": len(problems),
        "synthesized": len(samples),
        "no_program": len(failures),
        "kept": len(result.kept),
        "retention": result.retention,
    }
    reports.dump_json(summary, config.out / "synthesis_summary.json")
    print(f"kept {len(result.kept)}/{len(samples)} synthesized programs (retention {result.retention:.3f})")
    return 0


def cmd_variant(config: RunConfig) -> int:
    samples_path = _require_artifact(config.samples or config.out / "samples.jsonl", "samples", "synthesize")
    base = corpus.read_samples(samples_path)
    if not config.variant:
        raise CommandError("no variant tag given; pass --variant or set it in the config")
    translations = corpus.read_translations(config.translations) if config.translations else {}
    comments = corpus.read_translated_comments(config.translated_comments) if config.translated_comments else {}
    if config.langs:
        keep = set(config.langs)
        translations = {lang: v for lang, v in translations.items() if lang in keep}
        comments = {lang: v for lang, v in comments.items() if lang in keep}
    built = corpus.build_variant(base, translations, comments, target=config.variant)
    corpus.write_samples(built, config.out / "variant_samples.jsonl")
    corpus.export_training_records(built, config.out / "train.jsonl")
    print(f"built {config.variant}: {len(built)} samples over {len(built.languages)} language(s)")
    return 0


def cmd_generate(config: RunConfig) -> int:
    path = _require_artifact(config.problems, "problems", "external input")
    langs = canonical_order(config.langs or ["en"])
    model = _endpoint(config.model, "model")
    client = config.client(model)
    executor = config.executor()
    limits = config.limits()
    params = synth.GenerationParams(
        temperature=config.temperature,
        top_k=config.top_k,
        num_samples=config.k,
        max_tokens=config.max_tokens,
        seed=config.seed,
    )
    rows = []
    for lang in langs:
        problems = corpus.load_problems(path, lang=lang)
        for problem in problems:
            prompt = corpus.render_training_prompt(problem.question, lang)
            if config.assume_prefix:
                prompt += "def solver():"
            messages = [synth.ChatMessage("user", prompt)]
            completions = client.complete(messages, params)
            for index, completion in enumerate(completions):
                try:
                    program = harness.extract_program(completion, assume_prefix=config.assume_prefix)
                except harness.ExtractionError as exc:
                    outcome = harness.ExecutionOutcome("compile_error", stderr_excerpt=str(exc))
                    program = None
                else:
                    outcome = harness.execute_program(program, limits, executor)
                rows.append(
                    (
                        problem.id,
                        lang,
                        scaling.Candidate(index=index, completion=completion, outcome=outcome, program=program),
                    )
                )
    scaling.write_candidates(config.out / "candidates.jsonl", rows)
    print(f"generated {len(rows)} candidates into {config.out / 'candidates.jsonl'}")
    return 0


def _eval_records(config: RunConfig, chosen: dict[tuple[str, str], Optional[Decimal]]):
    problem_map = _load_problem_map(config)
    records = []
    for (pid, lang), value in sorted(chosen.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if pid not in problem_map:
            raise CommandError(f"candidate references unknown problem id {pid!r}")
        records.append((lang, value, problem_map[pid].gold))
    return records


def cmd_evaluate(config: RunConfig) -> int:
    cand_path = _require_artifact(config.candidates or config.out / "candidates.jsonl", "candidates", "generate")
    grouped = scaling.read_candidates(cand_path)
    chosen: dict[tuple[str, str], Optional[Decimal]] = {}
    breakdown_inputs = []
    for key, candidates in grouped.items():
        first = min(candidates, key=lambda c: c.index)
        chosen[key] = first.outcome.value
        breakdown_inputs.append((key, first.outcome))
    problem_map = _load_problem_map(config)
    records = []
    for (pid, lang), outcome in sorted(breakdown_inputs, key=lambda kv: (kv[0][1], kv[0][0])):
        if pid not in problem_map:
            raise CommandError(f"candidate references unknown problem id {pid!r}")
        records.append((lang, outcome, problem_map[pid].gold))
    report = harness.score_accuracy(records)
    (config.out / "eval_report.md").parent.mkdir(parents=True, exist_ok=True)
    (config.out / "eval_report.md").write_text(
        "# Accuracy\n\n" + reports.render_accuracy_grid([("greedy", report)]), encoding="utf-8"
    )
    reports.dump_json(reports.eval_report_to_dict(report), config.out / "eval_report.json")
    print(f"accuracy All = {report.all:.1f} over {len(records)} problems")
    return 0


def cmd_vote(config: RunConfig) -> int:
    cand_path = _require_artifact(config.candidates or config.out / "candidates.jsonl", "candidates", "generate")
    grouped = scaling.read_candidates(cand_path)
    method = config.method
    if method not in ("sc", "soft-sc"):
        raise CommandError(f"unknown voting method {method!r}; expected 'sc' or 'soft-sc'")
    if method == "soft-sc":
        quality_path = config.quality_file or config.out / "quality.jsonl"
        if not Path(quality_path).exists():
            raise CommandError(
                f"soft-sc needs quality scores ({quality_path}); run the 'quality' command first"
            )
        scores = quality.read_quality(quality_path)
        rescored = {}
        for (pid, lang), candidates in grouped.items():
            rescored[(pid, lang)] = [
                scaling.Candidate(
                    index=c.index,
                    completion=c.completion,
                    outcome=c.outcome,
                    program=c.program,
                    ice=scores.get((pid, lang, c.index), (None, False))[0],
                )
                for c in candidates
            ]
        grouped = rescored

    votes = {}
    for key, candidates in grouped.items():
        try:
            votes[key] = scaling.majority_vote(candidates) if method == "sc" else scaling.soft_vote(candidates)
        except scaling.VotingError as exc:
            raise CommandError(f"problem {key[0]!r} ({key[1]}): {exc}") from exc

    write_records(
        config.out / "votes.jsonl",
        (
            {
                "id": pid,
                "lang": lang,
                "method": vote.method,
                "chosen": str(vote.chosen) if vote.chosen is not None else None,
                "tie": vote.tie,
                "abstained": vote.abstained,
            }
            for (pid, lang), vote in sorted(votes.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ),
    )
    records = _eval_records(config, {key: vote.chosen for key, vote in votes.items()})
    report = harness.score_accuracy(records)
    (config.out / "vote_report.md").write_text(
        f"# Accuracy with {method}\n\n" + reports.render_accuracy_grid([(method, report)]), encoding="utf-8"
    )
    reports.dump_json(reports.eval_report_to_dict(report), config.out / "vote_report.json")
    print(f"{method} accuracy All = {report.all:.1f} over {len(records)} problems")
    return 0


def cmd_quality(config: RunConfig) -> int:
    cand_path = _require_artifact(config.candidates or config.out / "candidates.jsonl", "candidates", "generate")
    grouped = scaling.read_candidates(cand_path)
    problem_map = _load_problem_map(config)
    evaluator = _endpoint(config.evaluator, "evaluator")
    client = config.client(evaluator)
    items = []
    for (pid, lang), candidates in sorted(grouped.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if pid not in problem_map:
            raise CommandError(f"candidate references unknown problem id {pid!r}")
        question = problem_map[pid].question
        for cand in candidates:
            program = cand.program or cand.completion
            if not program.strip():
                continue
            items.append(quality.ScoringItem(pid, lang, cand.index, question, program))
    records = quality.score_code_quality(items, evaluator, workers=config.workers, client=client)
    quality.write_quality(config.out / "quality.jsonl", records)
    flagged = sum(1 for r in records if r.flagged)
    print(f"scored {len(records)} candidates ({flagged} flagged)")
    return 0


def _analysis_points(rows: list[dict]) -> list[tuple[str, float, float]]:
    grouped: dict[str, list[dict]] = {}
    for row in rows:
        label = f"{row.get('system', 'system')}/{row['lang']}"
        grouped.setdefault(label, []).append(row)
    points = []
    for label in sorted(grouped):
        bucket = grouped[label]
        accuracy = 100.0 * sum(1 for r in bucket if r["correct"]) / len(bucket)
        mean_ice = sum(r["ice"] for r in bucket) / len(bucket)
        points.append((label, accuracy, mean_ice))
    return points


def cmd_analyze(config: RunConfig) -> int:
    if config.joined:
        rows = [record for _, record in read_records(config.joined)]
        for row in rows:
            row["correct"] = bool(row["correct"])
            row["ice"] = int(row["ice"])
    else:
        cand_path = _require_artifact(config.candidates or config.out / "candidates.jsonl", "candidates", "generate")
        quality_path = _require_artifact(config.quality_file or config.out / "quality.jsonl", "quality scores", "quality")
        problem_map = _load_problem_map(config)
        scores = quality.read_quality(quality_path)
        rows = []
        for (pid, lang), candidates in scaling.read_candidates(cand_path).items():
            gold = problem_map[pid].gold if pid in problem_map else None
            if gold is None:
                raise CommandError(f"candidate references unknown problem id {pid!r}")
            for cand in candidates:
                if (pid, lang, cand.index) not in scores:
                    continue
                correct = cand.outcome.status == "ok" and harness.compare_answer(cand.outcome.value, gold)
                rows.append(
                    {"system": "run", "lang": lang, "id": pid, "correct": correct, "ice": scores[(pid, lang, cand.index)][0]}
                )
    if not rows:
        raise CommandError("no joined (correct, score) records to analyze")

    sample_records = [(bool(r["correct"]), int(r["ice"])) for r in rows]
    points = _analysis_points(rows)
    series = stats.PairedSeries.from_points(points)
    correlation = stats.build_correlation_report(series, sample_records)
    distribution = stats.build_distribution_table(sample_records)

    per_language: dict[str, tuple[float, float]] = {}
    by_lang: dict[str, list[dict]] = {}
    for row in rows:
        by_lang.setdefault(row["lang"], []).append(row)
    for lang in canonical_order(by_lang):
        bucket = by_lang[lang]
        pos = [r["ice"] for r in bucket if r["correct"]]
        neg = [r["ice"] for r in bucket if not r["correct"]]
        if pos and neg:
            t_stat = stats.welch_t_test(pos, neg) if min(len(pos), len(neg)) >= 2 else float("nan")
            per_language[lang] = (stats.auc_mann_whitney(pos, neg), t_stat)
    macro_auc = (
        sum(auc for auc, _ in per_language.values()) / len(per_language) if per_language else None
    )

    markdown = "# Code-quality association\n\n"
    markdown += reports.render_correlation(correlation, per_language or None, macro_auc)
    markdown += "\n" + reports.render_distribution({"pooled": distribution})
    (config.out / "analysis.md").parent.mkdir(parents=True, exist_ok=True)
    (config.out / "analysis.md").write_text(markdown, encoding="utf-8")
    payload = {
        "spearman_rho": correlation.spearman_rho,
        "auc_micro": correlation.auc,
        "auc_macro": macro_auc,
        "t_statistic": correlation.t_statistic,
        "n_points": correlation.n_points,
        "per_language": {lang: {"auc": auc, "t": t} for lang, (auc, t) in per_language.items()},
        "distribution": {"correct": list(distribution.correct), "incorrect": list(distribution.incorrect)},
    }
    reports.dump_json(payload, config.out / "analysis.json")
    (config.out / "scatter.csv").write_text(reports.scatter_csv(points), encoding="utf-8")
    print(f"rho={correlation.spearman_rho:.3f} auc={correlation.auc:.3f} t={correlation.t_statistic:.2f}")
    return 0


def cmd_report(config: RunConfig) -> int:
    if not (config.eval_inputs or config.quality_inputs or config.distribution):
        raise CommandError(
            "nothing to report; pass --eval label=path, --quality-grid label=path, or --distribution path"
        )
    sections = []
    combined: dict = {}
    if config.eval_inputs:
        rows = []
        for label, path in config.eval_inputs:
            payload = json.loads(_require_artifact(path, "evaluation report", "evaluate").read_text(encoding="utf-8"))
            report = harness.EvalReport(
                per_language=payload["per_language"],
                all=payload["all"],
                counts={k: tuple(v) for k, v in payload["counts"].items()},
                failure_breakdown=payload.get("failure_breakdown", {}),
            )
            rows.append((label, report))
        sections.append("## Accuracy\n\n" + reports.render_accuracy_grid(rows, config.langs))
        combined["accuracy"] = {label: reports.eval_report_to_dict(report) for label, report in rows}
    if config.quality_inputs:
        rows = []
        for label, path in config.quality_inputs:
            scores = quality.read_quality(_require_artifact(path, "quality scores", "quality"))
            per_lang, overall = quality.mean_scores_by_lang((lang, ice) for (_, lang, _), (ice, _) in scores.items())
            rows.append((label, per_lang, overall))
        sections.append("## Code quality\n\n" + reports.render_score_grid(rows, config.langs))
        combined["quality"] = {
            label: {"per_language": dict(per_lang), "all": overall} for label, per_lang, overall in rows
        }
    if config.distribution:
        payload = json.loads(_require_artifact(config.distribution, "analysis", "analyze").read_text(encoding="utf-8"))
        dist = stats.ScoreDistribution(
            correct=tuple(payload["distribution"]["correct"]),
            incorrect=tuple(payload["distribution"]["incorrect"]),
        )
        sections.append("## Score distribution\n\n" + reports.render_distribution({"pooled": dist}))
        combined["distribution"] = payload["distribution"]
    text = "# Results\n\n" + "\n".join(sections)
    (config.out / "report.md").parent.mkdir(parents=True, exist_ok=True)
    (config.out / "report.md").write_text(text, encoding="utf-8")
    reports.dump_json(combined, config.out / "report.json")
    print(f"wrote {config.out / 'report.md'}")
    return 0


_HANDLERS = {
    "synthesize": cmd_synthesize,
    "variant": cmd_variant,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "vote": cmd_vote,
    "quality": cmd_quality,
    "analyze": cmd_analyze,
    "report": cmd_report,
}


def run_command(name: str, config: RunConfig) -> int:
    if name not in _HANDLERS:
        raise CommandError(f"unknown command {name!r}")
    config.out.mkdir(parents=True, exist_ok=True)
    return _HANDLERS[name](config)


def _labeled(value: str) -> tuple[str, Path]:
    label, sep, path = value.partition("=")
    if not sep or not label or not path:
        raise argparse.ArgumentTypeError("expected label=path")
    return label, Path(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpot", description=__doc__)
    parser.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", type=Path, default=None)
        p.add_argument("--offline", action="store_true", default=None, help="forbid network; cache only")
        p.add_argument("--workers", type=int, default=None)
        return p

    p = add("synthesize", "synthesize solver programs for problems via the oracle endpoint")
    p.add_argument("--problems", type=Path, default=None)
    p.add_argument("--mode", dest="prompt_mode", choices=synth.PROMPT_MODES, default=None)

    p = add("variant", "derive a question/comment language variant and training records")
    p.add_argument("--samples", type=Path, default=None)
    p.add_argument("--variant", default=None, choices=sorted(corpus.VARIANTS))
    p.add_argument("--langs", default=None, help="comma-separated language subset")
    p.add_argument("--translations", type=Path, default=None)
    p.add_argument("--comments", dest="translated_comments", type=Path, default=None)

    p = add("generate", "sample candidate programs from the model endpoint and execute them")
    p.add_argument("--problems", type=Path, default=None)
    p.add_argument("--langs", default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--assume-prefix", dest="assume_prefix", action="store_true", default=None)
    p.add_argument("--runner-cmd", dest="runner_cmd", default=None, help="command for the sandbox runner")

    p = add("evaluate", "score the greedy candidate per problem against gold answers")
    p.add_argument("--problems", type=Path, default=None)
    p.add_argument("--candidates", type=Path, default=None)

    p = add("vote", "aggregate sampled candidates by majority or quality-weighted voting")
    p.add_argument("--problems", type=Path, default=None)
    p.add_argument("--candidates", type=Path, default=None)
    p.add_argument("--quality", dest="quality_file", type=Path, default=None)
    p.add_argument("--method", choices=("sc", "soft-sc"), default=None)

    p = add("quality", "rate candidate programs with the evaluator endpoint")
    p.add_argument("--problems", type=Path, default=None)
    p.add_argument("--candidates", type=Path, default=None)

    p = add("analyze", "correlate code quality with answer correctness")
    p.add_argument("--problems", type=Path, default=None)
    p.add_argument("--candidates", type=Path, default=None)
    p.add_argument("--quality", dest="quality_file", type=Path, default=None)
    p.add_argument("--joined", type=Path, default=None, help="prejoined {system?, lang, correct, ice} records")

    p = add("report", "render combined markdown grids from stored artifacts")
    p.add_argument("--eval", dest="eval_inputs", type=_labeled, action="append", default=None, metavar="LABEL=PATH")
    p.add_argument(
        "--quality-grid", dest="quality_inputs", type=_labeled, action="append", default=None, metavar="LABEL=PATH"
    )
    p.add_argument("--distribution", type=Path, default=None, help="analysis JSON with a distribution section")
    p.add_argument("--langs", default=None, help="display-language subset for grids")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.from_file(args.config)
        for key, value in vars(args).items():
            if key in ("config", "command") or value is None:
                continue
            if key == "langs" and isinstance(value, str):
                value = [lang.strip() for lang in value.split(",") if lang.strip()]
            if key == "runner_cmd" and isinstance(value, str):
                value = shlex.split(value)
            setattr(config, key, value)
        config.validate_paths()
        return run_command(args.command, config)
    except (CommandError, corpus.CorpusError, synth.TransportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
