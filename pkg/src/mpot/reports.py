"""Markdown and JSON renderers for the standard result grids.

Display values are rounded (one decimal for accuracy percentages, two for
quality scores); the JSON side keeps full precision.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .harness import EvalReport
from .langs import LANGUAGES
from .stats import CorrelationReport, ScoreDistribution


def _table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _fmt(value: Optional[float], decimals: int) -> str:
    return "-" if value is None else f"{value:.{decimals}f}"


def render_accuracy_grid(
    rows: Sequence[tuple[str, EvalReport]],
    display_languages: Optional[Sequence[str]] = None,
) -> str:
    """Method-by-language accuracy grid with the macro-mean All column.

    display_languages restricts the visible columns (summary grids show a
    language subset); All always covers every language in each report.
    """
    langs = list(display_languages) if display_languages else _union_languages(r for _, r in rows)
    header = ["Method"] + langs + ["All"]
    body = []
    for label, report in rows:
        cells = [_fmt(report.per_language.get(lang), 1) for lang in langs]
        body.append([label] + cells + [_fmt(report.all, 1)])
    return _table(header, body)


def _union_languages(reports: Iterable[EvalReport]) -> list[str]:
    present = set()
    for report in reports:
        present.update(report.per_language)
    ordered = [lang for lang in LANGUAGES if lang in present]
    return ordered + sorted(present - set(ordered))


def render_score_grid(
    rows: Sequence[tuple[str, Mapping[str, float], Optional[float]]],
    display_languages: Optional[Sequence[str]] = None,
    decimals: int = 2,
) -> str:
    """Method-by-language grid of quality-score means."""
    if display_languages:
        langs = list(display_languages)
    else:
        present = set()
        for _, per_lang, _ in rows:
            present.update(per_lang)
        langs = [lang for lang in LANGUAGES if lang in present]
        langs += sorted(present - set(langs))
    header = ["Method"] + langs + ["All"]
    body = []
    for label, per_lang, overall in rows:
        cells = [_fmt(per_lang.get(lang), decimals) for lang in langs]
        body.append([label] + cells + [_fmt(overall, decimals)])
    return _table(header, body)


def render_distribution(distributions: Mapping[str, ScoreDistribution]) -> str:
    """Score-distribution rows (percent per score) for each setting."""
    header = ["Setting", "Answer Type", "0", "1", "2", "3", "4"]
    body = []
    for setting, dist in distributions.items():
        body.append([setting, "Correct"] + [f"{v:.1f}" for v in dist.correct])
        body.append([setting, "Incorrect"] + [f"{v:.1f}" for v in dist.incorrect])
    return _table(header, body)


def render_correlation(
    report: CorrelationReport,
    per_language: Optional[Mapping[str, tuple[float, float]]] = None,
    macro_auc: Optional[float] = None,
) -> str:
    """Correlation summary plus an optional per-language AUC/t grid.

    The headline AUC pools every sample (micro); macro_auc, when given, is
    the unweighted mean of per-language AUCs. Both are labeled.
    """
    lines = [
        f"- Spearman rho (system level, n={report.n_points}): {report.spearman_rho:.4f}",
        f"- AUC (sample level, micro-pooled): {report.auc:.4f}",
    ]
    if macro_auc is not None:
        lines.append(f"- AUC (macro mean over languages): {macro_auc:.4f}")
    lines.append(f"- Welch t statistic (correct vs incorrect): {report.t_statistic:.2f}")
    text = "\n".join(lines) + "\n"
    if per_language:
        header = ["Metric"] + list(per_language)
        auc_row = ["AUC"] + [f"{auc:.4f}" for auc, _ in per_language.values()]
        t_row = ["T-Statistic"] + [f"{t:.2f}" for _, t in per_language.values()]
        text += "\n" + _table(header, [auc_row, t_row])
    return text


def eval_report_to_dict(report: EvalReport) -> dict:
    """Full-precision JSON form of an accuracy report."""
    return {
        "per_language": dict(report.per_language),
        "all": report.all,
        "counts": {lang: list(pair) for lang, pair in report.counts.items()},
        "failure_breakdown": dict(report.failure_breakdown),
    }


def dump_json(payload: dict, path) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8"
    )


def scatter_csv(points: Iterable[tuple[str, float, float]]) -> str:
    """CSV of (label, accuracy, score) points for external plotting."""
    lines = ["label,accuracy,score"]
    for label, x, y in points:
        escaped = '"' + label.replace('"', '""') + '"' if ("," in label or '"' in label) else label
        lines.append(f"{escaped},{x!r},{y!r}")
    return "\n".join(lines) + "\n"
