"""Multilingual program-of-thought toolkit.

Builds execution-verified program corpora for math word problems in ten
languages, derives question/comment language variants, evaluates generated
programs by sandboxed execution, aggregates sampled candidates by majority
or quality-weighted voting, and runs the code-quality/accuracy association
analyses.
"""

from .corpus import Corpus, PotSolution, Problem, Sample, build_variant, export_training_records, load_problems
from .harness import (
    EvalReport,
    ExecutionLimits,
    ExecutionOutcome,
    GoldAnswer,
    compare_answer,
    execute_program,
    extract_cot_answer,
    extract_program,
    score_accuracy,
)
from .langs import LANGUAGES, NO_COMMENT
from .pysrc import extract_comments, replace_comments, strip_comments, tokenize
from .quality import IceScore, parse_ice_response, render_ice_prompt, score_code_quality
from .scaling import AnswerGroup, Candidate, VoteResult, group_candidates, majority_vote, soft_vote
from .stats import (
    CorrelationReport,
    PairedSeries,
    ScoreDistribution,
    auc_mann_whitney,
    build_distribution_table,
    spearman_rho,
    welch_t_test,
)
from .synth import (
    ChatMessage,
    GenerationParams,
    OracleConfig,
    render_synthesis_prompt,
    synthesize_pot,
    translate_comments,
    verify_and_filter,
)

__version__ = "0.1.0"

__all__ = [
    "LANGUAGES",
    "NO_COMMENT",
    "Corpus",
    "Problem",
    "PotSolution",
    "Sample",
    "load_problems",
    "build_variant",
    "export_training_records",
    "tokenize",
    "strip_comments",
    "extract_comments",
    "replace_comments",
    "ExecutionLimits",
    "ExecutionOutcome",
    "GoldAnswer",
    "EvalReport",
    "extract_program",
    "execute_program",
    "extract_cot_answer",
    "compare_answer",
    "score_accuracy",
    "Candidate",
    "AnswerGroup",
    "VoteResult",
    "group_candidates",
    "majority_vote",
    "soft_vote",
    "IceScore",
    "render_ice_prompt",
    "parse_ice_response",
    "score_code_quality",
    "PairedSeries",
    "ScoreDistribution",
    "CorrelationReport",
    "spearman_rho",
    "auc_mann_whitney",
    "welch_t_test",
    "build_distribution_table",
    "ChatMessage",
    "GenerationParams",
    "OracleConfig",
    "render_synthesis_prompt",
    "synthesize_pot",
    "verify_and_filter",
    "translate_comments",
    "__version__",
]
