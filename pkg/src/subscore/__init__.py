"""Workbench for subtrait-level automated writing evaluation.

Modules: ``rubric`` (skills tree), ``corpus`` (items/responses/reads),
``store`` (on-disk persistence), ``gateway`` (chat-completion access),
``scoring`` (prompt/parse/ground pipeline), ``metrics`` (agreement and
consistency statistics), ``evidence`` (span overlap), ``reporting``
(deterministic report bundles), ``service`` (HTTP API), ``cli``.
"""

from .corpus import (
    Corpus,
    EvidenceSpan,
    HumanRead,
    IngestError,
    ItemPrompt,
    StudentResponse,
    ingest_corpus,
)
from .metrics import (
    classification_report,
    exact_agreement,
    krippendorff_alpha_ordinal,
    pairwise_run_deviation,
    pearson_r,
    qwk,
    trait_subtrait_correlation,
    true_score,
)
from .rubric import RubricError, ScoreScale, SkillTree, load_skill_tree, validate_tree
from .scoring import ScoringRun, build_prompt, ground_quote, parse_model_output, score_batch

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "EvidenceSpan",
    "HumanRead",
    "IngestError",
    "ItemPrompt",
    "RubricError",
    "ScoreScale",
    "ScoringRun",
    "SkillTree",
    "StudentResponse",
    "build_prompt",
    "classification_report",
    "exact_agreement",
    "ground_quote",
    "ingest_corpus",
    "krippendorff_alpha_ordinal",
    "load_skill_tree",
    "pairwise_run_deviation",
    "parse_model_output",
    "pearson_r",
    "qwk",
    "score_batch",
    "trait_subtrait_correlation",
    "true_score",
    "validate_tree",
]
