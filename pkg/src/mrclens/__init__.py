"""Bias diagnostics for SQuAD-format reading-comprehension datasets.

Perturbs a dataset in eight seeded, offset-preserving ways (question
insertion, sentence shuffling, question rewrites, keyword insertion),
evaluates a model on the original and perturbed data, and reports the
per-ablation F1 drops with an interpretation. Models plug in through a
predictions file; a built-in heuristic reader covers offline runs.
"""

__version__ = "0.1.0"

from .ablations import (
    ABLATIONS,
    AblationId,
    AblationSpec,
    BiasCategory,
    PerturbationRecord,
    SkipReason,
    TruncationRequiredError,
    apply_ablation,
)
from .baseline_reader import Predictions, predict
from .evaluation import (
    DeltaResult,
    EvalResult,
    MissingPredictionError,
    compute_drop,
    evaluate_dataset,
    exact_match,
    token_f1,
)
from .report import BiasReport, Interpretation, Thresholds, build_report, render
from .squad_io import (
    Answer,
    Article,
    Dataset,
    DuplicateIdError,
    Paragraph,
    ParseError,
    QA,
    SchemaError,
    Violation,
    parse_dataset,
    serialize_dataset,
    truncate_dataset,
    validate_dataset,
)

__all__ = [
    "__version__",
    "ABLATIONS",
    "AblationId",
    "AblationSpec",
    "Answer",
    "Article",
    "BiasCategory",
    "BiasReport",
    "Dataset",
    "DeltaResult",
    "DuplicateIdError",
    "EvalResult",
    "Interpretation",
    "MissingPredictionError",
    "Paragraph",
    "ParseError",
    "PerturbationRecord",
    "Predictions",
    "QA",
    "SchemaError",
    "SkipReason",
    "Thresholds",
    "TruncationRequiredError",
    "Violation",
    "apply_ablation",
    "build_report",
    "compute_drop",
    "evaluate_dataset",
    "exact_match",
    "parse_dataset",
    "predict",
    "render",
    "serialize_dataset",
    "token_f1",
    "truncate_dataset",
    "validate_dataset",
]
