"""Assemble per-ablation drops into a bias report with interpretation.

A small F1 drop means the model still answers without the ablated
information — evidence that the bias suffices. A large drop means the
information was genuinely needed. The small/large cutoffs are explicit,
configurable thresholds carried in the report itself; they are a heuristic
reading aid, not ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .ablations import ABLATIONS, AblationId, PerturbationRecord
from .evaluation import DeltaResult, EvalResult

TOOLKIT_VERSION = "0.1.0"

ABLATION_LABELS: dict[AblationId, str] = {
    AblationId.E1: "insert full question",
    AblationId.E2: "insert half question",
    AblationId.E3: "shuffle sentence order",
    AblationId.E4: "interrogative words only",
    AblationId.E5: "shuffle question words",
    AblationId.E6: "insert key nouns",
    AblationId.E7: "insert key verbs",
    AblationId.E8: "insert key adjectives",
}

_CATEGORY_TITLES = {
    "similarity": "Similarity bias",
    "question": "Question bias",
    "keyword": "Keyword bias",
}


class Interpretation(Enum):
    BIAS_LIKELY_EXPLOITED = "bias_likely_exploited"
    INCONCLUSIVE = "inconclusive"
    INFORMATION_REQUIRED = "information_required"


_INTERPRETATION_TEXT = {
    Interpretation.BIAS_LIKELY_EXPLOITED: "bias likely exploited",
    Interpretation.INCONCLUSIVE: "inconclusive",
    Interpretation.INFORMATION_REQUIRED: "information required",
}


@dataclass(frozen=True)
class Thresholds:
    """F1-point cutoffs: drop < small flags the bias as likely exploited,
    drop > large flags the ablated information as required."""

    small: float = 10.0
    large: float = 25.0

    def __post_init__(self):
        if not self.small < self.large:
            raise ValueError("thresholds must satisfy small < large")


class ReportError(ValueError):
    """Inconsistent report inputs (e.g. a drop paired with the wrong baseline)."""


def interpret(f1_drop: float, thresholds: Thresholds) -> Interpretation:
    """Label a drop; monotone in ``f1_drop`` for fixed thresholds."""
    if f1_drop < thresholds.small:
        return Interpretation.BIAS_LIKELY_EXPLOITED
    if f1_drop > thresholds.large:
        return Interpretation.INFORMATION_REQUIRED
    return Interpretation.INCONCLUSIVE


@dataclass
class BaselineSummary:
    em: float
    f1: float
    question_count: int


@dataclass
class ReportRow:
    ablation: AblationId
    category: str
    em: float
    f1: float
    f1_drop: float
    question_count: int
    skipped_count: int
    interpretation: Interpretation


@dataclass
class BiasReport:
    toolkit_version: str
    global_seed: int
    thresholds: Thresholds
    baselines: dict[str, BaselineSummary | None]  # keys: "full", "truncated"
    rows: list[ReportRow]
    # Fixed surgery conventions, recorded so results stay comparable:
    # payloads are prepended before the target sentence, and which half of
    # the question e2 keeps is a run setting.
    conventions: dict[str, str] = field(default_factory=dict)


def _summary(result: EvalResult | None) -> BaselineSummary | None:
    if result is None:
        return None
    return BaselineSummary(round(result.em, 2), round(result.f1, 2), result.question_count)


def build_report(
    deltas: list[DeltaResult],
    records: dict[AblationId, list[PerturbationRecord]],
    *,
    full_baseline: EvalResult | None,
    truncated_baseline: EvalResult | None,
    thresholds: Thresholds,
    global_seed: int,
    half: str = "first",
) -> BiasReport:
    """Build the report from per-ablation drops and audit records.

    Rows are ordered e1..e8 (restricted to the ablations present) and all
    displayed numbers are rounded to 2 decimals, so the markdown and JSON
    renderings carry identical values. Raises :class:`ReportError` when a
    drop was computed against a baseline that does not match its regime.
    """
    by_id = {d.ablation: d for d in deltas}
    if len(by_id) != len(deltas):
        raise ReportError("more than one delta for the same ablation")

    rows: list[ReportRow] = []
    for ablation in AblationId:
        if ablation not in by_id:
            continue
        delta = by_id[ablation]
        spec = ABLATIONS[ablation]
        expected = truncated_baseline if spec.requires_truncated else full_baseline
        regime = "truncated" if spec.requires_truncated else "full"
        if expected is None:
            raise ReportError(f"{ablation.value} needs the {regime} baseline, none given")
        if abs(delta.baseline_f1 - expected.f1) > 1e-9:
            raise ReportError(
                f"{ablation.value} was paired with baseline f1 {delta.baseline_f1:.4f},"
                f" expected the {regime} baseline {expected.f1:.4f}"
            )
        ablation_records = records.get(ablation, [])
        skipped = sum(1 for r in ablation_records if r.skip_reason is not None)
        drop = round(delta.f1_drop, 2)
        rows.append(
            ReportRow(
                ablation=ablation,
                category=spec.category.value,
                em=round(delta.em, 2),
                f1=round(delta.f1, 2),
                f1_drop=drop,
                question_count=len(ablation_records),
                skipped_count=skipped,
                interpretation=interpret(drop, thresholds),
            )
        )

    return BiasReport(
        toolkit_version=TOOLKIT_VERSION,
        global_seed=global_seed,
        thresholds=thresholds,
        baselines={"full": _summary(full_baseline), "truncated": _summary(truncated_baseline)},
        rows=rows,
        conventions={"insertion_position": "prepend", "half_question": half},
    )


def render(report: BiasReport, format: str) -> bytes:
    """Render as ``markdown`` (three category tables) or ``json`` (canonical,
    reparseable with :func:`parse_report`). Both are byte-deterministic."""
    if format == "markdown":
        return _render_markdown(report)
    if format == "json":
        return _render_json(report)
    raise ValueError(f"unknown report format: {format!r}")


def _render_markdown(report: BiasReport) -> bytes:
    lines = ["# Dataset bias report", ""]
    lines.append(f"- toolkit version: {report.toolkit_version}")
    lines.append(f"- seed: {report.global_seed}")
    lines.append(
        f"- thresholds (f1 points): small < {report.thresholds.small:g},"
        f" large > {report.thresholds.large:g}"
    )
    for name in ("full", "truncated"):
        summary = report.baselines.get(name)
        if summary is None:
            lines.append(f"- {name} baseline: not computed")
        else:
            lines.append(
                f"- {name} baseline: em {summary.em:.2f} | f1 {summary.f1:.2f}"
                f" | questions {summary.question_count}"
            )
    for key, value in sorted(report.conventions.items()):
        lines.append(f"- {key.replace('_', ' ')}: {value}")

    for category in ("similarity", "question", "keyword"):
        rows = [r for r in report.rows if r.category == category]
        lines.append("")
        lines.append(f"## {_CATEGORY_TITLES[category]}")
        lines.append("")
        lines.append("| ablation | em | f1 | f1 drop | questions | skipped | interpretation |")
        lines.append("| --- | --- | --- | --- | --- | --- | --- |")
        for row in rows:
            label = f"{row.ablation.value} {ABLATION_LABELS[row.ablation]}"
            lines.append(
                f"| {label} | {row.em:.2f} | {row.f1:.2f} | {row.f1_drop:.2f}"
                f" | {row.question_count} | {row.skipped_count}"
                f" | {_INTERPRETATION_TEXT[row.interpretation]} |"
            )
    lines.append("")
    return "\n".join(lines).encode("utf-8")


def _render_json(report: BiasReport) -> bytes:
    payload = {
        "toolkit_version": report.toolkit_version,
        "global_seed": report.global_seed,
        "thresholds": {"small": report.thresholds.small, "large": report.thresholds.large},
        "baselines": {
            name: (
                {"em": s.em, "f1": s.f1, "n": s.question_count} if s is not None else None
            )
            for name, s in report.baselines.items()
        },
        "conventions": dict(sorted(report.conventions.items())),
        "rows": [
            {
                "ablation": row.ablation.value,
                "label": ABLATION_LABELS[row.ablation],
                "category": row.category,
                "em": row.em,
                "f1": row.f1,
                "f1_drop": row.f1_drop,
                "n": row.question_count,
                "skipped": row.skipped_count,
                "interpretation": row.interpretation.value,
            }
            for row in report.rows
        ],
    }
    return json.dumps(payload, ensure_ascii=False, indent=2).encode("utf-8") + b"\n"


def parse_report(raw: bytes) -> BiasReport:
    """Rebuild a :class:`BiasReport` from its JSON rendering."""
    obj = json.loads(raw.decode("utf-8"))
    return BiasReport(
        toolkit_version=obj["toolkit_version"],
        global_seed=obj["global_seed"],
        thresholds=Thresholds(obj["thresholds"]["small"], obj["thresholds"]["large"]),
        baselines={
            name: (BaselineSummary(s["em"], s["f1"], s["n"]) if s is not None else None)
            for name, s in obj["baselines"].items()
        },
        conventions=obj["conventions"],
        rows=[
            ReportRow(
                ablation=AblationId(r["ablation"]),
                category=r["category"],
                em=r["em"],
                f1=r["f1"],
                f1_drop=r["f1_drop"],
                question_count=r["n"],
                skipped_count=r["skipped"],
                interpretation=Interpretation(r["interpretation"]),
            )
            for r in obj["rows"]
        ],
    )
