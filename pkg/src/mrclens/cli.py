"""Command-line driver: truncate, perturb, predict, evaluate, report, run.

``run`` chains the whole pipeline into one output directory and is byte
deterministic: identical inputs and config give identical output trees,
regardless of worker count. The individual subcommands compose to the same
result, which is the contract for plugging in an external model (perturb,
run the model on each perturbed dataset, evaluate, report).

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .ablations import (
    ABLATIONS,
    AblationId,
    PerturbationRecord,
    TruncationRequiredError,
    apply_ablation,
    parse_records_jsonl,
    records_to_jsonl,
)
from .baseline_reader import parse_predictions, predict, serialize_predictions
from .evaluation import (
    DeltaResult,
    EvalResult,
    MissingPredictionError,
    compute_drop,
    evaluate_dataset,
)
from .report import ReportError, Thresholds, build_report, render
from .squad_io import (
    Dataset,
    DuplicateIdError,
    ParseError,
    SchemaError,
    parse_dataset,
    serialize_dataset,
    truncate_dataset,
    validate_dataset,
)

DEFAULT_SEED = 42
SEED_ENV_VAR = "MRCLENS_SEED"

_DATA_ERRORS = (
    ParseError,
    SchemaError,
    DuplicateIdError,
    TruncationRequiredError,
    MissingPredictionError,
    ReportError,
)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    dataset_path: Path
    out_dir: Path
    global_seed: int = DEFAULT_SEED
    ablations: list[AblationId] = field(default_factory=lambda: list(AblationId))
    predictions: dict[str, Path] | None = None  # None = built-in reader
    thresholds: Thresholds = field(default_factory=Thresholds)
    half: str = "first"
    workers: int = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mrclens", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("truncate", help="keep one question per paragraph")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output dataset file")

    p = sub.add_parser("perturb", help="write perturbed datasets and records")
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ablation", default=None, help="comma-separated subset of e1..e8")
    p.add_argument("--half", choices=("first", "last"), default="first")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("predict", help="built-in heuristic reader predictions")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output predictions file")

    p = sub.add_parser("evaluate", help="score a predictions file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", default=None, help="optional output JSON file")

    p = sub.add_parser("report", help="assemble report from a run directory")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--thresholds", default=None, help="SMALL,LARGE in f1 points")
    p.add_argument("--half", choices=("first", "last"), default="first")

    p = sub.add_parser("run", help="full pipeline into an output directory")
    p.add_argument("--dataset", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ablation", default=None, help="comma-separated subset of e1..e8")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--half", choices=("first", "last"), default=None)
    p.add_argument("--thresholds", default=None, help="SMALL,LARGE in f1 points")
    p.add_argument("--config", default=None, help="JSON config file; flags override")
    p.add_argument("--workers", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return _dispatch(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "truncate":
        return _cmd_truncate(args)
    if args.command == "perturb":
        return _cmd_perturb(args)
    if args.command == "predict":
        return _cmd_predict(args)
    if args.command == "evaluate":
        return _cmd_evaluate(args)
    if args.command == "report":
        return _cmd_report(args)
    return _cmd_run(args)


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------


def _read_bytes(path: Path, what: str) -> bytes:
    if not path.is_file():
        raise UsageError(f"{what} not found: {path}")
    return path.read_bytes()


def _load_dataset(path: Path, validate: bool = True) -> Dataset:
    dataset = parse_dataset(_read_bytes(path, "dataset"))
    if validate:
        violations = validate_dataset(dataset)
        if violations:
            details = "\n".join(f"  [{v.kind}] {v.question_id}: {v.message}" for v in violations)
            raise DataError(f"dataset {path} failed validation:\n{details}")
    return dataset


def _write(path: Path, content: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(content)


def _parse_ablation_list(text: str | None) -> list[AblationId]:
    if text is None:
        return list(AblationId)
    chosen = set()
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        try:
            chosen.add(AblationId(part))
        except ValueError:
            raise UsageError(f"unknown ablation {part!r}; expected e1..e8") from None
    if not chosen:
        raise UsageError("no ablations selected")
    return [a for a in AblationId if a in chosen]


def _parse_thresholds(text: str | None) -> Thresholds:
    if text is None:
        return Thresholds()
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError("--thresholds expects SMALL,LARGE")
    try:
        small, large = float(parts[0]), float(parts[1])
        return Thresholds(small, large)
    except ValueError as exc:
        raise UsageError(f"bad thresholds {text!r}: {exc}") from None


def _resolve_seed(flag_value: int | None, config_value=None) -> int:
    if flag_value is not None:
        return flag_value
    if config_value is not None:
        return int(config_value)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    return DEFAULT_SEED


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_truncate(args) -> int:
    dataset = _load_dataset(Path(args.dataset))
    truncated = truncate_dataset(dataset)
    _write(Path(args.out), serialize_dataset(truncated))
    print(
        f"kept {truncated.question_count()} questions over"
        f" {truncated.paragraph_count()} paragraphs -> {args.out}"
    )
    return 0


def _cmd_perturb(args) -> int:
    dataset = _load_dataset(Path(args.dataset))
    seed = _resolve_seed(args.seed)
    out = Path(args.out)
    for ablation in _parse_ablation_list(args.ablation):
        perturbed, records = apply_ablation(dataset, ablation, seed, args.half)
        _write(out / "perturbed" / f"{ablation.value}.json", serialize_dataset(perturbed))
        _write(out / "records" / f"{ablation.value}.jsonl", records_to_jsonl(records))
        applied = sum(1 for r in records if r.applied)
        print(f"{ablation.value}: applied {applied}/{len(records)} -> {out / 'perturbed'}")
    return 0


def _cmd_predict(args) -> int:
    dataset = _load_dataset(Path(args.dataset))
    predictions = predict(dataset)
    _write(Path(args.out), serialize_predictions(predictions))
    print(f"wrote {len(predictions)} predictions -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    dataset = _load_dataset(Path(args.dataset), validate=False)
    try:
        predictions = parse_predictions(_read_bytes(Path(args.predictions), "predictions"))
    except (json.JSONDecodeError, ValueError) as exc:
        raise DataError(f"bad predictions file {args.predictions}: {exc}") from None
    result = evaluate_dataset(dataset, predictions)
    if args.out:
        _write(Path(args.out), result.to_json())
    print(f"em {result.em:.2f} | f1 {result.f1:.2f} | questions {result.question_count}")
    return 0


def _read_eval(path: Path) -> EvalResult:
    return EvalResult.from_json(_read_bytes(path, "evaluation result"))


def _cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise UsageError(f"run directory not found: {run_dir}")
    seed = _resolve_seed(args.seed)
    thresholds = _parse_thresholds(args.thresholds)

    present = [a for a in AblationId if (run_dir / "eval" / f"{a.value}.json").is_file()]
    if not present:
        raise UsageError(f"no per-ablation eval results under {run_dir / 'eval'}")
    full_path = run_dir / "eval" / "original_full.json"
    truncated_path = run_dir / "eval" / "original_truncated.json"
    full = _read_eval(full_path) if full_path.is_file() else None
    truncated = _read_eval(truncated_path) if truncated_path.is_file() else None

    deltas: list[DeltaResult] = []
    records: dict[AblationId, list[PerturbationRecord]] = {}
    for ablation in present:
        baseline = truncated if ABLATIONS[ablation].requires_truncated else full
        if baseline is None:
            regime = "truncated" if ABLATIONS[ablation].requires_truncated else "full"
            raise UsageError(
                f"{ablation.value} needs eval/original_{regime}.json, which is missing"
            )
        deltas.append(compute_drop(baseline, _read_eval(run_dir / "eval" / f"{ablation.value}.json"), ablation))
        records_path = run_dir / "records" / f"{ablation.value}.jsonl"
        records[ablation] = (
            parse_records_jsonl(records_path.read_bytes()) if records_path.is_file() else []
        )

    report = build_report(
        deltas,
        records,
        full_baseline=full,
        truncated_baseline=truncated,
        thresholds=thresholds,
        global_seed=seed,
        half=args.half,
    )
    _write(run_dir / "report.md", render(report, "markdown"))
    _write(run_dir / "report.json", render(report, "json"))
    print(f"wrote {run_dir / 'report.md'} and {run_dir / 'report.json'}")
    return 0


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def _run_config_from_args(args) -> RunConfig:
    config = {}
    if args.config:
        raw = _read_bytes(Path(args.config), "config file")
        try:
            config = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad config file {args.config}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config file must contain a JSON object")

    dataset = args.dataset or config.get("dataset")
    if not dataset:
        raise UsageError("a dataset path is required (--dataset or config)")
    out = args.out or config.get("out")
    if not out:
        raise UsageError("an output directory is required (--out or config)")

    if args.ablation is not None:
        ablations = _parse_ablation_list(args.ablation)
    elif "ablations" in config:
        ablations = _parse_ablation_list(",".join(config["ablations"]))
    else:
        ablations = list(AblationId)

    if args.thresholds is not None:
        thresholds = _parse_thresholds(args.thresholds)
    elif "thresholds" in config:
        t = config["thresholds"]
        try:
            thresholds = Thresholds(float(t["small"]), float(t["large"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad thresholds in config: {exc}") from None
    else:
        thresholds = Thresholds()

    predictions = None
    if "predictions" in config:
        mapping = config["predictions"]
        if not isinstance(mapping, dict):
            raise UsageError("config 'predictions' must map run names to file paths")
        predictions = {name: Path(p) for name, p in mapping.items()}

    workers = args.workers if args.workers is not None else int(config.get("workers", 1))
    if workers < 1:
        raise UsageError("--workers must be >= 1")

    return RunConfig(
        dataset_path=Path(dataset),
        out_dir=Path(out),
        global_seed=_resolve_seed(args.seed, config.get("seed")),
        ablations=ablations,
        predictions=predictions,
        thresholds=thresholds,
        half=args.half or config.get("half", "first"),
        workers=workers,
    )


def _external_predictions(cfg: RunConfig, name: str) -> dict:
    path = cfg.predictions.get(name)
    if path is None:
        raise UsageError(f"config 'predictions' is missing an entry for {name!r}")
    try:
        return parse_predictions(_read_bytes(path, f"predictions for {name}"))
    except (json.JSONDecodeError, ValueError) as exc:
        raise DataError(f"bad predictions file {path}: {exc}") from None


def run_pipeline(cfg: RunConfig) -> int:
    """Execute the full pipeline; see the module docstring for the layout of
    the output directory."""
    if cfg.half not in ("first", "last"):
        raise UsageError(f"half must be 'first' or 'last', got {cfg.half!r}")
    dataset = _load_dataset(cfg.dataset_path)
    out = cfg.out_dir

    truncated = truncate_dataset(dataset)
    _write(out / "truncated.json", serialize_dataset(truncated))
    print(
        f"dataset: {dataset.question_count()} questions,"
        f" {dataset.paragraph_count()} paragraphs;"
        f" truncated: {truncated.question_count()} questions over"
        f" {truncated.paragraph_count()} retained paragraphs"
    )

    use_builtin = cfg.predictions is None

    def baseline_job(name: str, data: Dataset):
        preds = predict(data) if use_builtin else _external_predictions(cfg, name)
        return name, data, preds, evaluate_dataset(data, preds)

    def ablation_job(ablation: AblationId):
        base = truncated if ABLATIONS[ablation].requires_truncated else dataset
        perturbed, records = apply_ablation(base, ablation, cfg.global_seed, cfg.half)
        preds = predict(perturbed) if use_builtin else _external_predictions(cfg, ablation.value)
        return ablation, perturbed, records, preds, evaluate_dataset(perturbed, preds)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            base_futures = [
                pool.submit(baseline_job, "original_full", dataset),
                pool.submit(baseline_job, "original_truncated", truncated),
            ]
            ablation_futures = [pool.submit(ablation_job, a) for a in cfg.ablations]
            baseline_results = [f.result() for f in base_futures]
            ablation_results = [f.result() for f in ablation_futures]
    else:
        baseline_results = [
            baseline_job("original_full", dataset),
            baseline_job("original_truncated", truncated),
        ]
        ablation_results = [ablation_job(a) for a in cfg.ablations]

    evals: dict[str, EvalResult] = {}
    for name, _, preds, result in baseline_results:
        if use_builtin:
            _write(out / "predictions" / f"{name}.json", serialize_predictions(preds))
        _write(out / "eval" / f"{name}.json", result.to_json())
        evals[name] = result
        print(f"{name}: em {result.em:.2f} | f1 {result.f1:.2f}")

    deltas: list[DeltaResult] = []
    records_by_ablation: dict[AblationId, list[PerturbationRecord]] = {}
    for ablation, perturbed, records, preds, result in ablation_results:
        name = ablation.value
        _write(out / "perturbed" / f"{name}.json", serialize_dataset(perturbed))
        _write(out / "records" / f"{name}.jsonl", records_to_jsonl(records))
        if use_builtin:
            _write(out / "predictions" / f"{name}.json", serialize_predictions(preds))
        _write(out / "eval" / f"{name}.json", result.to_json())
        baseline = (
            evals["original_truncated"]
            if ABLATIONS[ablation].requires_truncated
            else evals["original_full"]
        )
        deltas.append(compute_drop(baseline, result, ablation))
        records_by_ablation[ablation] = records
        print(f"{name}: em {result.em:.2f} | f1 {result.f1:.2f} | drop {baseline.f1 - result.f1:.2f}")

    report = build_report(
        deltas,
        records_by_ablation,
        full_baseline=evals["original_full"],
        truncated_baseline=evals["original_truncated"],
        thresholds=cfg.thresholds,
        global_seed=cfg.global_seed,
        half=cfg.half,
    )
    _write(out / "report.md", render(report, "markdown"))
    _write(out / "report.json", render(report, "json"))
    print(f"report: {out / 'report.md'}")
    return 0


def _cmd_run(args) -> int:
    return run_pipeline(_run_config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
