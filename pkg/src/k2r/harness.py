"""Evaluation runs: dataset in, metric report out, plus confidence sweeps.

A run binds a dataset to a pipeline configuration, evaluates every episode,
and writes a JSON report (with a config echo so every number is reproducible
from the report alone) plus a CSV of per-example rows. Runs are deterministic
for a fixed seed: per-example seeds derive from (seed, example_id) and results
are merged in example_id order regardless of parallelism.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .backends import BackendDescriptor, DEFAULT_KNOWLEDGE_CLOSE, DEFAULT_KNOWLEDGE_OPEN
from .metrics import METRIC_COLUMNS, MetricReport, build_rarity_table, build_report
from .pipeline import (
    DialogueEpisode,
    K2RConfig,
    PipelineStepError,
    load_episodes,
    run_episode,
)

FAILURE_TOLERANCE = 0.10


class DataError(Exception):
    """The dataset is missing, empty, or malformed (CLI exit code 2)."""


class ExcessiveFailures(Exception):
    """More than FAILURE_TOLERANCE of examples hit backend errors (CLI exit code 3)."""

    def __init__(self, failed: int, total: int):
        super().__init__(f"{failed}/{total} examples failed; tolerance is {FAILURE_TOLERANCE:.0%}")
        self.failed = failed
        self.total = total


def parse_backend_spec(spec: str, http_timeout: float = 30.0) -> BackendDescriptor:
    """Parse a CLI backend spec string into a descriptor.

    Accepted forms: "echo", "template:<template text>", "corpus:<path>", and
    a plain http(s) URL for the wire backend.
    """
    if spec == "echo":
        return BackendDescriptor("echo")
    if spec.startswith("template:"):
        return BackendDescriptor("template", {"template": spec[len("template:") :]})
    if spec.startswith("corpus:"):
        return BackendDescriptor("corpus-lookup", {"path": spec[len("corpus:") :]})
    if spec.startswith(("http://", "https://")):
        return BackendDescriptor("http", {"endpoint": spec, "timeout": http_timeout})
    raise ValueError(
        f"unrecognized backend spec {spec!r}; expected echo, template:..., corpus:..., or an http(s) URL"
    )


@dataclass(frozen=True)
class EvalRunConfig:
    """One evaluation run, expressed in CLI-level terms (backend spec strings)."""

    dataset: str
    report: str
    knowledge_backend: str
    response_backend: str | None = None
    shared: bool = False
    knowledge_open_token: str = DEFAULT_KNOWLEDGE_OPEN
    knowledge_close_token: str = DEFAULT_KNOWLEDGE_CLOSE
    confidence: int | None = None
    response_beam_size: int = 3
    filter_beams: bool = False
    filtered_beam_size: int = 30
    rarity_cutoff: float = 0.5
    seed: int = 0
    parallelism: int = 1
    http_timeout: float = 30.0

    def to_pipeline_config(self) -> K2RConfig:
        knowledge = parse_backend_spec(self.knowledge_backend, self.http_timeout)
        response = (
            parse_backend_spec(self.response_backend, self.http_timeout)
            if self.response_backend is not None
            else None
        )
        return K2RConfig(
            knowledge_backend=knowledge,
            response_backend=response,
            shared=self.shared,
            knowledge_open_token=self.knowledge_open_token,
            knowledge_close_token=self.knowledge_close_token,
            confidence=self.confidence,
            response_beam_size=self.response_beam_size,
            filter_beams=self.filter_beams,
            filtered_beam_size=self.filtered_beam_size,
        )

    def echo(self) -> dict:
        return dataclasses.asdict(self)


def _load_dataset(run: EvalRunConfig) -> list[DialogueEpisode]:
    path = Path(run.dataset)
    if not path.exists():
        raise DataError(f"dataset not found: {path}")
    try:
        episodes = load_episodes(path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if not episodes:
        raise DataError("empty dataset")
    return episodes


def eval_task(run: EvalRunConfig) -> MetricReport:
    """Evaluate the whole dataset and write the JSON report and per-example CSV.

    Backend failures on individual examples are recorded in the report and the
    run continues; ExcessiveFailures is raised (after writing) when more than
    10% of examples failed.
    """
    episodes = _load_dataset(run)
    config = run.to_pipeline_config()
    references = [ep.gold_response for ep in episodes if ep.gold_response is not None]
    rarity = build_rarity_table(references, run.rarity_cutoff) if references else None

    rows: list[dict] = []
    failures: list[dict] = []

    def evaluate(episode: DialogueEpisode) -> tuple[str, dict | None, dict | None]:
        try:
            _, row = run_episode(config, episode, run.seed, rarity=rarity)
            return episode.example_id, row, None
        except PipelineStepError as exc:
            return episode.example_id, None, {
                "example_id": episode.example_id,
                "step": exc.step,
                "error": str(exc.cause),
            }

    if run.parallelism > 1:
        with ThreadPoolExecutor(max_workers=run.parallelism) as pool:
            outcomes = list(pool.map(evaluate, episodes))
    else:
        outcomes = [evaluate(ep) for ep in episodes]
    for _, row, failure in sorted(outcomes, key=lambda o: o[0]):
        if row is not None:
            rows.append(row)
        else:
            failures.append(failure)

    report = build_report(rows)
    _write_report(run, report, failures, total=len(episodes))
    if len(failures) / len(episodes) > FAILURE_TOLERANCE:
        raise ExcessiveFailures(len(failures), len(episodes))
    return report


def _write_report(run: EvalRunConfig, report: MetricReport, failures: list[dict], total: int) -> None:
    payload = {
        "config": run.echo(),
        "examples": {"total": total, "evaluated": len(report.per_example), "failed": len(failures)},
        "aggregate": report.aggregate,
        "counts": report.counts,
        "failures": failures,
        "per_example": report.per_example,
    }
    report_path = Path(run.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    with open(report_path.with_suffix(".csv"), "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("example_id",) + METRIC_COLUMNS)
        for row in report.per_example:
            writer.writerow(
                [row["example_id"]] + [repr(row[c]) if c in row else "" for c in METRIC_COLUMNS]
            )


def _level_report_path(base: str, level: int) -> str:
    path = Path(base)
    return str(path.with_name(f"{path.stem}-conf{level}{path.suffix or '.json'}"))


def confidence_sweep(run: EvalRunConfig, levels: list[int]) -> dict[int, MetricReport]:
    """Re-run the evaluation once per confidence level and write a combined table.

    Each level gets its own full report (path suffixed -conf<level>); the
    combined file at run.report maps level -> aggregate metrics.
    """
    if not levels:
        raise ValueError("no confidence levels given")
    for level in levels:
        if not 0 <= level <= 10:
            raise ValueError(f"confidence level must be in [0, 10], got {level}")
    reports: dict[int, MetricReport] = {}
    for level in levels:
        sub_run = dataclasses.replace(
            run, confidence=level, report=_level_report_path(run.report, level)
        )
        reports[level] = eval_task(sub_run)
    combined = {
        "config": run.echo(),
        "levels": {str(level): reports[level].aggregate for level in levels},
    }
    report_path = Path(run.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(
        json.dumps(combined, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return reports
