"""Command line entry points: eval, sweep, build-train, forge, serve.

Exit codes: 0 success, 1 usage error, 2 data error, 3 excessive backend
failures during an evaluation run.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .databuild import (
    DEFAULT_MAX_PHRASE_LEN,
    build_confidence_file,
    build_supervised_file,
    build_unsupervised_file,
)
from .backends import DEFAULT_KNOWLEDGE_CLOSE, DEFAULT_KNOWLEDGE_OPEN
from .forge import forge_dataset, write_audit
from .harness import (
    DataError,
    EvalRunConfig,
    ExcessiveFailures,
    confidence_sweep,
    eval_task,
    parse_backend_spec,
)
from .pipeline import load_episodes, write_episodes


def _backend_spec(_ctx, param, value):
    if value is None:
        return None
    try:
        parse_backend_spec(value)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param=param)
    return value


_eval_options = [
    click.option("--dataset", required=True, help="Episode JSONL file."),
    click.option("--report", required=True, help="Report JSON path (CSV written alongside)."),
    click.option(
        "--knowledge-backend", required=True, callback=_backend_spec,
        help="Backend spec: echo | template:<text> | corpus:<path> | http(s) URL.",
    ),
    click.option("--response-backend", callback=_backend_spec, help="Backend spec (see above)."),
    click.option("--shared", is_flag=True, help="Bind one backend to both steps."),
    click.option("--knowledge-open-token", default=DEFAULT_KNOWLEDGE_OPEN, show_default=True),
    click.option("--knowledge-close-token", default=DEFAULT_KNOWLEDGE_CLOSE, show_default=True),
    click.option("--confidence", type=click.IntRange(0, 10), default=None,
                 help="Fixed confidence token appended to the knowledge line."),
    click.option("--response-beam-size", type=int, default=3, show_default=True),
    click.option("--filter-beams", is_flag=True, help="Select the first beam containing the knowledge."),
    click.option("--filtered-beam-size", type=int, default=30, show_default=True),
    click.option("--rarity-cutoff", type=float, default=0.5, show_default=True,
                 help="Cumulative frequency mass marking words as frequent for rare F1."),
    click.option("--seed", type=int, default=0, envvar="K2R_SEED", show_default=True,
                 help="Run seed (falls back to K2R_SEED)."),
    click.option("--parallelism", type=int, default=1, show_default=True),
    click.option("--http-timeout", type=float, default=30.0, show_default=True),
]


def _with_eval_options(command):
    for option in reversed(_eval_options):
        command = option(command)
    return command


def _run_config(kwargs) -> EvalRunConfig:
    try:
        return EvalRunConfig(**kwargs)
    except ValueError as exc:
        raise click.UsageError(str(exc))


@click.group()
def cli() -> None:
    """Two-step knowledge-to-response pipelines: evaluate, build data, forge, serve."""


@cli.command("eval")
@_with_eval_options
def eval_command(**kwargs) -> None:
    """Evaluate a dataset and write a metric report."""
    run = _run_config(kwargs)
    report = eval_task(run)
    click.echo(f"wrote {run.report} ({len(report.per_example)} examples)")
    for name, value in sorted(report.aggregate.items()):
        click.echo(f"  {name}: {value:.4f}")


@cli.command("sweep")
@_with_eval_options
@click.option("--levels", default="0,2,6,10", show_default=True,
              help="Comma-separated confidence levels to sweep.")
def sweep_command(levels: str, **kwargs) -> None:
    """Re-run the evaluation across confidence levels."""
    run = _run_config(kwargs)
    try:
        parsed = [int(part) for part in levels.split(",") if part.strip() != ""]
    except ValueError:
        raise click.UsageError(f"levels must be integers, got {levels!r}")
    try:
        reports = confidence_sweep(run, parsed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    click.echo(f"wrote {run.report} ({len(reports)} levels)")


@cli.command("build-train")
@click.option("--dataset", required=True, help="Episode JSONL file.")
@click.option("--out", required=True, help="Training JSONL output path.")
@click.option("--mode", type=click.Choice(["supervised", "unsupervised", "confidence"]), required=True)
@click.option("--seed", type=int, default=0, envvar="K2R_SEED", show_default=True)
@click.option("--max-phrase-len", type=int, default=DEFAULT_MAX_PHRASE_LEN, show_default=True)
@click.option("--knowledge-open-token", default=DEFAULT_KNOWLEDGE_OPEN, show_default=True)
@click.option("--knowledge-close-token", default=DEFAULT_KNOWLEDGE_CLOSE, show_default=True)
def build_train_command(dataset, out, mode, seed, max_phrase_len,
                        knowledge_open_token, knowledge_close_token) -> None:
    """Build a training JSONL file from an episode dataset."""
    episodes = _load_or_fail(dataset)
    if mode == "supervised":
        stats = build_supervised_file(episodes, out, knowledge_open_token, knowledge_close_token)
    elif mode == "unsupervised":
        stats = build_unsupervised_file(
            episodes, out, seed, max_phrase_len, knowledge_open_token, knowledge_close_token
        )
    else:
        stats = build_confidence_file(episodes, out, seed, knowledge_open_token, knowledge_close_token)
    click.echo(f"wrote {out} ({stats.written} examples)")
    for reason, count in sorted(stats.skipped.items()):
        click.echo(f"  skipped {count} ({reason})")


@cli.command("forge")
@click.option("--dataset", required=True, help="Source episode JSONL file.")
@click.option("--out-episodes", required=True, help="QA episode JSONL output path.")
@click.option("--out-audit", required=True, help="Audit record JSONL output path.")
@click.option("--summarizer", required=True, callback=_backend_spec, help="Backend spec.")
@click.option("--qgen", required=True, callback=_backend_spec, help="Backend spec.")
@click.option("--qa", required=True, callback=_backend_spec, help="Backend spec.")
@click.option("--seed", type=int, default=0, envvar="K2R_SEED", show_default=True)
@click.option("--max-phrase-len", type=int, default=DEFAULT_MAX_PHRASE_LEN, show_default=True)
def forge_command(dataset, out_episodes, out_audit, summarizer, qgen, qa, seed, max_phrase_len) -> None:
    """Forge a QA dataset out of dialogue episodes."""
    episodes = _load_or_fail(dataset)
    result = forge_dataset(
        episodes,
        parse_backend_spec(summarizer),
        parse_backend_spec(qgen),
        parse_backend_spec(qa),
        seed=seed,
        max_phrase_len=max_phrase_len,
    )
    write_episodes(out_episodes, result.episodes)
    write_audit(out_audit, result.records)
    kept = sum(1 for r in result.records if r.kept)
    click.echo(f"wrote {out_episodes} ({len(result.episodes)} QA episodes)")
    click.echo(f"wrote {out_audit} ({len(result.records)} records, {kept} kept)")
    for reason, count in sorted(result.failures.items()):
        click.echo(f"  {reason}: {count}")


@cli.command("serve")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--session-log", default=None, help="Append probe traces to this JSONL file.")
def serve_command(port, host, session_log) -> None:
    """Start the HTTP pipeline service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(session_log=session_log), host=host, port=port)


def _load_or_fail(dataset: str):
    path = Path(dataset)
    if not path.exists():
        raise DataError(f"dataset not found: {path}")
    try:
        episodes = load_episodes(path)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if not episodes:
        raise DataError("empty dataset")
    return episodes


def main(argv: list[str] | None = None) -> None:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        if exc.exit_code != 0:
            sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.UsageError as exc:
        exc.show()
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except ExcessiveFailures as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
