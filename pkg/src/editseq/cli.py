"""Command-line pipeline: raw commits in, benchmark scores out.

Stages are separate subcommands connected by JSONL files, so any stage can
be rerun or swapped without touching the others. Outputs carry no
timestamps; rerunning a stage on the same input produces byte-identical
files.
"""

from __future__ import annotations

import json
import os
import sys
from collections import Counter

import click

from . import __version__
from .client import (
    CHAT,
    COMPLETION,
    EXTRACTOR_VERSION,
    Endpoint,
    EndpointConfig,
    load_predictions,
    predict_batch,
)
from .diffcore import diff_chunks
from .filtering import (
    ADDITIVE_MODES,
    LENIENT,
    FilterConfig,
    apply_filters,
)
from .formatter import (
    EditSequenceSample,
    ReconstructionMismatch,
    SentinelCollision,
    TooFewChunks,
    make_sequence_sample,
    render_task_text,
    sft_record,
)
from .ingest import (
    IngestConfig,
    IngestStats,
    LANGUAGES,
    crawl_git_repo,
    normalize_repo,
    read_commit_jsonl,
)
from .jsonlio import atomic_writer, read_jsonl, write_jsonl
from .labeler import (
    count_labels,
    label_with_endpoint,
    label_with_heuristic,
)
from .prompts import default_oneshot_demo
from .report import (
    compute_stats,
    format_report_table,
    format_stats_table,
    records_csv,
    report_csv,
    report_json,
    save_report_figures,
    save_stats_figures,
    stats_csv,
)
from .review import DEFAULT_QUOTA, ReviewSession, create_app
from .evaluator import (
    CONTEXT_LINES,
    aggregate,
    evaluate_batch,
    judge_batch,
    judge_metadata,
)


def _read_config(path: str) -> dict:
    """key=value defaults, one per line; dotted keys scope to a subcommand.

    Example:
        eval.judge_model = local-judge
        api_base = http://127.0.0.1:8199/v1
    """
    def coerce(value: str):
        low = value.lower()
        if low in ("true", "yes", "on"):
            return True
        if low in ("false", "no", "off"):
            return False
        for cast in (int, float):
            try:
                return cast(value)
            except ValueError:
                pass
        return value

    tree: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.ClickException(f"{path}:{line_no}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            node = tree
            parts = key.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part.replace("-", "_"), {})
                if not isinstance(node, dict):
                    raise click.ClickException(f"{path}:{line_no}: key conflict at {part}")
            node[parts[-1].replace("-", "_")] = coerce(value)
    return tree


def _propagate_defaults(group: click.Group, tree: dict) -> dict:
    """Unscoped keys become defaults for every subcommand; scoped keys win.

    Commands that lack a given option simply ignore the extra default, so a
    global `timeout = 30` is safe even though only the endpoint commands
    read it.
    """
    scalars = {k: v for k, v in tree.items() if not isinstance(v, dict)}
    out = dict(tree)
    for name, cmd in group.commands.items():
        scoped = out.get(name.replace("-", "_"))
        merged = dict(scalars) | (scoped if isinstance(scoped, dict) else {})
        if isinstance(cmd, click.Group):
            merged = _propagate_defaults(cmd, merged)
        out[name] = merged
    return out


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="editseq")
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="key=value file of option defaults; dotted keys scope to a subcommand.",
)
@click.pass_context
def main(ctx, config_path):
    """Turn code commits into next-edit prediction data and score models on it."""
    if config_path:
        ctx.default_map = _propagate_defaults(ctx.command, _read_config(config_path))


# -- shared option groups ----------------------------------------------------


def endpoint_options(prefix_model_env: str = "EDITSEQ_MODEL"):
    def wrap(f):
        opts = [
            click.option(
                "--api-base",
                envvar="EDITSEQ_API_BASE",
                required=True,
                help="Endpoint base URL up to /v1 (OpenAI wire format).",
            ),
            click.option("--api-key", envvar="EDITSEQ_API_KEY", default="", help="Bearer token."),
            click.option("--model", envvar=prefix_model_env, required=True),
            click.option("--mode", type=click.Choice([CHAT, COMPLETION]), default=CHAT, show_default=True),
            click.option("--max-tokens", type=int, default=512, show_default=True),
            click.option("--timeout", type=float, default=120.0, show_default=True),
            click.option("--max-retries", type=int, default=3, show_default=True),
            click.option("--concurrency", type=int, default=4, show_default=True),
            click.option("--rps", type=float, default=None, help="Max requests per second."),
        ]
        for opt in reversed(opts):
            f = opt(f)
        return f

    return wrap


def _endpoint(api_base, api_key, model, mode, max_tokens, timeout, max_retries, concurrency, rps) -> Endpoint:
    return Endpoint(
        EndpointConfig(
            base_url=api_base,
            api_key=api_key,
            model=model,
            mode=mode,
            max_tokens=max_tokens,
            timeout=timeout,
            max_retries=max_retries,
            concurrency=concurrency,
            requests_per_second=rps,
        )
    )


def _load_samples(path: str) -> list[EditSequenceSample]:
    return [EditSequenceSample.from_dict(row) for row in read_jsonl(path)]


# -- pipeline stages ---------------------------------------------------------


@main.command()
@click.option("--corpus", "corpora", multiple=True, type=click.Path(exists=True, dir_okay=False),
              help="Commit corpus JSONL (repeatable).")
@click.option("--repo", "repos", multiple=True, type=click.Path(exists=True, file_okay=False),
              help="Local git checkout to crawl (repeatable).")
@click.option("--languages", default=",".join(LANGUAGES), show_default=True,
              help="Comma-separated language allow list.")
@click.option("--exclude-repos", "exclude_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="File of repo names to drop, one per line.")
@click.option("--max-file-bytes", type=int, default=1 << 20, show_default=True)
@click.option("--output", required=True, type=click.Path(dir_okay=False))
def ingest(corpora, repos, languages, exclude_path, max_file_bytes, output):
    """Collect per-file modification records from corpora and/or git repos."""
    if not corpora and not repos:
        raise click.ClickException("need at least one --corpus or --repo")
    langs = frozenset(part.strip() for part in languages.split(",") if part.strip())
    excluded = frozenset()
    if exclude_path:
        with open(exclude_path, encoding="utf-8") as fh:
            excluded = frozenset(
                normalize_repo(line.strip()) for line in fh if line.strip()
            )
    try:
        config = IngestConfig(
            languages=langs, exclude_repos=excluded, max_file_bytes=max_file_bytes
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))

    all_samples = []
    totals = IngestStats()
    for path in corpora:
        samples, stats = read_commit_jsonl(path, config)
        all_samples.extend(samples)
        _merge_stats(totals, stats)
    for path in repos:
        samples, stats = crawl_git_repo(path, config=config)
        all_samples.extend(samples)
        _merge_stats(totals, stats)

    write_jsonl(output, (s.to_dict() for s in all_samples))
    for key, value in totals.to_dict().items():
        click.echo(f"{key}: {value}")
    click.echo(f"wrote {len(all_samples)} commit records to {output}")


def _merge_stats(into: IngestStats, other: IngestStats):
    for key, value in other.to_dict().items():
        setattr(into, key, getattr(into, key) + value)


@main.command("filter")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@click.option("--audit", "audit_path", type=click.Path(dir_okay=False), default=None,
              help="Per-commit verdict JSONL (pass/fail with rule names).")
@click.option("--min-chunks", type=int, default=2, show_default=True)
@click.option("--max-chunk-lines", type=int, default=5, show_default=True)
@click.option("--max-span-lines", type=int, default=80, show_default=True)
@click.option("--additive-mode", type=click.Choice(list(ADDITIVE_MODES)), default=LENIENT,
              show_default=True)
def filter_cmd(input_path, output, audit_path, min_chunks, max_chunk_lines, max_span_lines, additive_mode):
    """Keep commits whose edit shape suits next-edit prediction."""
    try:
        config = FilterConfig(
            min_chunks=min_chunks,
            max_chunk_lines=max_chunk_lines,
            max_span_lines=max_span_lines,
            additive_mode=additive_mode,
        )
    except ValueError as exc:
        raise click.ClickException(str(exc))
    rows = read_jsonl(input_path)
    kept = []
    audit_rows = []
    for row in rows:
        chunks = diff_chunks(row["old_contents"], row["new_contents"])
        verdict = apply_filters(chunks, config)
        audit_rows.append(
            {
                "repo_id": row.get("repo_id", ""),
                "commit_id": row.get("commit_id", ""),
                "file_path": row.get("file_path", ""),
                "language": row.get("language", ""),
                "passed": verdict.passed,
                "failed_rules": sorted(verdict.failed_rules),
                "chunk_count": verdict.chunk_count,
                "span": verdict.span,
            }
        )
        if verdict.passed:
            kept.append(row)
    write_jsonl(output, kept)
    if audit_path:
        write_jsonl(audit_path, audit_rows)
    click.echo(f"kept {len(kept)} of {len(rows)} commits -> {output}")


@main.command("format")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@click.option("--discarded", "discard_path", type=click.Path(dir_okay=False), default=None,
              help="Where to record commits that fail sample construction.")
@click.option("--tasks", "tasks_path", type=click.Path(dir_okay=False), default=None,
              help="Also write serialized task texts for every sample.")
def format_cmd(input_path, output, discard_path, tasks_path):
    """Build history/target samples from filtered commits."""
    rows = read_jsonl(input_path)
    samples = []
    discards = []
    for row in rows:
        chunks = diff_chunks(row["old_contents"], row["new_contents"])
        meta_fields = {
            "repo_id": row.get("repo_id", ""),
            "commit_id": row.get("commit_id", ""),
            "file_path": row.get("file_path", ""),
            "language": row.get("language", ""),
            "message": row.get("message", ""),
        }
        try:
            sample = make_sequence_sample(
                row["old_contents"],
                row["new_contents"],
                chunks,
                metadata=_meta(meta_fields),
            )
            render_task_text(sample)  # sentinel collision check up front
        except (ReconstructionMismatch, TooFewChunks, SentinelCollision) as exc:
            discards.append(meta_fields | {"reason": type(exc).__name__, "detail": str(exc)})
            continue
        samples.append(sample)
    write_jsonl(output, (s.to_dict() for s in samples))
    if discard_path:
        write_jsonl(discard_path, discards)
    if tasks_path:
        write_jsonl(
            tasks_path, (sft_record(s, render_task_text(s)) for s in samples)
        )
    click.echo(f"built {len(samples)} samples ({len(discards)} discarded) -> {output}")


def _meta(fields: dict):
    from .formatter import SampleMeta

    return SampleMeta(**fields)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@click.option("--labeler", "labeler_kind", type=click.Choice(["heuristic", "endpoint"]),
              default="heuristic", show_default=True)
@click.option("--tasks", "tasks_path", type=click.Path(dir_okay=False), default=None,
              help="Also write task texts for positively labeled samples.")
@click.option("--template", "template_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Replacement labeling prompt template file.")
@click.option("--api-base", envvar="EDITSEQ_API_BASE", default=None)
@click.option("--api-key", envvar="EDITSEQ_API_KEY", default="")
@click.option("--model", envvar="EDITSEQ_MODEL", default=None)
@click.option("--mode", type=click.Choice([CHAT, COMPLETION]), default=CHAT, show_default=True)
@click.option("--max-tokens", type=int, default=64, show_default=True)
@click.option("--timeout", type=float, default=120.0, show_default=True)
@click.option("--max-retries", type=int, default=3, show_default=True)
@click.option("--concurrency", type=int, default=4, show_default=True)
@click.option("--rps", type=float, default=None)
def label(input_path, output, labeler_kind, tasks_path, template_path, api_base,
          api_key, model, mode, max_tokens, timeout, max_retries, concurrency, rps):
    """Mark each sample's target edit as predictable (positive) or not."""
    samples = _load_samples(input_path)
    template = None
    if template_path:
        if labeler_kind != "endpoint":
            raise click.ClickException("--template only applies to --labeler endpoint")
        with open(template_path, encoding="utf-8") as fh:
            template = fh.read()
    if labeler_kind == "endpoint":
        if not api_base or not model:
            raise click.ClickException("--labeler endpoint needs --api-base and --model")
        endpoint = _endpoint(api_base, api_key, model, mode, max_tokens, timeout,
                             max_retries, concurrency, rps)
        records = label_with_endpoint(endpoint, samples, template=template)
    else:
        records = label_with_heuristic(samples)
    by_id = {rec.sample_id: rec for rec in records}
    out_rows = []
    for sample in samples:
        rec = by_id[sample.sample_id]
        row = sample.to_dict()
        row["label"] = rec.label
        row["label_source"] = rec.source
        if rec.source != "heuristic":
            row["label_model"] = rec.model
            row["label_prompt_version"] = rec.prompt_version
            row["label_attempts"] = rec.attempts
        out_rows.append(row)
    write_jsonl(output, out_rows)
    if tasks_path:
        positives = [
            s for s in samples if by_id[s.sample_id].label == "positive"
        ]
        write_jsonl(
            tasks_path, (sft_record(s, render_task_text(s)) for s in positives)
        )
    counts = count_labels(records)
    click.echo(
        f"labeled {counts.total}: {counts.positive} positive, "
        f"{counts.negative} negative, {counts.unparseable} unparseable -> {output}"
    )


# -- review ------------------------------------------------------------------


@main.group()
def review():
    """Curate candidate samples by hand."""


@review.command("serve")
@click.option("--candidates", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False))
@click.option("--quota", type=int, default=DEFAULT_QUOTA, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8710, show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="Static frontend to serve at /.")
def review_serve(candidates, log_path, quota, host, port, ui_dir):
    """Run the review API (plus optional bundled UI)."""
    import uvicorn

    session = ReviewSession.open(candidates, log_path, quota)
    app = create_app(session, ui_dir)
    click.echo(f"review API on http://{host}:{port}/api/items")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@review.command("export")
@click.option("--candidates", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--quota", type=int, default=DEFAULT_QUOTA, show_default=True)
@click.option("--output", required=True, type=click.Path(dir_okay=False))
def review_export(candidates, log_path, quota, output):
    """Write accepted samples, sorted by language then repo then commit."""
    session = ReviewSession.open(candidates, log_path, quota)
    accepted = session.export_accepted()
    write_jsonl(output, (s.to_dict() for s in accepted))
    if not accepted:
        click.echo("warning: no accepted samples, export is empty", err=True)
    per_language = Counter(s.metadata.language for s in accepted)
    for language in sorted(per_language):
        click.echo(f"  {language}: {per_language[language]}")
    click.echo(f"exported {len(accepted)} accepted samples -> {output}")


@review.command("progress")
@click.option("--candidates", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False))
@click.option("--quota", type=int, default=DEFAULT_QUOTA, show_default=True)
def review_progress(candidates, log_path, quota):
    """Print per-language review progress."""
    session = ReviewSession.open(candidates, log_path, quota)
    click.echo(json.dumps(session.progress(), indent=2))


# -- inference and scoring -----------------------------------------------------


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output", required=True, type=click.Path(dir_okay=False))
@click.option("--demo", "demo_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSONL whose first sample is the one-shot demonstration.")
@endpoint_options()
def infer(input_path, output, demo_path, api_base, api_key, model, mode,
          max_tokens, timeout, max_retries, concurrency, rps):
    """Ask an endpoint to predict each sample's next file version."""
    samples = _load_samples(input_path)
    if demo_path:
        demos = _load_samples(demo_path)
        if not demos:
            raise click.ClickException(f"{demo_path} holds no samples")
        demo = demos[0]
    else:
        demo = default_oneshot_demo()
    endpoint = _endpoint(api_base, api_key, model, mode, max_tokens, timeout,
                         max_retries, concurrency, rps)
    predictions = predict_batch(endpoint, samples, demo)
    write_jsonl(output, (p.to_dict() for p in predictions))
    failed = sum(1 for p in predictions if p.error)
    click.echo(f"predicted {len(predictions)} samples ({failed} failed) -> {output}")


@main.command("eval")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--predictions", "pred_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", required=True, type=click.Path(file_okay=False))
@click.option("--predictions-mode", type=click.Choice([CHAT, COMPLETION]), default=CHAT,
              show_default=True,
              help="How raw prediction rows without extracted contents were generated.")
@click.option("--content-only-chunks", is_flag=True, default=False,
              help="Match chunks by content alone, ignoring position.")
@click.option("--judge", "use_judge", is_flag=True, default=False,
              help="Also collect equivalence verdicts from a judge endpoint.")
@click.option("--api-base", envvar="EDITSEQ_API_BASE", default=None)
@click.option("--api-key", envvar="EDITSEQ_API_KEY", default="")
@click.option("--judge-model", envvar="EDITSEQ_JUDGE_MODEL", default=None)
@click.option("--mode", type=click.Choice([CHAT, COMPLETION]), default=CHAT, show_default=True)
@click.option("--timeout", type=float, default=120.0, show_default=True)
@click.option("--max-retries", type=int, default=3, show_default=True)
@click.option("--concurrency", type=int, default=4, show_default=True)
@click.option("--rps", type=float, default=None)
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render PNG charts next to the tables.")
def eval_cmd(input_path, pred_path, output_dir, predictions_mode, content_only_chunks,
             use_judge, api_base, api_key, judge_model, mode, timeout, max_retries,
             concurrency, rps, figures):
    """Score predictions and write tables, per-sample rows, and charts."""
    samples = _load_samples(input_path)
    predictions = load_predictions(pred_path, mode=predictions_mode)
    records = evaluate_batch(samples, predictions, content_only=content_only_chunks)
    if use_judge:
        if not api_base or not judge_model:
            raise click.ClickException("--judge needs --api-base and --judge-model")
        endpoint = _endpoint(api_base, api_key, judge_model, mode, 64, timeout,
                             max_retries, concurrency, rps)
        judge_batch(endpoint, samples, predictions, records)
    reports = aggregate(records)
    metadata = {
        "context_lines": CONTEXT_LINES,
        "chunk_match": "content_only" if content_only_chunks else "content_and_position",
        "extractor": EXTRACTOR_VERSION,
        "judge": judge_metadata() if use_judge else None,
    }

    os.makedirs(output_dir, exist_ok=True)
    write_jsonl(os.path.join(output_dir, "records.jsonl"), (r.to_dict() for r in records))
    with atomic_writer(os.path.join(output_dir, "records.csv")) as fh:
        fh.write(records_csv(records))
    table = format_report_table(reports)
    with atomic_writer(os.path.join(output_dir, "report.txt")) as fh:
        fh.write(table)
    with atomic_writer(os.path.join(output_dir, "report.csv")) as fh:
        fh.write(report_csv(reports))
    with atomic_writer(os.path.join(output_dir, "report.json")) as fh:
        fh.write(report_json(reports, metadata))
    if figures:
        save_report_figures(reports, output_dir)
    click.echo(table, nl=False)
    click.echo(f"wrote evaluation outputs to {output_dir}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Labeled sample JSONL.")
@click.option("--audit", "audit_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Filter audit JSONL, for pre-filter commit counts.")
@click.option("--output-dir", required=True, type=click.Path(file_okay=False))
@click.option("--figures/--no-figures", default=True, show_default=True)
def stats(input_path, audit_path, output_dir, figures):
    """Summarize labeling yield per language."""
    rows = read_jsonl(input_path)
    raw_counts = None
    if audit_path:
        raw_counts = {}
        for row in read_jsonl(audit_path):
            lang = row.get("language") or "Unknown"
            raw_counts[lang] = raw_counts.get(lang, 0) + 1
    stats_rows = compute_stats(rows, raw_counts)
    os.makedirs(output_dir, exist_ok=True)
    table = format_stats_table(stats_rows)
    with atomic_writer(os.path.join(output_dir, "stats.txt")) as fh:
        fh.write(table)
    with atomic_writer(os.path.join(output_dir, "stats.csv")) as fh:
        fh.write(stats_csv(stats_rows))
    with atomic_writer(os.path.join(output_dir, "stats.json")) as fh:
        fh.write(json.dumps([s.to_dict() for s in stats_rows], indent=2) + "\n")
    if figures:
        save_stats_figures(stats_rows, output_dir)
    click.echo(table, nl=False)
    click.echo(f"wrote stats outputs to {output_dir}")


if __name__ == "__main__":
    main(prog_name="editseq")
