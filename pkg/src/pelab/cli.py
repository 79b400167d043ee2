"""pe: one executable for the whole pipeline.

ingest -> postedit/translate -> eval -> report -> err. Stages communicate
only via files (JSONL/TSV), so runs are resumable and external scorers can
plug in. Exit codes: 0 success, 1 usage, 2 data error, 3 provider/transport.
"""

from __future__ import annotations

import hashlib
import json
import os
from datetime import datetime, timezone
from pathlib import Path

import click

from . import err as err_mod
from .corpus import (
    LangPair,
    Segment,
    filter_major,
    load_segments,
    parse_mqm_tsv,
    write_segments,
)
from .errors import (
    DataError,
    ParseError,
    PeError,
    ProviderError,
    StartupError,
    TransportError,
)
from .jsonl import atomic_write_text, read_records, write_records
from .llm_client import (
    CompletionRequest,
    LlmClient,
    MockProvider,
    OpenAIProvider,
    echo_response,
)
from .metrics import (
    adherence_report,
    gain_histogram,
    histogram_tsv,
    load_external_scores,
)
from .prompting import (
    DEFAULT_PROMPT_VERSION,
    DecodingParams,
    Mode,
    PostEditResult,
    ZeroShotTranslation,
    build_postedit_prompt,
    build_zeroshot_prompt,
    load_template,
    parse_postedit_output,
)
from .report import render_adherence_table, render_e3s_table, render_quality_table
from .spanedit import e3s_score


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _run_id(corpus_digest: str, model: str, mode: str, prompt_version: str, params: DecodingParams) -> str:
    canonical = json.dumps(
        {
            "corpus": corpus_digest,
            "model": model,
            "mode": mode,
            "prompt_version": prompt_version,
            "params": params.to_record(),
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _resolve_cache_dir(ctx: click.Context) -> str:
    return ctx.obj["cache_dir"] or os.environ.get("PE_CACHE_DIR") or ".pe_cache"


def _make_provider(name: str, cache_dir: str, mock_responses: str | None = None):
    if name == "mock":
        log_path = Path(cache_dir) / "mock_calls.log"
        log_path.parent.mkdir(parents=True, exist_ok=True)
        canned = None
        if mock_responses:
            canned = json.loads(Path(mock_responses).read_text(encoding="utf-8"))
        return MockProvider(canned=canned, default=echo_response, log_path=log_path)
    return OpenAIProvider()


def _load_corpus(path: str, fmt: str, lang: str | None, system: str) -> list[Segment]:
    pair = LangPair.parse(lang) if lang else None
    if fmt == "tsv" and pair is None:
        raise click.UsageError("--lang is required for tsv corpora")
    return load_segments(path, fmt, pair, system)


def _read_results(path: str) -> list[PostEditResult]:
    return [PostEditResult.from_record(record) for _, record in read_records(path)]


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write_text(out, text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--cache-dir", default=None, help="Response cache directory ($PE_CACHE_DIR or .pe_cache).")
@click.option("--seed", default=0, show_default=True, type=int, help="Default sampling seed.")
@click.option(
    "--format",
    "out_format",
    type=click.Choice(["text", "tsv"]),
    default="text",
    show_default=True,
    help="Report output format.",
)
@click.pass_context
def pe(ctx: click.Context, cache_dir: str | None, seed: int, out_format: str):
    """Post-editing lab: run LLM post-editing and evaluate the results."""
    ctx.obj = {"cache_dir": cache_dir, "seed": seed, "format": out_format}


# --------------------------------------------------------------------------
# ingest


@pe.group()
def ingest():
    """Convert raw corpora and span annotations into canonical JSONL."""


@ingest.command("segments")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.argument("output", type=click.Path(dir_okay=False))
@click.option("--fmt", type=click.Choice(["tsv", "jsonl"]), default="tsv", show_default=True)
@click.option("--lang", default=None, help="Language pair, e.g. en-de.")
@click.option("--system", "system_name", required=True)
def ingest_segments(input: str, output: str, fmt: str, lang: str | None, system_name: str):
    """Load a corpus file and write canonical segments JSONL."""
    segments = _load_corpus(input, fmt, lang, system_name)
    write_segments(output, segments)
    click.echo(f"ingested {len(segments)} segments -> {output}")


@ingest.command("mqm")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--lang", required=True, help="Language pair of the annotated outputs.")
@click.option("--segments-out", required=True, type=click.Path(dir_okay=False))
@click.option("--spans-out", required=True, type=click.Path(dir_okay=False))
@click.option("--major-only", is_flag=True, help="Keep only Major-severity spans.")
def ingest_mqm(input: str, lang: str, segments_out: str, spans_out: str, major_only: bool):
    """Parse an error-span TSV into segments JSONL + spans JSONL."""
    entries = parse_mqm_tsv(input, LangPair.parse(lang))
    segments = [segment for segment, _ in entries]
    write_segments(segments_out, segments)
    span_records = []
    for _, spans in entries:
        if major_only:
            spans = filter_major(list(spans))
        for span in spans:
            span_records.append(
                {
                    "segment_id": span.segment_id,
                    "start": span.start,
                    "end": span.end,
                    "severity": span.severity.value,
                    "category": span.category,
                    "rater": span.rater,
                }
            )
    write_records(spans_out, span_records)
    click.echo(
        f"ingested {len(segments)} segments and {len(span_records)} spans "
        f"-> {segments_out}, {spans_out}"
    )


# --------------------------------------------------------------------------
# prompts


@pe.group()
def prompts():
    """Inspect the prompt templates."""


@prompts.command("show")
@click.option("--mode", type=click.Choice(["cot", "direct", "zeroshot"]), default=None)
@click.option("--version", "prompt_version", default=DEFAULT_PROMPT_VERSION, show_default=True)
def prompts_show(mode: str | None, prompt_version: str):
    """Print the active prompt templates."""
    modes = [mode] if mode else ["cot", "direct", "zeroshot"]
    for mode_value in modes:
        for role in ("system", "user"):
            click.echo(f"--- {prompt_version}/{mode_value}.{role} ---")
            click.echo(load_template(prompt_version, mode_value, role))
            click.echo()


# --------------------------------------------------------------------------
# postedit / translate


def _corpus_options(command):
    decorators = [
        click.option("--fmt", type=click.Choice(["tsv", "jsonl"]), default="jsonl", show_default=True),
        click.option("--lang", default=None, help="Language pair for corpora without one."),
        click.option("--system", "system_name", default="corpus", show_default=True),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


@pe.command()
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@_corpus_options
@click.option("--mode", type=click.Choice(["cot", "direct"]), default="cot", show_default=True)
@click.option("--model", required=True)
@click.option("--provider", type=click.Choice(["mock", "openai"]), default="openai", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--max-inflight", default=4, show_default=True, type=click.IntRange(min=1))
@click.option("--prompt-version", default=DEFAULT_PROMPT_VERSION, show_default=True)
@click.option("--max-tokens", default=1024, show_default=True, type=click.IntRange(min=1))
@click.option(
    "--mock-responses",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON map of request digest to canned mock output.",
)
@click.pass_context
def postedit(
    ctx: click.Context,
    corpus: str,
    fmt: str,
    lang: str | None,
    system_name: str,
    mode: str,
    model: str,
    provider: str,
    out: str,
    max_inflight: int,
    prompt_version: str,
    max_tokens: int,
    mock_responses: str | None,
):
    """Post-edit every segment of a corpus; write results JSONL + manifest."""
    cache_dir = _resolve_cache_dir(ctx)
    segments = _load_corpus(corpus, fmt, lang, system_name)
    provider_impl = _make_provider(provider, cache_dir, mock_responses)
    client = LlmClient(provider_impl, cache_dir=cache_dir)
    params = DecodingParams(max_tokens=max_tokens)
    mode_enum = Mode(mode)
    started_at = _utc_now()

    if not segments:
        click.echo("warning: empty corpus, writing empty results", err=True)
    requests = [
        CompletionRequest(model, build_postedit_prompt(segment, mode_enum, prompt_version), params)
        for segment in segments
    ]
    outcomes = client.batch_complete(requests, max_inflight) if requests else []

    results: list[PostEditResult] = []
    failures = 0
    for segment, outcome in zip(segments, outcomes):
        created = _utc_now()
        if isinstance(outcome, PeError):
            failures += 1
            results.append(
                PostEditResult(
                    segment.id, mode_enum, "", (), "", model, params, prompt_version, created,
                    error=f"provider: {outcome}",
                )
            )
            continue
        try:
            edits, improved = parse_postedit_output(outcome.text, mode_enum)
        except ParseError as exc:
            failures += 1
            results.append(
                PostEditResult(
                    segment.id, mode_enum, outcome.text, (), "", model, params, prompt_version,
                    created, error=str(exc),
                )
            )
            continue
        results.append(
            PostEditResult(
                segment.id, mode_enum, outcome.text, tuple(edits), improved, model, params,
                prompt_version, created,
            )
        )
    write_records(out, (result.to_record() for result in results))

    corpus_digest = _file_digest(corpus)
    manifest = {
        "run_id": _run_id(corpus_digest, model, mode, prompt_version, params),
        "corpus": {"path": str(corpus), "sha256": corpus_digest},
        "model": model,
        "mode": mode,
        "prompt_version": prompt_version,
        "params": params.to_record(),
        "started_at": started_at,
        "finished_at": _utc_now(),
        "counts": {
            "segments": len(segments),
            "successes": len(segments) - failures,
            "parse_failures": failures,
        },
    }
    manifest_path = f"{out}.manifest.json"
    atomic_write_text(manifest_path, json.dumps(manifest, ensure_ascii=False, indent=2) + "\n")
    click.echo(
        f"postedit: {len(segments)} segments, {len(segments) - failures} ok, "
        f"{failures} failures -> {out}"
    )


@pe.command()
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@_corpus_options
@click.option("--model", required=True)
@click.option("--provider", type=click.Choice(["mock", "openai"]), default="openai", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--max-inflight", default=4, show_default=True, type=click.IntRange(min=1))
@click.option("--prompt-version", default=DEFAULT_PROMPT_VERSION, show_default=True)
@click.option("--max-tokens", default=1024, show_default=True, type=click.IntRange(min=1))
@click.option(
    "--mock-responses",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON map of request digest to canned mock output.",
)
@click.pass_context
def translate(
    ctx: click.Context,
    corpus: str,
    fmt: str,
    lang: str | None,
    system_name: str,
    model: str,
    provider: str,
    out: str,
    max_inflight: int,
    prompt_version: str,
    max_tokens: int,
    mock_responses: str | None,
):
    """Translate every source from scratch (never shows the model the
    initial translation); write zero-shot JSONL."""
    cache_dir = _resolve_cache_dir(ctx)
    segments = _load_corpus(corpus, fmt, lang, system_name)
    provider_impl = _make_provider(provider, cache_dir, mock_responses)
    client = LlmClient(provider_impl, cache_dir=cache_dir)
    params = DecodingParams(max_tokens=max_tokens)

    if not segments:
        click.echo("warning: empty corpus, writing empty output", err=True)
    requests = [
        CompletionRequest(model, build_zeroshot_prompt(segment, prompt_version), params)
        for segment in segments
    ]
    outcomes = client.batch_complete(requests, max_inflight) if requests else []

    records = []
    failures = 0
    for segment, outcome in zip(segments, outcomes):
        if isinstance(outcome, PeError):
            failures += 1
            records.append(
                {"segment_id": segment.id, "text": "", "model": model, "error": str(outcome)}
            )
            continue
        text = outcome.text.strip()
        if not text:
            failures += 1
            records.append(
                {"segment_id": segment.id, "text": "", "model": model, "error": "empty model output"}
            )
            continue
        records.append(ZeroShotTranslation(segment.id, text, model).to_record())
    write_records(out, records)
    click.echo(
        f"translate: {len(segments)} segments, {len(segments) - failures} ok, "
        f"{failures} failures -> {out}"
    )


# --------------------------------------------------------------------------
# eval


@pe.group(name="eval")
def eval_group():
    """Evaluate post-editing runs."""


@eval_group.command("adherence")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--zeroshot", "zeroshot_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--system", "system_label", default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def eval_adherence(
    ctx: click.Context,
    results_path: str,
    corpus_path: str,
    zeroshot_path: str,
    system_label: str | None,
    out: str | None,
):
    """Is the post-edit closer to the initial translation or to a
    from-scratch translation? (corpus TER both ways)"""
    results = _read_results(results_path)
    segments = load_segments(corpus_path, "jsonl", None, "corpus")
    by_id = {segment.id: segment for segment in segments}
    zeroshot = {
        record["segment_id"]: record.get("text", "")
        for _, record in read_records(zeroshot_path)
    }
    triples = []
    lang = None
    for result in results:
        if result.error or not result.improved:
            continue
        segment = by_id.get(result.segment_id)
        if segment is None:
            raise DataError(f"results reference unknown segment {result.segment_id!r}")
        z_text = zeroshot.get(result.segment_id)
        if not z_text:
            raise DataError(f"no zero-shot translation for segment {result.segment_id!r}")
        triples.append((result.improved, segment.initial_translation, z_text))
        lang = segment.lang.tgt
    if not triples:
        raise DataError("no usable (post-edit, initial, zero-shot) triples after joining inputs")
    label = system_label or segments[0].system
    row = adherence_report(triples, lang, label)
    rendered = render_adherence_table([row], ctx.obj["format"])
    rendered += f"closer_to={row.closer_to}\n"
    _emit(rendered, out)


@eval_group.command("e3s")
@click.option("--mqm", "mqm_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lang", required=True, help="Language pair of the annotated outputs.")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--initial-scores", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--pe-scores", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def eval_e3s(
    ctx: click.Context,
    mqm_path: str,
    lang: str,
    results_path: str,
    initial_scores: str | None,
    pe_scores: str | None,
    out: str | None,
):
    """Share of Major error spans the post-edit modified, per system."""
    entries = parse_mqm_tsv(mqm_path, LangPair.parse(lang))
    results = {result.segment_id: result for result in _read_results(results_path)}
    initial_map = load_external_scores(initial_scores) if initial_scores else None
    pe_map = load_external_scores(pe_scores) if pe_scores else None

    by_system: dict[str, list] = {}
    for segment, spans in entries:
        majors = filter_major(list(spans))
        result = results.get(segment.id)
        if result is None or result.error or not result.improved:
            if majors:
                raise DataError(
                    f"segment {segment.id!r} has Major spans but no usable post-edit result"
                )
            continue
        by_system.setdefault(segment.system, []).append(
            (segment.id, segment.initial_translation, result.improved, majors)
        )
    if not by_system:
        raise DataError("no segments joined between the span file and the results")
    reports = [
        e3s_score(items, initial_map, pe_map, system=system)
        for system, items in by_system.items()
    ]
    _emit(render_e3s_table(reports, ctx.obj["format"]), out)


@eval_group.command("quality")
@click.option(
    "--scores",
    "score_specs",
    multiple=True,
    required=True,
    help="SYSTEM:METRIC=PATH of a segment-score TSV; repeat per cell.",
)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def eval_quality(ctx: click.Context, score_specs: tuple[str, ...], out: str | None):
    """Corpus-level quality table from external segment-score files
    (means of segment scores)."""
    table: dict[str, dict[str, float]] = {}
    for spec in score_specs:
        head, sep, path = spec.partition("=")
        system, sep2, metric = head.partition(":")
        if not sep or not sep2 or not system or not metric:
            raise click.UsageError(f"bad --scores spec {spec!r}, want SYSTEM:METRIC=PATH")
        values = load_external_scores(path)
        if not values:
            raise DataError(f"score file {path!r} is empty")
        table.setdefault(system, {})[metric] = sum(values.values()) / len(values)
    systems = list(table.items())
    _emit(render_quality_table(systems, ctx.obj["format"]), out)


@eval_group.command("histogram")
@click.option("--initial-scores", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pe-scores", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--bin-width", default=0.01, show_default=True, type=float)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def eval_histogram(initial_scores: str, pe_scores: str, bin_width: float, out: str | None):
    """Histogram of per-segment score deltas (post-edit minus initial)."""
    initial = load_external_scores(initial_scores)
    improved = load_external_scores(pe_scores)
    missing = sorted(set(initial) ^ set(improved))
    if missing:
        raise DataError(f"score files disagree on segment ids, e.g. {missing[0]!r}")
    deltas = [improved[segment_id] - initial[segment_id] for segment_id in initial]
    bins, fraction = gain_histogram(deltas, bin_width)
    _emit(histogram_tsv(bins, fraction), out)


# --------------------------------------------------------------------------
# err


@pe.group(name="err")
def err_group():
    """Edit-realization workflow: export samples, serve the annotation UI,
    score judgments."""


@err_group.command("export")
@click.option("--results", "results_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n", required=True, type=click.IntRange(min=1))
@click.option("--seed", type=int, default=None, help="Overrides the global --seed.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def err_export(
    ctx: click.Context,
    results_path: str,
    corpus_path: str,
    n: int,
    seed: int | None,
    out: str,
):
    """Draw a deterministic sample of post-edits for human judgment."""
    results = _read_results(results_path)
    segments = load_segments(corpus_path, "jsonl", None, "corpus")
    effective_seed = ctx.obj["seed"] if seed is None else seed
    samples = err_mod.export_err_samples(results, segments, n, effective_seed)
    err_mod.write_samples(out, samples)
    click.echo(f"exported {len(samples)} samples (seed {effective_seed}) -> {out}")


@err_group.command("serve")
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--judgments", "judgments_path", required=True, type=click.Path(dir_okay=False))
@click.option("--port", default=8377, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static-dir", default=None, type=click.Path(exists=True, file_okay=False))
def err_serve(samples_path: str, judgments_path: str, port: int, host: str, static_dir: str | None):
    """Serve the annotation UI and its JSON API; blocks until interrupted."""
    samples = err_mod.read_samples(samples_path)
    server = err_mod.AnnotationServer(samples, port, judgments_path, static_dir, host)
    click.echo(f"listening on http://{server.host}:{server.port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        click.echo("shutting down")


@err_group.command("score")
@click.option("--judgments", "judgments_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", "samples_path", required=True, type=click.Path(exists=True, dir_okay=False))
def err_score_cmd(judgments_path: str, samples_path: str):
    """Score imported judgments: percentage of samples judged realized."""
    samples = err_mod.read_samples(samples_path)
    judgments = err_mod.import_judgments(judgments_path, samples)
    score = err_mod.err_score(judgments)
    click.echo(f"ERR: {score:.1f} ({len(judgments)}/{len(samples)} samples judged)")


# --------------------------------------------------------------------------
# report


@pe.group(name="report")
def report_group():
    """Re-render stored evaluation tables."""


@report_group.command("show")
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
def report_show(input: str):
    """Pretty-print a TSV table produced by an eval command."""
    lines = [line for line in Path(input).read_text(encoding="utf-8").splitlines() if line]
    if not lines:
        raise DataError(f"{input}: empty table")
    rows = [line.split("\t") for line in lines if "\t" in line]
    trailers = [line for line in lines if "\t" not in line]
    if rows:
        widths = [max(len(row[i]) if i < len(row) else 0 for row in rows) for i in range(len(rows[0]))]
        for row in rows:
            click.echo(
                "  ".join(
                    (row[i] if i < len(row) else "").ljust(widths[i]) for i in range(len(widths))
                ).rstrip()
            )
    for trailer in trailers:
        click.echo(trailer)


def main(argv: list[str] | None = None) -> int:
    """Entry point with exit-code discipline (0 ok, 1 usage, 2 data, 3 provider)."""
    try:
        pe(args=argv, standalone_mode=False, prog_name="pe")
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except StartupError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (TransportError, ProviderError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except (DataError, ParseError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
