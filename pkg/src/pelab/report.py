"""Plain-text and TSV table rendering for evaluation results.

Flagging picks the extremal value per column: minimum for error rates,
maximum for quality scores, per the metric registry below. Text output
marks flagged cells with a trailing *, TSV keeps values clean and appends
a separate flag column.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from .errors import DataError
from .metrics import AdherenceRow
from .spanedit import E3sReport

# Direction registry: families where lower is better. Everything else
# (QE/COMET, chrF, BLEU, E3S, ...) flags the maximum.
LOWER_BETTER_PREFIXES = ("ter",)

FORMATS = ("text", "tsv")


def metric_direction(name: str) -> str:
    lowered = name.lower()
    if any(lowered.startswith(prefix) for prefix in LOWER_BETTER_PREFIXES):
        return "min"
    return "max"


def _check_format(format: str) -> None:
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r} (want one of {FORMATS})")


def _text_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [len(cell) for cell in header]
    for row in rows:
        for index, cell in enumerate(row):
            widths[index] = max(widths[index], len(cell))
    lines = [
        "  ".join(cell.ljust(widths[index]) for index, cell in enumerate(header)).rstrip(),
        "  ".join("-" * widths[index] for index in range(len(header))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[index]) for index, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def _tsv_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["\t".join(header)]
    lines.extend("\t".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def render_adherence_table(rows: Sequence[AdherenceRow], format: str = "text") -> str:
    """Columns: System, TER against the zero-shot translation, TER against
    the initial translation; the smaller TER per row is flagged."""
    _check_format(format)
    if not rows:
        raise DataError("no adherence rows to render")
    header = ["System", "TER(T',Z)", "TER(T',T)", "closer_to"]
    body = []
    for row in rows:
        vs_z = f"{row.ter_pe_vs_zeroshot:.1f}"
        vs_t = f"{row.ter_pe_vs_initial:.1f}"
        if format == "text":
            if row.closer_to == "zeroshot":
                vs_z += "*"
            elif row.closer_to == "initial":
                vs_t += "*"
        body.append([row.system, vs_z, vs_t, row.closer_to])
    if format == "text":
        return _text_table(header, body)
    return _tsv_table(header, body)


def render_quality_table(
    systems: Sequence[tuple[str, Mapping[str, float]]], format: str = "text"
) -> str:
    """One row per system, one column per metric; the best value in each
    column is flagged (ties flag every holder)."""
    _check_format(format)
    if not systems:
        raise DataError("no systems to render")
    metrics = list(systems[0][1].keys())
    for label, scores in systems:
        if set(scores.keys()) != set(metrics):
            raise DataError(
                f"system {label!r} has metric columns {sorted(scores)} "
                f"but expected {sorted(metrics)}"
            )
    best: dict[str, float] = {}
    for metric in metrics:
        values = [scores[metric] for _, scores in systems]
        best[metric] = min(values) if metric_direction(metric) == "min" else max(values)
    header = ["System"] + metrics
    if format == "tsv":
        header = header + ["flag"]
    body = []
    for label, scores in systems:
        row = [label]
        flagged = []
        for metric in metrics:
            value = scores[metric]
            cell = f"{value:.2f}"
            if value == best[metric]:
                flagged.append(metric)
                if format == "text":
                    cell += "*"
            row.append(cell)
        if format == "tsv":
            row.append(",".join(flagged))
        body.append(row)
    if format == "text":
        return _text_table(header, body)
    return _tsv_table(header, body)


def render_e3s_table(reports: Sequence[E3sReport], format: str = "text") -> str:
    """Columns: System, Initial-QE, PE-QE, E3S; QE cells are blank when no
    score map was supplied."""
    _check_format(format)
    if not reports:
        raise DataError("no span-edit reports to render")
    header = ["System", "Initial-QE", "PE-QE", "E3S"]
    body = []
    for report in reports:
        body.append(
            [
                report.system,
                "" if report.initial_qe is None else f"{report.initial_qe:.2f}",
                "" if report.pe_qe is None else f"{report.pe_qe:.2f}",
                f"{report.e3s:.2f}",
            ]
        )
    if format == "text":
        return _text_table(header, body)
    return _tsv_table(header, body)
