"""Corpus ingestion: parallel segments and human-annotated error spans.

Two on-disk formats are supported: plain TSV (source<TAB>translation) and
JSONL with explicit Segment fields. Error-span files are TSV with targets
that may embed spans as <v>...</v>; offsets always index the tag-stripped
target text, counted in Unicode scalar values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import DataError
from .jsonl import read_records, write_records


class CorpusError(DataError):
    """Malformed corpus row or inconsistent duplicate rows."""


class Severity(str, Enum):
    MAJOR = "Major"
    MINOR = "Minor"
    NEUTRAL = "Neutral"

    @classmethod
    def parse(cls, raw: str) -> "Severity":
        try:
            return cls(raw.strip().capitalize())
        except ValueError:
            raise CorpusError(f"unknown severity {raw!r}") from None


@dataclass(frozen=True)
class LangPair:
    """A translation direction, e.g. en -> de. Codes are lowercase ISO-639."""

    src: str
    tgt: str

    def __post_init__(self):
        for code in (self.src, self.tgt):
            if not re.fullmatch(r"[a-z]{2,3}", code):
                raise ValueError(f"bad language code {code!r} (want 2-3 lowercase letters)")
        if self.src == self.tgt:
            raise ValueError(f"source and target language must differ, got {self.src!r} twice")

    @classmethod
    def parse(cls, text: str) -> "LangPair":
        src, sep, tgt = text.partition("-")
        if not sep:
            raise ValueError(f"expected <src>-<tgt>, got {text!r}")
        return cls(src.lower(), tgt.lower())

    def __str__(self) -> str:
        return f"{self.src}-{self.tgt}"


@dataclass(frozen=True)
class Segment:
    """One source/translation pair produced by a named system."""

    id: str
    lang: LangPair
    source: str
    initial_translation: str
    system: str
    reference: str | None = None
    doc_id: str | None = None

    def __post_init__(self):
        if not self.source:
            raise ValueError(f"segment {self.id!r}: empty source")
        if not self.initial_translation:
            raise ValueError(f"segment {self.id!r}: empty initial translation")


@dataclass(frozen=True)
class MqmSpan:
    """A human-annotated error span inside a segment's initial translation.

    start/end are character offsets into the tag-stripped target text,
    start inclusive, end exclusive.
    """

    segment_id: str
    start: int
    end: int
    severity: Severity
    category: str = ""
    rater: str | None = None

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(
                f"span on {self.segment_id!r}: need 0 <= start < end, got ({self.start}, {self.end})"
            )


def load_segments(
    path: str | Path,
    format: str,
    lang: LangPair | None,
    system: str,
) -> list[Segment]:
    """Load segments from a TSV or JSONL file, in file order.

    TSV rows need at least (source, translation); ids are assigned as
    <system>:<row-index>. JSONL records may carry any Segment field; an
    explicit id wins, and absent lang/system fall back to the arguments.
    """
    path = Path(path)
    if format == "tsv":
        if lang is None:
            raise ValueError("tsv corpora need an explicit language pair")
        return _load_tsv(path, lang, system)
    if format == "jsonl":
        return _load_jsonl(path, lang, system)
    raise ValueError(f"unknown corpus format {format!r} (want 'tsv' or 'jsonl')")


def _load_tsv(path: Path, lang: LangPair, system: str) -> list[Segment]:
    segments = []
    row_index = 0
    saw_first = False
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            if not saw_first:
                saw_first = True
                if cells[0] in ("system", "source"):
                    continue
            if len(cells) < 2:
                raise CorpusError(f"{path}: line {line_no}: expected >= 2 columns, got {len(cells)}")
            try:
                segment = Segment(
                    id=f"{system}:{row_index}",
                    lang=lang,
                    source=cells[0],
                    initial_translation=cells[1],
                    system=system,
                )
            except ValueError as exc:
                raise CorpusError(f"{path}: line {line_no}: {exc}") from None
            segments.append(segment)
            row_index += 1
    return segments


def _load_jsonl(path: Path, lang: LangPair | None, system: str) -> list[Segment]:
    segments = []
    row_index = 0
    for line_no, record in read_records(path):
        record_lang = record.get("lang")
        try:
            if isinstance(record_lang, dict):
                pair = LangPair(record_lang["src"], record_lang["tgt"])
            elif isinstance(record_lang, str):
                pair = LangPair.parse(record_lang)
            elif lang is not None:
                pair = lang
            else:
                raise ValueError("record has no lang and no fallback was given")
            record_system = record.get("system") or system
            segment = Segment(
                id=str(record["id"]) if record.get("id") else f"{record_system}:{row_index}",
                lang=pair,
                source=record["source"],
                initial_translation=record["initial_translation"],
                system=record_system,
                reference=record.get("reference"),
                doc_id=record.get("doc_id"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"{path}: line {line_no}: {exc}") from None
        segments.append(segment)
        row_index += 1
    return segments


def segment_to_record(segment: Segment) -> dict:
    record = {
        "id": segment.id,
        "lang": {"src": segment.lang.src, "tgt": segment.lang.tgt},
        "source": segment.source,
        "initial_translation": segment.initial_translation,
        "system": segment.system,
    }
    if segment.reference is not None:
        record["reference"] = segment.reference
    if segment.doc_id is not None:
        record["doc_id"] = segment.doc_id
    return record


def write_segments(path: str | Path, segments: list[Segment]) -> None:
    write_records(path, (segment_to_record(segment) for segment in segments))


_SPAN_TAG = re.compile(r"</?v>")

# Column order assumed when an error-span TSV has no header row.
_MQM_DEFAULT_COLUMNS = ("system", "seg_id", "source", "target", "category", "severity", "rater")


def strip_span_tags(target: str, seg_id: str) -> tuple[str, list[tuple[int, int]]]:
    """Remove <v>...</v> markers, returning the clean text and span offsets into it."""
    pieces: list[str] = []
    clean_len = 0
    spans: list[tuple[int, int]] = []
    open_at: int | None = None
    pos = 0
    for match in _SPAN_TAG.finditer(target):
        chunk = target[pos : match.start()]
        pieces.append(chunk)
        clean_len += len(chunk)
        pos = match.end()
        if match.group() == "<v>":
            if open_at is not None:
                raise CorpusError(f"{seg_id}: nested <v> tag")
            open_at = clean_len
        else:
            if open_at is None:
                raise CorpusError(f"{seg_id}: unbalanced </v> tag")
            if clean_len == open_at:
                raise CorpusError(f"{seg_id}: empty <v></v> span")
            spans.append((open_at, clean_len))
            open_at = None
    if open_at is not None:
        raise CorpusError(f"{seg_id}: unclosed <v> tag")
    pieces.append(target[pos:])
    return "".join(pieces), spans


def parse_mqm_tsv(path: str | Path, lang: LangPair) -> list[tuple[Segment, list[MqmSpan]]]:
    """Parse an error-span TSV into (Segment, spans) pairs.

    Rows carry system, seg_id, source, target, category, severity (plus an
    optional rater column); a header row, detected by a literal "system"
    first cell, may reorder them. Duplicate (system, seg_id) rows merge
    their spans onto one Segment; conflicting target texts are an error.
    """
    path = Path(path)
    columns = {name: idx for idx, name in enumerate(_MQM_DEFAULT_COLUMNS)}
    entries: dict[tuple[str, str], tuple[Segment, list[MqmSpan]]] = {}
    order: list[tuple[str, str]] = []
    saw_first = False
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            if not saw_first:
                saw_first = True
                if cells[0] == "system":
                    columns = {name: idx for idx, name in enumerate(cells)}
                    missing = [c for c in _MQM_DEFAULT_COLUMNS[:6] if c not in columns]
                    if missing:
                        raise CorpusError(f"{path}: header missing columns {missing}")
                    continue

            def cell(name: str, default: str | None = None) -> str | None:
                idx = columns.get(name)
                if idx is None or idx >= len(cells):
                    return default
                return cells[idx]

            system = cell("system")
            seg_id = cell("seg_id")
            source = cell("source")
            target = cell("target")
            if not all((system, seg_id, source, target)):
                raise CorpusError(f"{path}: line {line_no}: missing required cells")
            segment_id = f"{system}:{seg_id}"
            clean_target, offsets = strip_span_tags(target, segment_id)
            spans = []
            if offsets:
                severity_cell = cell("severity")
                if not severity_cell:
                    raise CorpusError(f"{path}: line {line_no}: span without a severity value")
                severity = Severity.parse(severity_cell)
                category = cell("category", "") or ""
                rater = cell("rater") or None
                spans = [
                    MqmSpan(segment_id, start, end, severity, category, rater)
                    for start, end in offsets
                ]
            key = (system, seg_id)
            if key in entries:
                segment, existing = entries[key]
                if segment.initial_translation != clean_target:
                    raise CorpusError(
                        f"{path}: line {line_no}: conflicting target text for {segment_id}"
                    )
                existing.extend(spans)
            else:
                segment = Segment(
                    id=segment_id,
                    lang=lang,
                    source=source,
                    initial_translation=clean_target,
                    system=system,
                )
                entries[key] = (segment, spans)
                order.append(key)
    return [entries[key] for key in order]


def filter_major(spans: list[MqmSpan]) -> list[MqmSpan]:
    """Keep only Major-severity spans, order preserved."""
    return [span for span in spans if span.severity is Severity.MAJOR]
