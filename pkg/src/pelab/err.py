"""Edit-realization workflow: sample export, judgment import/scoring, and the
HTTP service that hosts the human annotation step.

An exported sample bundles everything an annotator needs on one screen:
source, initial translation, the proposed edits, the improved translation,
and a precomputed character diff for highlighting. Judging is per-sample
all-or-nothing: realized only if every proposed edit shows up in the
improved translation.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
from dataclasses import dataclass
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Sequence

from .corpus import Segment
from .errors import DataError, StartupError
from .jsonl import dump_record, read_records, write_records
from .prompting import Mode, PostEditResult
from .spanedit import Alignment, EditOp, align

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ErrSample:
    sample_id: str
    segment_id: str
    source: str
    initial_translation: str
    edits: tuple[str, ...]
    improved: str
    diff: Alignment
    model: str

    def to_record(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "segment_id": self.segment_id,
            "source": self.source,
            "initial_translation": self.initial_translation,
            "edits": list(self.edits),
            "improved": self.improved,
            "diff": [op.to_record() for op in self.diff.ops],
            "model": self.model,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ErrSample":
        ops = tuple(EditOp.from_record(op) for op in record.get("diff", ()))
        return cls(
            sample_id=record["sample_id"],
            segment_id=record["segment_id"],
            source=record["source"],
            initial_translation=record["initial_translation"],
            edits=tuple(record.get("edits", ())),
            improved=record["improved"],
            diff=Alignment(record["initial_translation"], record["improved"], ops),
            model=record.get("model", ""),
        )


@dataclass(frozen=True)
class ErrJudgment:
    sample_id: str
    realized: bool
    annotator: str = ""
    note: str | None = None

    def to_record(self) -> dict:
        record = {
            "sample_id": self.sample_id,
            "realized": self.realized,
            "annotator": self.annotator,
        }
        if self.note is not None:
            record["note"] = self.note
        return record


def export_err_samples(
    results: Sequence[PostEditResult],
    segments: Sequence[Segment],
    n: int,
    seed: int,
) -> list[ErrSample]:
    """Draw a deterministic uniform sample of size n from the eligible
    results (successfully parsed cot results with at least one edit)."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    by_id = {segment.id: segment for segment in segments}
    eligible = [
        result
        for result in results
        if result.mode is Mode.COT and result.edits and result.improved and result.error is None
    ]
    if n > len(eligible):
        raise DataError(f"requested {n} samples but only {len(eligible)} results are eligible")
    rng = random.Random(seed)
    chosen = rng.sample(eligible, n)
    samples = []
    for result in chosen:
        segment = by_id.get(result.segment_id)
        if segment is None:
            raise DataError(f"result references unknown segment {result.segment_id!r}")
        key = f"{result.segment_id}\t{result.model}\t{result.raw_output}"
        sample_id = hashlib.sha256(key.encode("utf-8")).hexdigest()[:12]
        samples.append(
            ErrSample(
                sample_id=sample_id,
                segment_id=segment.id,
                source=segment.source,
                initial_translation=segment.initial_translation,
                edits=result.edits,
                improved=result.improved,
                diff=align(segment.initial_translation, result.improved),
                model=result.model,
            )
        )
    return samples


def write_samples(path: str | Path, samples: Sequence[ErrSample]) -> None:
    write_records(path, (sample.to_record() for sample in samples))


def read_samples(path: str | Path) -> list[ErrSample]:
    return [ErrSample.from_record(record) for _, record in read_records(path)]


def _parse_realized(value, line_no: int) -> bool:
    if isinstance(value, bool):
        return value
    if value in (0, 1):
        return bool(value)
    raise DataError(f"line {line_no}: realized must be a boolean (or 0/1), got {value!r}")


def import_judgments(path: str | Path, samples: Sequence[ErrSample]) -> list[ErrJudgment]:
    """Read a judgments JSONL file; rows must reference exported sample ids.
    Duplicate rows for a sample keep the last one, with a warning."""
    known = {sample.sample_id for sample in samples}
    latest: dict[str, ErrJudgment] = {}
    order: list[str] = []
    for line_no, record in read_records(path):
        sample_id = record.get("sample_id")
        if sample_id not in known:
            raise DataError(f"line {line_no}: unknown sample_id {sample_id!r}")
        judgment = ErrJudgment(
            sample_id=sample_id,
            realized=_parse_realized(record.get("realized"), line_no),
            annotator=record.get("annotator", ""),
            note=record.get("note"),
        )
        if sample_id in latest:
            log.warning("duplicate judgment for %s at line %d; keeping the last", sample_id, line_no)
        else:
            order.append(sample_id)
        latest[sample_id] = judgment
    return [latest[sample_id] for sample_id in order]


def err_score(judgments: Sequence[ErrJudgment]) -> float:
    """Percentage of samples judged realized."""
    if not judgments:
        raise DataError("no judgments to score")
    realized = sum(1 for judgment in judgments if judgment.realized)
    return 100.0 * realized / len(judgments)


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>annotation service</title></head>
<body><h1>Annotation service is running</h1>
<p>No UI bundle is installed. The JSON API is live under <code>/api/</code>:
GET /api/samples, GET /api/judgments, POST /api/judgments, GET /api/progress.</p>
</body></html>
"""


class AnnotationServer:
    """Threaded HTTP server for the annotation workflow.

    Judgments are appended to a JSONL file and flushed on every POST; the
    single append lock serializes concurrent annotators. Read endpoints are
    safe at any concurrency.
    """

    def __init__(
        self,
        samples: Sequence[ErrSample],
        port: int,
        judgments_path: str | Path,
        static_dir: str | Path | None = None,
        host: str = "127.0.0.1",
    ):
        self.samples = list(samples)
        self.samples_by_id = {sample.sample_id: sample for sample in self.samples}
        self.judgments_path = Path(judgments_path)
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self._write_lock = threading.Lock()
        handler = self._make_handler()
        try:
            self._httpd = ThreadingHTTPServer((host, port), handler)
        except OSError as exc:
            raise StartupError(f"cannot bind {host}:{port}: {exc}") from exc
        self.host = host
        self.port = self._httpd.server_address[1]
        self._thread: threading.Thread | None = None

    # -- judgment storage ------------------------------------------------

    def stored_judgments(self) -> list[dict]:
        if not self.judgments_path.exists():
            return []
        return [record for _, record in read_records(self.judgments_path)]

    def append_judgment(self, record: dict) -> None:
        with self._write_lock:
            self.judgments_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.judgments_path, "a", encoding="utf-8") as handle:
                handle.write(dump_record(record) + "\n")
                handle.flush()

    def progress(self) -> dict:
        judged = {record.get("sample_id") for record in self.stored_judgments()}
        judged &= set(self.samples_by_id)
        return {"total": len(self.samples), "judged": len(judged)}

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "AnnotationServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    # -- request handling --------------------------------------------------

    def _make_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, format, *args):  # noqa: A002 - stdlib signature
                log.debug("http: " + format, *args)

            def _send_json(self, payload, status: HTTPStatus = HTTPStatus.OK) -> None:
                body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json; charset=utf-8")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _send_bytes(self, body: bytes, content_type: str) -> None:
                self.send_response(HTTPStatus.OK)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                path = self.path.split("?", 1)[0]
                if path == "/api/samples":
                    self._send_json([sample.to_record() for sample in server.samples])
                elif path == "/api/judgments":
                    self._send_json(server.stored_judgments())
                elif path == "/api/progress":
                    self._send_json(server.progress())
                else:
                    self._send_static(path)

            def _send_static(self, path: str) -> None:
                if path == "/":
                    path = "/index.html"
                if server.static_dir is None:
                    if path == "/index.html":
                        self._send_bytes(_PLACEHOLDER_PAGE.encode("utf-8"), _CONTENT_TYPES[".html"])
                    else:
                        self._send_json({"error": "not found"}, HTTPStatus.NOT_FOUND)
                    return
                target = (server.static_dir / path.lstrip("/")).resolve()
                if not str(target).startswith(str(server.static_dir)) or not target.is_file():
                    self._send_json({"error": "not found"}, HTTPStatus.NOT_FOUND)
                    return
                content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
                self._send_bytes(target.read_bytes(), content_type)

            def do_POST(self):
                path = self.path.split("?", 1)[0]
                if path != "/api/judgments":
                    self._send_json({"error": "not found"}, HTTPStatus.NOT_FOUND)
                    return
                length = int(self.headers.get("Content-Length") or 0)
                try:
                    payload = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    self._send_json({"error": "invalid JSON"}, HTTPStatus.BAD_REQUEST)
                    return
                sample_id = payload.get("sample_id")
                if sample_id not in server.samples_by_id:
                    self._send_json(
                        {"error": f"unknown sample_id {sample_id!r}"}, HTTPStatus.NOT_FOUND
                    )
                    return
                realized = payload.get("realized")
                if not isinstance(realized, bool):
                    self._send_json(
                        {"error": "realized must be a boolean"}, HTTPStatus.BAD_REQUEST
                    )
                    return
                record = {
                    "sample_id": sample_id,
                    "realized": realized,
                    "annotator": payload.get("annotator", ""),
                }
                if payload.get("note") is not None:
                    record["note"] = payload["note"]
                server.append_judgment(record)
                self._send_json({"ok": True})

        return Handler


def serve_annotation(
    samples: Sequence[ErrSample],
    port: int,
    judgments_path: str | Path,
    static_dir: str | Path | None = None,
    host: str = "127.0.0.1",
) -> AnnotationServer:
    """Start the annotation service in a background thread and return its
    handle (with .port and .stop())."""
    return AnnotationServer(samples, port, judgments_path, static_dir, host).start()
