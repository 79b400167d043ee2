"""Character-level alignment between a translation and its post-edit,
plus span-modification queries and the edit-efficacy score over
annotated error spans.

Alignment granularity is the character, not the token: error spans are
character-offset annotations and sub-token edits must register.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import MqmSpan, Severity
from .errors import DataError


class EmptyDenominator(DataError):
    """No Major spans in the scored corpus; the score is undefined."""


@dataclass(frozen=True)
class EditOp:
    """One run of identical edit operations.

    src ranges index the first string, dst ranges the second; insert ops
    have an empty src range and delete ops an empty dst range.
    """

    kind: str  # match | substitute | delete | insert
    src_start: int
    src_end: int
    dst_start: int
    dst_end: int

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "src_start": self.src_start,
            "src_end": self.src_end,
            "dst_start": self.dst_start,
            "dst_end": self.dst_end,
        }

    @classmethod
    def from_record(cls, record: dict) -> "EditOp":
        return cls(
            kind=record["kind"],
            src_start=record["src_start"],
            src_end=record["src_end"],
            dst_start=record["dst_start"],
            dst_end=record["dst_end"],
        )


@dataclass(frozen=True)
class Alignment:
    """A minimum-cost character edit script between src and dst.

    The src ranges of the ops partition [0, len(src)) and the dst ranges
    partition [0, len(dst)), in order.
    """

    src: str
    dst: str
    ops: tuple[EditOp, ...]

    @property
    def cost(self) -> int:
        total = 0
        for op in self.ops:
            if op.kind != "match":
                total += max(op.src_end - op.src_start, op.dst_end - op.dst_start)
        return total


def align(t: str, t_prime: str) -> Alignment:
    """Minimum-cost character edit script with deterministic traceback.

    Unit costs throughout; equal-cost paths resolve by preferring
    match > substitute > delete > insert, so results are run-to-run stable.
    """
    n, m = len(t), len(t_prime)
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i
    for j in range(1, m + 1):
        cost[0][j] = j
    for i in range(1, n + 1):
        row = cost[i]
        above = cost[i - 1]
        ch = t[i - 1]
        for j in range(1, m + 1):
            row[j] = min(
                above[j - 1] + (ch != t_prime[j - 1]),
                above[j] + 1,
                row[j - 1] + 1,
            )

    i, j = n, m
    cells: list[tuple[str, int, int]] = []
    while i > 0 or j > 0:
        here = cost[i][j]
        if i > 0 and j > 0 and t[i - 1] == t_prime[j - 1] and cost[i - 1][j - 1] == here:
            kind = "match"
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and cost[i - 1][j - 1] + 1 == here:
            kind = "substitute"
            i -= 1
            j -= 1
        elif i > 0 and cost[i - 1][j] + 1 == here:
            kind = "delete"
            i -= 1
        else:
            kind = "insert"
            j -= 1
        cells.append((kind, i, j))
    cells.reverse()

    ops: list[EditOp] = []
    for kind, src_pos, dst_pos in cells:
        src_len = 0 if kind == "insert" else 1
        dst_len = 0 if kind == "delete" else 1
        if ops and ops[-1].kind == kind and ops[-1].src_end == src_pos and ops[-1].dst_end == dst_pos:
            last = ops.pop()
            ops.append(
                EditOp(kind, last.src_start, src_pos + src_len, last.dst_start, dst_pos + dst_len)
            )
        else:
            ops.append(EditOp(kind, src_pos, src_pos + src_len, dst_pos, dst_pos + dst_len))
    return Alignment(src=t, dst=t_prime, ops=tuple(ops))


def span_modified(alignment: Alignment, span: MqmSpan) -> bool:
    """Did the edit script touch the span?

    True iff a substitute or delete op overlaps [start, end), or an insert
    op sits strictly inside (start, end). Insertions exactly at a span
    boundary do not count: they edit the neighboring region.
    """
    length = len(alignment.src)
    if not (0 <= span.start < span.end <= length):
        raise DataError(
            f"span ({span.start}, {span.end}) out of range for text of length {length}"
        )
    for op in alignment.ops:
        if op.kind == "match":
            continue
        if op.kind == "insert":
            if span.start < op.src_start < span.end:
                return True
        elif op.src_start < span.end and op.src_end > span.start:
            return True
    return False


@dataclass(frozen=True)
class E3sReport:
    """Share of Major error spans that the post-edit modified."""

    system: str
    spans_total: int
    spans_modified: int
    initial_qe: float | None = None
    pe_qe: float | None = None

    @property
    def e3s(self) -> float:
        return 100.0 * self.spans_modified / self.spans_total


def e3s_score(
    items: Sequence[tuple[str, str, str, Sequence[MqmSpan]]],
    initial_scores: dict[str, float] | None = None,
    pe_scores: dict[str, float] | None = None,
    system: str = "",
) -> E3sReport:
    """Score items of (segment_id, initial, improved, Major spans).

    Every span counts once: 1 if the character diff between initial and
    improved touches it, else 0. QE columns are means of the provided
    score maps over the scored segment ids.
    """
    total = 0
    modified = 0
    segment_ids: list[str] = []
    for segment_id, initial, improved, spans in items:
        alignment = align(initial, improved)
        segment_ids.append(segment_id)
        for span in spans:
            if span.severity is not Severity.MAJOR:
                raise DataError(f"{segment_id}: non-Major span passed to e3s_score")
            total += 1
            if span_modified(alignment, span):
                modified += 1
    if total == 0:
        raise EmptyDenominator("no Major spans in corpus")
    return E3sReport(
        system=system,
        spans_total=total,
        spans_modified=modified,
        initial_qe=_mean_over(initial_scores, segment_ids),
        pe_qe=_mean_over(pe_scores, segment_ids),
    )


def _mean_over(scores: dict[str, float] | None, segment_ids: list[str]) -> float | None:
    if scores is None:
        return None
    values = [scores[sid] for sid in segment_ids if sid in scores]
    if not values:
        return None
    return sum(values) / len(values)
