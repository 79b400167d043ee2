import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import levenshtein
from pelab.corpus import MqmSpan, Severity
from pelab.errors import DataError
from pelab.spanedit import (
    Alignment,
    EditOp,
    EmptyDenominator,
    align,
    e3s_score,
    span_modified,
)


def major(segment_id, start, end):
    return MqmSpan(segment_id, start, end, Severity.MAJOR, "Accuracy")


short_text = st.text(alphabet="abcx ", max_size=12)


class TestAlign:
    def test_identity_single_match(self):
        alignment = align("abc", "abc")
        assert alignment.ops == (EditOp("match", 0, 3, 0, 3),)
        assert alignment.cost == 0

    def test_delete_then_match(self):
        alignment = align("ab", "b")
        assert alignment.ops == (
            EditOp("delete", 0, 1, 0, 0),
            EditOp("match", 1, 2, 0, 1),
        )

    def test_insert_only(self):
        alignment = align("", "ab")
        assert alignment.ops == (EditOp("insert", 0, 0, 0, 2),)

    def test_both_empty(self):
        assert align("", "").ops == ()

    @given(a=short_text, b=short_text)
    @settings(max_examples=150)
    def test_cost_matches_distance_oracle(self, a, b):
        assert align(a, b).cost == levenshtein(a, b)

    @given(a=short_text, b=short_text)
    @settings(max_examples=150)
    def test_reconstructs_both_sides(self, a, b):
        alignment = align(a, b)
        assert "".join(a[op.src_start : op.src_end] for op in alignment.ops) == a
        assert "".join(b[op.dst_start : op.dst_end] for op in alignment.ops) == b

    @given(a=short_text, b=short_text)
    @settings(max_examples=100)
    def test_ranges_partition_in_order(self, a, b):
        alignment = align(a, b)
        src_pos = dst_pos = 0
        for op in alignment.ops:
            assert op.src_start == src_pos
            assert op.dst_start == dst_pos
            src_pos, dst_pos = op.src_end, op.dst_end
            if op.kind == "match":
                assert a[op.src_start : op.src_end] == b[op.dst_start : op.dst_end]
        assert src_pos == len(a)
        assert dst_pos == len(b)


class TestSpanModified:
    def test_identical_texts_never_modified(self):
        alignment = align("ein text", "ein text")
        assert span_modified(alignment, major("s", 0, 3)) is False
        assert span_modified(alignment, major("s", 4, 8)) is False

    def test_repeated_word_collapse_registers(self):
        t = "Health and Human ServicesServices - in Cincinnati"
        t_prime = "Health and Human Services - in Cincinnati"
        start = t.index("ServicesServices")
        alignment = align(t, t_prime)
        assert span_modified(alignment, major("s", start, start + len("ServicesServices")))

    def test_edit_after_span_does_not_count(self):
        # hand-built three-op alignment: match, then a substitution after the span
        alignment = Alignment(
            src="abcdef",
            dst="abcdxf",
            ops=(
                EditOp("match", 0, 4, 0, 4),
                EditOp("substitute", 4, 5, 4, 5),
                EditOp("match", 5, 6, 5, 6),
            ),
        )
        assert span_modified(alignment, major("s", 0, 3)) is False
        assert span_modified(alignment, major("s", 3, 5)) is True

    def test_boundary_insertions_do_not_count(self):
        # insert 'x' between "ab" and "cd": at src position 2
        alignment = align("abcd", "abxcd")
        insert_ops = [op for op in alignment.ops if op.kind == "insert"]
        assert [op.src_start for op in insert_ops] == [2]
        assert span_modified(alignment, major("s", 0, 2)) is False  # insertion at end boundary
        assert span_modified(alignment, major("s", 2, 4)) is False  # insertion at start boundary
        assert span_modified(alignment, major("s", 1, 3)) is True  # strictly interior

    def test_out_of_range_span_rejected(self):
        alignment = align("abc", "abc")
        with pytest.raises(DataError):
            span_modified(alignment, major("s", 1, 4))

    @given(a=short_text.filter(lambda s: len(s) >= 3), b=short_text)
    @settings(max_examples=120)
    def test_monotone_under_widening(self, a, b):
        alignment = align(a, b)
        inner = major("s", 1, len(a) - 1) if len(a) > 2 else major("s", 0, len(a))
        outer = major("s", 0, len(a))
        if span_modified(alignment, inner):
            assert span_modified(alignment, outer)


def fixture_items():
    """Ten single-edit pairs with one Major span each; exactly 7 modified."""
    rows = [
        # (initial, improved, span_lo, span_hi, expect_modified)
        ("aaa bbb ccc", "aaa xxx ccc", 4, 7, True),  # substitution inside span
        ("hello world", "hllo world", 0, 5, True),  # deletion inside span
        ("one two three", "one twwo three", 4, 7, True),  # interior insertion
        ("abc def", "zbc def", 0, 3, True),  # substitution at span start
        ("good morning sun", "good morning moon", 5, 12, False),  # edit after span
        ("der alte baum steht", "der neue baum steht", 4, 8, True),  # span rewritten
        ("une pomme rouge", "une pomme verte", 4, 9, False),  # edit after span
        ("ServicesServices block", "Services block", 0, 16, True),  # repetition removed
        ("alpha beta gamma", "alpha gamma", 6, 10, True),  # span deleted
        ("goed zo", "goed zo!", 0, 4, False),  # edit appended after span
    ]
    items = []
    expected = 0
    for index, (initial, improved, lo, hi, modified) in enumerate(rows):
        segment_id = f"s:{index}"
        items.append((segment_id, initial, improved, [major(segment_id, lo, hi)]))
        expected += modified
    assert expected == 7
    return items


class TestE3sScore:
    def test_ten_span_fixture_scores_70(self):
        report = e3s_score(fixture_items(), system="sysA")
        assert report.spans_total == 10
        assert report.spans_modified == 7
        assert report.e3s == 70.0

    def test_unchanged_corpus_scores_zero(self):
        items = [
            ("s:0", "alpha beta", "alpha beta", [major("s:0", 0, 5)]),
            ("s:1", "gamma delta", "gamma delta", [major("s:1", 6, 11)]),
        ]
        assert e3s_score(items).e3s == 0.0

    def test_zero_spans_rejected(self):
        with pytest.raises(EmptyDenominator):
            e3s_score([("s:0", "a b", "a c", [])])

    def test_non_major_span_rejected(self):
        span = MqmSpan("s:0", 0, 1, Severity.MINOR, "Fluency")
        with pytest.raises(DataError):
            e3s_score([("s:0", "ab", "ac", [span])])

    def test_qe_means_come_from_score_maps(self):
        items = fixture_items()
        initial = {segment_id: 1.0 for segment_id, *_ in items}
        improved = {segment_id: 3.0 for segment_id, *_ in items}
        report = e3s_score(items, initial, improved, system="sysA")
        assert report.initial_qe == 1.0
        assert report.pe_qe == 3.0

    def test_disjoint_union_combines_by_span_count(self):
        items = fixture_items()
        left, right = items[:4], items[4:]
        whole = e3s_score(items)
        part_left = e3s_score(left)
        part_right = e3s_score(right)
        combined = (
            part_left.e3s * part_left.spans_total + part_right.e3s * part_right.spans_total
        ) / (part_left.spans_total + part_right.spans_total)
        assert whole.e3s == pytest.approx(combined)

    def test_random_spot_check_against_direct_count(self):
        rng = random.Random(5)
        items = []
        expected_total = 0
        for index in range(12):
            length = rng.randint(4, 10)
            initial = "".join(rng.choice("abcd ") for _ in range(length)).strip() or "abcd"
            improved = "".join(rng.choice("abcd ") for _ in range(rng.randint(4, 10))).strip() or "abc"
            lo = rng.randint(0, len(initial) - 2)
            hi = rng.randint(lo + 1, len(initial))
            segment_id = f"r:{index}"
            items.append((segment_id, initial, improved, [major(segment_id, lo, hi)]))
            expected_total += 1
        report = e3s_score(items)
        direct = sum(
            span_modified(align(initial, improved), spans[0])
            for _, initial, improved, spans in items
        )
        assert report.spans_total == expected_total
        assert report.spans_modified == direct
