"""String metrics for translation comparison.

TER here is edit distance with phrase shifts: the greedy loop repeatedly
applies the single shift that most reduces the word edit distance, each
shift costing 1, then divides total edits by the reference length. The
shift search is pinned to one deterministic variant:

  * candidate phrases are contiguous hypothesis spans of length 1..10 that
    occur verbatim in the reference;
  * a candidate move removes the phrase and reinserts it at the index where
    it occurs in the reference;
  * only moves that strictly reduce the edit distance qualify;
  * ties break by (largest reduction, longest phrase, leftmost origin,
    smallest displacement, leftmost destination).

chrF is a character n-gram F-score (orders 1..6, beta=2, whitespace removed
before counting). BLEU is corpus-level 4-gram precision with brevity
penalty; zero-match precisions for orders >= 2 are add-one smoothed.
"""

from __future__ import annotations

import bisect
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

MAX_SHIFT_PHRASE = 10
CHRF_ORDER = 6
CHRF_BETA = 2.0
BLEU_ORDER = 4


class EmptyReference(DataError):
    """A reference token sequence was empty."""


class EmptyCorpus(DataError):
    """A corpus-level metric was asked to score zero pairs."""


class ScoreFileError(DataError):
    """A segment-score TSV was malformed."""


@dataclass(frozen=True)
class TokenSeq:
    tokens: tuple[str, ...]
    lang: str = "en"
    casing: str = "folded"

    def __post_init__(self):
        if any(not token for token in self.tokens):
            raise ValueError("TokenSeq cannot contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)


_NO_SPACE_LANGS = {"zh", "ja"}


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _split_edge_punct(word: str) -> list[str]:
    leading: list[str] = []
    while word and _is_punct(word[0]):
        leading.append(word[0])
        word = word[1:]
    trailing: list[str] = []
    while word and _is_punct(word[-1]):
        trailing.append(word[-1])
        word = word[:-1]
    trailing.reverse()
    middle = [word] if word else []
    return leading + middle + trailing


def tokenize(text: str, lang: str = "en", casing: str = "folded") -> TokenSeq:
    """Tokenize for word-level metrics.

    zh/ja treat every non-space character as a token; other languages split
    on whitespace and peel leading/trailing punctuation into separate
    tokens. casing="folded" lowercases first.
    """
    if casing not in ("folded", "preserved"):
        raise ValueError(f"unknown casing {casing!r}")
    if casing == "folded":
        text = text.lower()
    if lang in _NO_SPACE_LANGS:
        tokens: list[str] = [ch for ch in text if not ch.isspace()]
    else:
        tokens = []
        for word in text.split():
            tokens.extend(_split_edge_punct(word))
    return TokenSeq(tuple(tokens), lang=lang, casing=casing)


def word_edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Plain Levenshtein distance over tokens, unit costs."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i]
        for j, tok_b in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (tok_a != tok_b),
                )
            )
        previous = current
    return previous[-1]


def _phrase_occurrences(phrase: list[str], ref: list[str]) -> Iterable[int]:
    size = len(phrase)
    for j in range(len(ref) - size + 1):
        if ref[j : j + size] == phrase:
            yield j


def _best_shift(
    words: list[str], ref: list[str], distance: int
) -> tuple[list[str], int] | None:
    """Find the qualifying shift with the best tie-broken key, if any."""
    best_key = None
    best: tuple[list[str], int] | None = None
    for start in range(len(words)):
        max_len = min(MAX_SHIFT_PHRASE, len(words) - start)
        for length in range(1, max_len + 1):
            phrase = words[start : start + length]
            for dest in _phrase_occurrences(phrase, ref):
                if dest == start:
                    continue
                candidate = words[:start] + words[start + length :]
                candidate[dest:dest] = phrase
                if candidate == words:
                    continue
                new_distance = word_edit_distance(candidate, ref)
                gain = distance - new_distance
                if gain <= 0:
                    continue
                key = (-gain, -length, start, abs(dest - start), dest)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (candidate, new_distance)
    return best


def ter_edits(hyp: TokenSeq, ref: TokenSeq) -> tuple[int, int]:
    """Total edits (shifts + remaining edit distance) and the reference length."""
    if not ref.tokens:
        raise EmptyReference("TER needs a nonempty reference")
    words = list(hyp.tokens)
    ref_words = list(ref.tokens)
    distance = word_edit_distance(words, ref_words)
    shifts = 0
    while True:
        shifted = _best_shift(words, ref_words, distance)
        if shifted is None:
            break
        words, distance = shifted
        shifts += 1
    return shifts + distance, len(ref_words)


def ter(hyp: TokenSeq, ref: TokenSeq) -> float:
    """Translation edit rate: edits (including shifts) per reference token."""
    edits, ref_len = ter_edits(hyp, ref)
    return edits / ref_len


def corpus_ter(pairs: Sequence[tuple[TokenSeq, TokenSeq]]) -> float:
    """Micro-averaged corpus TER on a 0-100 scale: total edits / total ref tokens."""
    if not pairs:
        raise EmptyCorpus("corpus TER over zero pairs")
    total_edits = 0
    total_ref = 0
    for index, (hyp, ref) in enumerate(pairs):
        try:
            edits, ref_len = ter_edits(hyp, ref)
        except EmptyReference:
            raise EmptyReference(f"pair {index}: empty reference") from None
        total_edits += edits
        total_ref += ref_len
    return 100.0 * total_edits / total_ref


def _char_ngrams(text: str, order: int) -> Counter:
    return Counter(text[i : i + order] for i in range(len(text) - order + 1))


def _strip_whitespace(text: str) -> str:
    return "".join(ch for ch in text if not ch.isspace())


def chrf(hyp: str, ref: str) -> float:
    """Character n-gram F-score in [0, 100]."""
    hyp = _strip_whitespace(hyp)
    ref = _strip_whitespace(ref)
    if not hyp and not ref:
        return 100.0
    precision_sum = 0.0
    recall_sum = 0.0
    orders = 0
    for order in range(1, CHRF_ORDER + 1):
        hyp_ngrams = _char_ngrams(hyp, order)
        ref_ngrams = _char_ngrams(ref, order)
        if not hyp_ngrams or not ref_ngrams:
            continue
        overlap = sum((hyp_ngrams & ref_ngrams).values())
        precision_sum += overlap / sum(hyp_ngrams.values())
        recall_sum += overlap / sum(ref_ngrams.values())
        orders += 1
    if orders == 0:
        return 0.0
    precision = precision_sum / orders
    recall = recall_sum / orders
    if precision + recall == 0.0:
        return 0.0
    beta_sq = CHRF_BETA**2
    return 100.0 * (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)


def _token_ngrams(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))


def corpus_bleu(pairs: Sequence[tuple[TokenSeq, TokenSeq]]) -> float:
    """Corpus BLEU in [0, 100] with micro-averaged n-gram counts.

    Orders >= 2 with zero matches use add-one smoothing ((m+1)/(t+1)); a
    zero unigram match is a hard 0.
    """
    if not pairs:
        raise EmptyCorpus("corpus BLEU over zero pairs")
    correct = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in pairs:
        hyp_len += len(hyp.tokens)
        ref_len += len(ref.tokens)
        for order in range(1, BLEU_ORDER + 1):
            hyp_ngrams = _token_ngrams(hyp.tokens, order)
            ref_ngrams = _token_ngrams(ref.tokens, order)
            correct[order - 1] += sum((hyp_ngrams & ref_ngrams).values())
            total[order - 1] += sum(hyp_ngrams.values())
    if correct[0] == 0:
        return 0.0
    log_sum = 0.0
    for order in range(1, BLEU_ORDER + 1):
        matched, attempted = correct[order - 1], total[order - 1]
        if order == 1:
            precision = matched / attempted
        elif matched == 0:
            precision = (matched + 1) / (attempted + 1)
        else:
            precision = matched / attempted
        log_sum += math.log(precision)
    brevity = 1.0
    if hyp_len < ref_len:
        brevity = math.exp(1 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_sum / BLEU_ORDER)


@dataclass(frozen=True)
class AdherenceRow:
    """Corpus TER of post-edits against the zero-shot and initial translations."""

    system: str
    ter_pe_vs_zeroshot: float
    ter_pe_vs_initial: float

    @property
    def closer_to(self) -> str:
        if self.ter_pe_vs_initial < self.ter_pe_vs_zeroshot:
            return "initial"
        if self.ter_pe_vs_initial > self.ter_pe_vs_zeroshot:
            return "zeroshot"
        return "tie"


def adherence_report(
    triples: Sequence[tuple[str, str, str]],
    lang: str,
    system: str,
    casing: str = "folded",
) -> AdherenceRow:
    """Score (post-edit, initial, zero-shot) triples: is the post-edit closer
    to the translation it was asked to fix, or to a from-scratch translation?
    """
    if not triples:
        raise EmptyCorpus("adherence report over zero triples")
    pe = [tokenize(t_prime, lang, casing) for t_prime, _, _ in triples]
    initial = [tokenize(t, lang, casing) for _, t, _ in triples]
    zeroshot = [tokenize(z, lang, casing) for _, _, z in triples]
    vs_zeroshot = corpus_ter(list(zip(pe, zeroshot)))
    vs_initial = corpus_ter(list(zip(pe, initial)))
    return AdherenceRow(system, vs_zeroshot, vs_initial)


def gain_histogram(
    deltas: Sequence[float], bin_width: float
) -> tuple[list[tuple[float, float, int]], float]:
    """Histogram of per-segment score deltas with zero-aligned bins.

    Returns (bins, nondegradation_fraction) where each bin is (lo, hi, count),
    bins are half-open except the topmost (closed so the maximum lands inside),
    and the fraction counts deltas >= 0.
    """
    if not deltas:
        raise EmptyCorpus("histogram over zero deltas")
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    lo_k = math.floor(min(deltas) / bin_width + 1e-9)
    hi_k = math.ceil(max(deltas) / bin_width - 1e-9)
    if hi_k <= lo_k:
        hi_k = lo_k + 1
    edges = [k * bin_width for k in range(lo_k, hi_k + 1)]
    counts = [0] * (len(edges) - 1)
    for delta in deltas:
        idx = bisect.bisect_right(edges, delta) - 1
        idx = min(max(idx, 0), len(counts) - 1)
        counts[idx] += 1
    bins = [(edges[i], edges[i + 1], counts[i]) for i in range(len(counts))]
    fraction = sum(1 for delta in deltas if delta >= 0) / len(deltas)
    return bins, fraction


def histogram_tsv(bins: Sequence[tuple[float, float, int]], fraction: float) -> str:
    lines = [f"{lo:g}\t{hi:g}\t{count}" for lo, hi, count in bins]
    lines.append(f"nondegradation_fraction={fraction:g}")
    return "\n".join(lines) + "\n"


def load_external_scores(path: str | Path) -> dict[str, float]:
    """Load a segment_id<TAB>score TSV into a map; duplicates are an error."""
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split("\t")
            if line_no == 1 and cells[0] == "segment_id":
                continue
            if len(cells) < 2:
                raise ScoreFileError(f"{path}: line {line_no}: expected segment_id<TAB>score")
            segment_id, raw = cells[0], cells[1]
            if segment_id in scores:
                raise ScoreFileError(f"{path}: line {line_no}: duplicate segment id {segment_id!r}")
            try:
                scores[segment_id] = float(raw)
            except ValueError:
                raise ScoreFileError(
                    f"{path}: line {line_no}: non-numeric score {raw!r}"
                ) from None
    return scores
