"""Text normalization and reference-based generation metrics.

Everything here is a pure function over plain token lists, so the same
normalization convention backs every score (F1 and its knowledge/rare
variants, BLEU-4, ROUGE-L, answer presence) and they stay mutually
consistent.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

TokenSequence = list[str]

# Characters stripped during normalization; replaced by spaces before splitting.
PUNCTUATION = set(".,!?;:'\"()[]-")
ARTICLES = frozenset({"a", "an", "the"})

BLEU_EPSILON = 1e-9
ROUGE_BETA = 1.2

METRIC_COLUMNS = ("f1", "kf1", "pkf1", "rf1", "bleu4", "rougeL", "ap", "gap")


def normalize(text: str) -> TokenSequence:
    """Lowercase, strip punctuation, drop articles, split on whitespace.

    Idempotent: normalizing a re-joined result yields the same tokens.
    """
    lowered = text.lower()
    cleaned = "".join(" " if ch in PUNCTUATION else ch for ch in lowered)
    return [tok for tok in cleaned.split() if tok not in ARTICLES]


def unigram_f1(pred: Sequence[str], ref: Sequence[str]) -> float:
    """Bag-of-words F1 between two token sequences; 0.0 if either is empty."""
    if not pred or not ref:
        return 0.0
    overlap = sum((Counter(pred) & Counter(ref)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred)
    recall = overlap / len(ref)
    return 2 * precision * recall / (precision + recall)


# Knowledge F1 scores a response against a knowledge sentence; it is the same
# function as unigram_f1, only the second argument differs by convention
# (gold knowledge for KF1, the pipeline's own prediction for PKF1).
knowledge_f1 = unigram_f1


def contains_tokens(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    """True iff needle occurs as a contiguous subsequence of haystack."""
    if not needle:
        return False
    n = len(needle)
    target = list(needle)
    return any(list(haystack[i : i + n]) == target for i in range(len(haystack) - n + 1))


def answer_present(response: str, answers: Iterable[str]) -> int:
    """1 iff some normalized answer appears as a contiguous token run in the response.

    Token-level matching avoids numeric-substring false positives ("2014" does
    not match "20145"). Answers that normalize to nothing are ignored; if every
    answer does, the check is unanswerable and raises ValueError.
    """
    needles = [normalize(a) for a in answers]
    needles = [n for n in needles if n]
    if not needles:
        raise ValueError("unanswerable check: every answer normalizes to no tokens")
    tokens = normalize(response)
    return int(any(contains_tokens(tokens, needle) for needle in needles))


@dataclass(frozen=True)
class RarityTable:
    """Frequent-word set used to restrict F1 to infrequent words.

    frequent_set is the minimal prefix of the frequency-sorted vocabulary
    (ties broken lexicographically) whose cumulative mass reaches cutoff_mass;
    a word is rare iff absent from it.
    """

    frequent_set: frozenset[str]
    cutoff_mass: float
    corpus_size: int

    def is_rare(self, word: str) -> bool:
        return word not in self.frequent_set

    def filter_rare(self, tokens: Sequence[str]) -> TokenSequence:
        return [t for t in tokens if t not in self.frequent_set]

    def to_json(self) -> str:
        return json.dumps(
            {"cutoff_mass": self.cutoff_mass, "frequent": sorted(self.frequent_set)},
            ensure_ascii=False,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "RarityTable":
        data = json.loads(text)
        # corpus_size is not part of the wire format; loaded tables carry 0.
        return cls(
            frequent_set=frozenset(data["frequent"]),
            cutoff_mass=float(data["cutoff_mass"]),
            corpus_size=0,
        )

    @classmethod
    def load(cls, path: str | Path) -> "RarityTable":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def build_rarity_table(references: Iterable[str], cutoff_mass: float) -> RarityTable:
    """Count normalized tokens over the references and mark the top words frequent.

    Words are sorted by (count desc, word asc); the frequent set is the minimal
    prefix whose cumulative frequency mass is >= cutoff_mass.
    """
    if not 0.0 < cutoff_mass < 1.0:
        raise ValueError(f"cutoff_mass must be in (0, 1), got {cutoff_mass}")
    counts: Counter[str] = Counter()
    for ref in references:
        counts.update(normalize(ref))
    if not counts:
        raise ValueError("empty reference corpus")
    total = sum(counts.values())
    frequent: set[str] = set()
    mass = 0
    for word, count in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        frequent.add(word)
        mass += count
        if mass / total >= cutoff_mass:
            break
    return RarityTable(frequent_set=frozenset(frequent), cutoff_mass=cutoff_mass, corpus_size=total)


def rare_f1(pred: Sequence[str], ref: Sequence[str], rarity: RarityTable) -> float:
    """unigram_f1 after deleting frequent words from both sides; 0.0 when both empty."""
    filtered_pred = rarity.filter_rare(pred)
    filtered_ref = rarity.filter_rare(ref)
    if not filtered_pred and not filtered_ref:
        return 0.0
    return unigram_f1(filtered_pred, filtered_ref)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter[tuple[str, ...]]:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(pred: Sequence[str], ref: Sequence[str]) -> float:
    """Sentence BLEU-4 with epsilon smoothing on zero counts and a brevity penalty.

    Each modified n-gram precision that would be zero (no matches, or the
    prediction is shorter than n) is replaced by BLEU_EPSILON so the geometric
    mean stays defined; short hypotheses score near zero instead of crashing.
    """
    if not pred:
        return 0.0
    log_sum = 0.0
    for n in range(1, 5):
        total = len(pred) - n + 1
        if total <= 0:
            precision = BLEU_EPSILON
        else:
            matches = sum((_ngram_counts(pred, n) & _ngram_counts(ref, n)).values())
            precision = matches / total if matches > 0 else BLEU_EPSILON
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / 4.0)
    brevity = math.exp(1.0 - len(ref) / len(pred)) if len(pred) < len(ref) else 1.0
    return brevity * geo_mean


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Rolling single-row DP; quadratic time, linear space.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pred: Sequence[str], ref: Sequence[str]) -> float:
    """LCS-based ROUGE-L F-measure with beta = 1.2; 0.0 if either side is empty."""
    if not pred or not ref:
        return 0.0
    lcs = _lcs_length(pred, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(pred)
    recall = lcs / len(ref)
    beta_sq = ROUGE_BETA**2
    return (1 + beta_sq) * precision * recall / (recall + beta_sq * precision)


@dataclass
class MetricReport:
    """Per-example metric rows plus their arithmetic-mean aggregates.

    per_example rows are dicts with an "example_id" key and a subset of
    METRIC_COLUMNS; aggregate holds the mean of each column over the rows
    that define it, and counts records how many rows did (and did not).
    """

    per_example: list[dict] = field(default_factory=list)
    aggregate: dict[str, float] = field(default_factory=dict)
    counts: dict[str, dict[str, int]] = field(default_factory=dict)


def build_report(rows: Sequence[dict]) -> MetricReport:
    """Aggregate per-example rows into a MetricReport (mean per defined column)."""
    rows = sorted(rows, key=lambda r: r["example_id"])
    aggregate: dict[str, float] = {}
    counts: dict[str, dict[str, int]] = {}
    for column in METRIC_COLUMNS:
        values = [row[column] for row in rows if column in row]
        counts[column] = {"evaluated": len(values), "skipped": len(rows) - len(values)}
        if values:
            aggregate[column] = fmean(values)
    return MetricReport(per_example=list(rows), aggregate=aggregate, counts=counts)
