"""Intrinsic answer-quality metrics: BLEU, ROUGE-1/2/L, chrF, semantic similarity.

All text metrics share one pinned tokenizer: lowercase, split on Unicode
whitespace, every Unicode punctuation character detached as its own token.
BLEU uses add-1 smoothing on numerator and denominator for orders >= 2 when
the raw clipped count is zero, and the exp(1 - r/c) brevity penalty for short
candidates. chrF works on character n-grams of whitespace-stripped text with
beta = 2, averaging over orders where either side has at least one n-gram.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .embeddings import Embedder, cosine_similarity

BLEU_MAX_N = 4
CHRF_N_MAX = 6
CHRF_BETA = 2.0

METRIC_NAMES = ("bleu", "rouge1", "rouge2", "rougeL", "chrf", "semantic")

METRIC_CONFIG = {
    "tokenizer": "lowercase, whitespace split, punctuation detached",
    "bleu_max_n": BLEU_MAX_N,
    "bleu_smoothing": "add-1 numerator and denominator for n>=2 when clipped count is 0",
    "chrf_n_max": CHRF_N_MAX,
    "chrf_beta": CHRF_BETA,
    "rouge_variant": "F1 with per-item precision/recall in extras",
    "semantic": "sentence-embedding cosine clipped to [0,1]",
}


def tokenize(text: str) -> list[str]:
    padded = []
    for ch in text.lower():
        if unicodedata.category(ch).startswith("P"):
            padded.append(f" {ch} ")
        else:
            padded.append(ch)
    return "".join(padded).split()


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped(cand: Counter, ref: Counter) -> int:
    return sum(min(count, ref[gram]) for gram, count in cand.items())


def modified_precision(candidate: str, reference: str, n: int) -> float:
    """Clipped n-gram precision; 0 when the candidate has no n-grams."""
    cand = ngram_counts(tokenize(candidate), n)
    total = sum(cand.values())
    if total == 0:
        return 0.0
    return _clipped(cand, ngram_counts(tokenize(reference), n)) / total


def bleu(candidate: str, reference: str, max_n: int = BLEU_MAX_N) -> float:
    cand_tokens = tokenize(candidate)
    ref_tokens = tokenize(reference)
    if not ref_tokens:
        raise ValueError("empty reference")
    if not cand_tokens:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand = ngram_counts(cand_tokens, n)
        ref = ngram_counts(ref_tokens, n)
        matched = _clipped(cand, ref)
        total = sum(cand.values())
        if n >= 2 and matched == 0:
            precision = (matched + 1.0) / (total + 1.0)
        elif total > 0:
            precision = matched / total
        else:
            precision = 0.0
        if precision == 0.0:
            return 0.0
        log_sum += math.log(precision)
    c, r = len(cand_tokens), len(ref_tokens)
    brevity = math.exp(1.0 - r / c) if c < r else 1.0
    return brevity * math.exp(log_sum / max_n)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge_n_parts(candidate: str, reference: str, n: int) -> tuple[float, float, float]:
    cand = ngram_counts(tokenize(candidate), n)
    ref = ngram_counts(tokenize(reference), n)
    overlap = _clipped(cand, ref)
    cand_total = sum(cand.values())
    ref_total = sum(ref.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return precision, recall, _f1(precision, recall)


def rouge_n(candidate: str, reference: str, n: int) -> float:
    return rouge_n_parts(candidate, reference, n)[2]


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Rolling single row: only the previous row of the table is ever needed.
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            if token == other:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l_parts(candidate: str, reference: str) -> tuple[float, float, float]:
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0, 0.0, 0.0
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return precision, recall, _f1(precision, recall)


def rouge_l(candidate: str, reference: str) -> float:
    return rouge_l_parts(candidate, reference)[2]


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def chrf(candidate: str, reference: str, n_max: int = CHRF_N_MAX, beta: float = CHRF_BETA) -> float:
    cand = "".join(ch for ch in candidate if not ch.isspace())
    ref = "".join(ch for ch in reference if not ch.isspace())
    beta_sq = beta * beta
    scores = []
    for n in range(1, n_max + 1):
        cand_counts = _char_ngrams(cand, n)
        ref_counts = _char_ngrams(ref, n)
        cand_total = sum(cand_counts.values())
        ref_total = sum(ref_counts.values())
        if cand_total == 0 and ref_total == 0:
            continue
        overlap = _clipped(cand_counts, ref_counts)
        precision = overlap / cand_total if cand_total else 0.0
        recall = overlap / ref_total if ref_total else 0.0
        denom = beta_sq * precision + recall
        scores.append((1.0 + beta_sq) * precision * recall / denom if denom else 0.0)
    if not scores:
        return 0.0
    return 100.0 * sum(scores) / len(scores)


def semantic_similarity(candidate: str, reference: str, embedder: Embedder) -> float:
    if not candidate or not reference:
        raise ValueError("semantic similarity requires non-empty inputs")
    vectors = embedder.embed([candidate, reference])
    value = cosine_similarity(vectors[0], vectors[1])
    return max(0.0, min(1.0, value))


@dataclass(frozen=True)
class PairScores:
    id: str
    bleu: float
    rouge1: float
    rouge2: float
    rougeL: float
    chrf: float
    semantic: float
    candidate_empty: bool = False
    extras: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class MetricReport:
    per_item: tuple[PairScores, ...]
    aggregates: dict[str, float]
    n_items: int
    config: dict


def evaluate_pair(candidate: str, reference: str, embedder: Embedder, id: str = "") -> PairScores:
    """Score one candidate; an empty candidate is all zeros with a flag, not an error."""
    if not reference or not tokenize(reference):
        raise ValueError(f"empty reference for item {id!r}")
    if not candidate.strip():
        return PairScores(
            id=id, bleu=0.0, rouge1=0.0, rouge2=0.0, rougeL=0.0, chrf=0.0,
            semantic=0.0, candidate_empty=True,
        )
    r1_p, r1_r, r1_f = rouge_n_parts(candidate, reference, 1)
    r2_p, r2_r, r2_f = rouge_n_parts(candidate, reference, 2)
    rl_p, rl_r, rl_f = rouge_l_parts(candidate, reference)
    return PairScores(
        id=id,
        bleu=bleu(candidate, reference),
        rouge1=r1_f,
        rouge2=r2_f,
        rougeL=rl_f,
        chrf=chrf(candidate, reference),
        semantic=semantic_similarity(candidate, reference, embedder),
        candidate_empty=False,
        extras={
            "rouge1_precision": r1_p, "rouge1_recall": r1_r,
            "rouge2_precision": r2_p, "rouge2_recall": r2_r,
            "rougeL_precision": rl_p, "rougeL_recall": rl_r,
        },
    )


def evaluate_set(
    items: Sequence[tuple[str, str, str]],
    embedder: Embedder,
) -> MetricReport:
    """Score (id, candidate, reference) triples; aggregates are arithmetic means."""
    per_item = tuple(evaluate_pair(cand, ref, embedder, id=item_id) for item_id, cand, ref in items)
    n = len(per_item)
    aggregates = {
        name: (sum(getattr(p, name) for p in per_item) / n if n else 0.0)
        for name in METRIC_NAMES
    }
    return MetricReport(per_item=per_item, aggregates=aggregates, n_items=n, config=dict(METRIC_CONFIG))


def scores_to_dict(p: PairScores) -> dict:
    return {
        "id": p.id,
        "bleu": p.bleu,
        "rouge1": p.rouge1,
        "rouge2": p.rouge2,
        "rougeL": p.rougeL,
        "chrf": p.chrf,
        "semantic": p.semantic,
        "candidate_empty": p.candidate_empty,
        "extras": dict(p.extras),
    }


def report_to_dict(report: MetricReport) -> dict:
    return {
        "n_items": report.n_items,
        "aggregates": dict(report.aggregates),
        "config": dict(report.config),
        "per_item": [scores_to_dict(p) for p in report.per_item],
    }
