#!/usr/bin/env python3
"""Standalone oracle that computes expected BLEU/ROUGE/chrF values for the frozen test fixtures.

Implements the pinned metric definitions with naive loops and no shared code with
the ragkit package. Run it to (re)generate tests/data/metric_fixtures.json; the
test suite compares the package implementation against the frozen output and
never imports this file.

Pinned definitions:
  tokenizer   lowercase, split on Unicode whitespace, each Unicode punctuation
              character (category P*) detached as its own token
  BLEU        geometric mean of clipped n-gram precisions n=1..4; add-1 smoothing
              on numerator and denominator for n>=2 only when the raw clipped
              count is 0; brevity penalty exp(1 - r/c) when c < r
  ROUGE-N     clipped n-gram overlap F1; ROUGE-L is LCS-based F1
  chrF        character n-grams n=1..6 over whitespace-stripped text, beta=2,
              averaged over orders where either side has at least one n-gram, x100
"""

from __future__ import annotations

import json
import math
import unicodedata
from pathlib import Path

OUT_PATH = Path(__file__).resolve().parent.parent / "tests" / "data" / "metric_fixtures.json"


def oracle_tokenize(text):
    tokens = []
    current = ""
    for ch in text.lower():
        if ch.isspace():
            if current:
                tokens.append(current)
                current = ""
        elif unicodedata.category(ch).startswith("P"):
            if current:
                tokens.append(current)
                current = ""
            tokens.append(ch)
        else:
            current += ch
    if current:
        tokens.append(current)
    return tokens


def count_ngrams(tokens, n):
    counts = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def clipped_overlap(cand_counts, ref_counts):
    total = 0
    for gram, c in cand_counts.items():
        r = ref_counts.get(gram, 0)
        total += c if c < r else r
    return total


def oracle_bleu(candidate, reference, max_n=4):
    cand = oracle_tokenize(candidate)
    ref = oracle_tokenize(reference)
    if not ref:
        raise ValueError("empty reference")
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = count_ngrams(cand, n)
        ref_counts = count_ngrams(ref, n)
        matched = clipped_overlap(cand_counts, ref_counts)
        total = sum(cand_counts.values())
        if n >= 2 and matched == 0:
            precision = (matched + 1.0) / (total + 1.0)
        elif total > 0:
            precision = matched / total
        else:
            precision = 0.0
        if precision == 0.0:
            return 0.0
        log_sum += math.log(precision)
    if len(cand) < len(ref):
        brevity = math.exp(1.0 - len(ref) / len(cand))
    else:
        brevity = 1.0
    return brevity * math.exp(log_sum / max_n)


def oracle_rouge_n(candidate, reference, n):
    cand_counts = count_ngrams(oracle_tokenize(candidate), n)
    ref_counts = count_ngrams(oracle_tokenize(reference), n)
    overlap = clipped_overlap(cand_counts, ref_counts)
    cand_total = sum(cand_counts.values())
    ref_total = sum(ref_counts.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def oracle_rouge_l(candidate, reference):
    cand = oracle_tokenize(candidate)
    ref = oracle_tokenize(reference)
    if not cand or not ref:
        return 0.0
    # Full DP table, no rolling-row tricks: this is the slow reference path.
    table = [[0] * (len(ref) + 1) for _ in range(len(cand) + 1)]
    for i in range(1, len(cand) + 1):
        for j in range(1, len(ref) + 1):
            if cand[i - 1] == ref[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    lcs = table[len(cand)][len(ref)]
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def strip_whitespace(text):
    return "".join(ch for ch in text if not ch.isspace())


def oracle_chrf(candidate, reference, n_max=6, beta=2.0):
    cand = strip_whitespace(candidate)
    ref = strip_whitespace(reference)
    beta_sq = beta * beta
    f_scores = []
    for n in range(1, n_max + 1):
        cand_counts = {}
        for i in range(len(cand) - n + 1):
            gram = cand[i : i + n]
            cand_counts[gram] = cand_counts.get(gram, 0) + 1
        ref_counts = {}
        for i in range(len(ref) - n + 1):
            gram = ref[i : i + n]
            ref_counts[gram] = ref_counts.get(gram, 0) + 1
        cand_total = sum(cand_counts.values())
        ref_total = sum(ref_counts.values())
        if cand_total == 0 and ref_total == 0:
            continue
        overlap = clipped_overlap(cand_counts, ref_counts)
        precision = overlap / cand_total if cand_total else 0.0
        recall = overlap / ref_total if ref_total else 0.0
        denom = beta_sq * precision + recall
        if denom == 0.0:
            f_scores.append(0.0)
        else:
            f_scores.append((1.0 + beta_sq) * precision * recall / denom)
    if not f_scores:
        return 0.0
    return 100.0 * sum(f_scores) / len(f_scores)


FIXTURE_PAIRS = [
    ("identical short", "the cat sat", "the cat sat"),
    ("prefix of reference", "the cat sat", "the cat sat on the mat"),
    ("clipping stress", "the the the the", "the cat sat on the mat"),
    ("disjoint vocabulary", "purple elephants dimport", "quiet rivers flow gently"),
    ("single token match", "dementia", "dementia"),
    (
        "long paraphrase",
        "caregivers should set a positive mood and limit distractions before speaking",
        "set a positive mood for interaction and limit distractions and noise before you speak",
    ),
    (
        "punctuation heavy",
        "first, secure the doors; second, install alarms!",
        "first, secure all doors. second, install door alarms.",
    ),
    ("candidate longer than reference", "a b c d e f g h", "a b c d"),
    ("reference repeats", "to be or not to be", "to be to be to be"),
    (
        "citation markers",
        "use respite care [1] and support groups [2].",
        "use respite care [1] and local support groups [2].",
    ),
    ("case folding", "The CAT Sat", "the cat sat"),
    ("unicode accents", "café naïve résumé", "café naive resume"),
    (
        "numbers and units",
        "give 5 mg twice daily with food",
        "give 10 mg once daily with water",
    ),
    ("single char strings", "a", "b"),
    ("chrf hand example", "abc", "abd"),
    (
        "partial midsection overlap",
        "early signs include memory loss and confusion about time",
        "warning signs include memory loss and trouble with familiar tasks",
    ),
    (
        "shuffled words",
        "mood positive a set interaction for",
        "set a positive mood for interaction",
    ),
    (
        "sentence with newline",
        "keep routines simple.\navoid sudden changes.",
        "keep daily routines simple. avoid sudden changes in schedule.",
    ),
    (
        "long clinical sentence",
        "hospice care focuses on managing pain and other symptoms helping the patient remain comfortable in the late stage",
        "in the late stage hospice care focuses on comfort managing pain and other symptoms so the patient can remain comfortable",
    ),
    (
        "short answer vs long reference",
        "consult an elder law attorney",
        "to obtain power of attorney you should consult an experienced elder law attorney who specializes in estate planning",
    ),
]


def main():
    rows = []
    for name, candidate, reference in FIXTURE_PAIRS:
        rows.append(
            {
                "name": name,
                "candidate": candidate,
                "reference": reference,
                "bleu": oracle_bleu(candidate, reference),
                "rouge1": oracle_rouge_n(candidate, reference, 1),
                "rouge2": oracle_rouge_n(candidate, reference, 2),
                "rougeL": oracle_rouge_l(candidate, reference),
                "chrf": oracle_chrf(candidate, reference),
            }
        )
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(json.dumps(rows, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} fixture rows to {OUT_PATH}")
    spot = {r["name"]: r for r in rows}
    print("spot checks:")
    print("  chrf(abc, abd)      =", spot["chrf hand example"]["chrf"], "(expect 38.888...)")
    print("  bleu(prefix)        =", spot["prefix of reference"]["bleu"], "(expect exp(-1) = 0.367879...)")
    print("  rouge1(prefix)      =", spot["prefix of reference"]["rouge1"], "(expect 0.666...)")
    print("  p1 clipping fixture =", spot["clipping stress"]["bleu"])


if __name__ == "__main__":
    main()
