"""Gold question-answer datasets: load/save, dedup, seeded split, leakage check, synthesis.

Near-duplicate detection uses Jaccard similarity of word 5-gram sets over
normalized questions; questions shorter than five words only ever collide
through the exact-duplicate rule.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from .corpus import Chunk
from .llm_client import ChatBackend, generate
from .prompt import build_prompt, vanilla_prompt
from .retriever import Retriever

NGRAM_SIZE = 5
JACCARD_THRESHOLD = 0.8


class DatasetError(Exception):
    """Malformed dataset file or invalid operation arguments."""


@dataclass(frozen=True)
class QAPair:
    id: str
    question: str
    answer: str
    context: str = ""
    references: tuple[str, ...] = ()
    split: str | None = None
    unvalidated: bool = False


@dataclass(frozen=True)
class SplitManifest:
    n_total: int
    n_train: int
    n_test: int
    seed: int


@dataclass(frozen=True)
class LeakageReport:
    passed: bool
    offending: tuple[dict[str, str], ...]


def load(path: str | Path) -> list[QAPair]:
    pairs: list[QAPair] = []
    seen_ids: set[str] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON: {exc}") from exc
            for key in ("id", "question", "answer"):
                if not obj.get(key):
                    raise DatasetError(f"line {lineno}: missing or empty {key!r}")
            if obj["id"] in seen_ids:
                raise DatasetError(f"line {lineno}: duplicate id {obj['id']!r}")
            seen_ids.add(obj["id"])
            split = obj.get("split")
            if split is not None and split not in ("train", "test"):
                raise DatasetError(f"line {lineno}: split must be train or test, got {split!r}")
            pairs.append(
                QAPair(
                    id=obj["id"],
                    question=obj["question"],
                    answer=obj["answer"],
                    context=obj.get("context", ""),
                    references=tuple(obj.get("references", ())),
                    split=split,
                    unvalidated=bool(obj.get("unvalidated", False)),
                )
            )
    return pairs


def save(pairs: Sequence[QAPair], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for pair in pairs:
            record: dict = {
                "id": pair.id,
                "question": pair.question,
                "answer": pair.answer,
                "context": pair.context,
                "references": list(pair.references),
            }
            if pair.split is not None:
                record["split"] = pair.split
            if pair.unvalidated:
                record["unvalidated"] = True
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


def normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.lower()).strip()


def word_ngrams(text: str, n: int = NGRAM_SIZE) -> set[tuple[str, ...]]:
    words = normalize(text).split()
    return {tuple(words[i : i + n]) for i in range(len(words) - n + 1)}


def jaccard(a: set, b: set) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def dedup(pairs: Sequence[QAPair], threshold: float = JACCARD_THRESHOLD) -> tuple[list[QAPair], int]:
    """Drop exact duplicates (normalized question+answer) and near-duplicate questions.

    First occurrence wins; the second element is the number removed.
    """
    kept: list[QAPair] = []
    kept_grams: list[set[tuple[str, ...]]] = []
    seen_exact: set[str] = set()
    removed = 0
    for pair in pairs:
        exact_key = normalize(pair.question) + "\x00" + normalize(pair.answer)
        if exact_key in seen_exact:
            removed += 1
            continue
        grams = word_ngrams(pair.question)
        if any(jaccard(grams, other) >= threshold for other in kept_grams):
            removed += 1
            continue
        seen_exact.add(exact_key)
        kept.append(pair)
        kept_grams.append(grams)
    return kept, removed


def split(pairs: Sequence[QAPair], n_train: int, seed: int) -> tuple[list[QAPair], SplitManifest]:
    """Label a seeded uniform sample as train and the rest as test, order preserved."""
    n_total = len(pairs)
    if n_train >= n_total:
        raise DatasetError(f"n_train {n_train} leaves no test items in a dataset of {n_total}")
    if n_train < 1:
        raise DatasetError("n_train must be >= 1")
    train_indices = set(random.Random(seed).sample(range(n_total), n_train))
    labeled = [
        replace(pair, split="train" if i in train_indices else "test")
        for i, pair in enumerate(pairs)
    ]
    manifest = SplitManifest(
        n_total=n_total, n_train=n_train, n_test=n_total - n_train, seed=seed
    )
    return labeled, manifest


def leakage_check(
    train: Sequence[QAPair],
    test: Sequence[QAPair],
    threshold: float = JACCARD_THRESHOLD,
) -> LeakageReport:
    """Fail when any test question duplicates or near-duplicates a train question."""
    offending: list[dict[str, str]] = []
    train_norms = [(pair.id, normalize(pair.question)) for pair in train]
    train_grams = [(pair.id, word_ngrams(pair.question)) for pair in train]
    for pair in test:
        norm = normalize(pair.question)
        grams = word_ngrams(pair.question)
        for train_id, train_norm in train_norms:
            if norm == train_norm:
                offending.append({"train_id": train_id, "test_id": pair.id, "reason": "exact question match"})
        for train_id, other in train_grams:
            value = jaccard(grams, other)
            if value >= threshold:
                offending.append(
                    {"train_id": train_id, "test_id": pair.id, "reason": f"question jaccard {value:.3f} >= {threshold}"}
                )
    return LeakageReport(passed=not offending, offending=tuple(offending))


def question_seed_prompt(chunk_text: str) -> str:
    return (
        "Write one clear question that the following passage answers. "
        "Reply with the question only.\n\n" + chunk_text
    )


def synthesize_qa(
    seed_chunks: Sequence[Chunk],
    retriever: Retriever,
    backend: ChatBackend,
    k: int = 3,
    char_budget: int | None = None,
) -> tuple[list[QAPair], list[dict[str, str]]]:
    """Draft unvalidated pairs: chunk -> question -> retrieve -> cited answer.

    Backend failures are collected per seed; the drafts that succeeded are
    still returned.
    """
    from .citations import parse_answer

    drafts: list[QAPair] = []
    errors: list[dict[str, str]] = []
    for chunk in seed_chunks:
        try:
            question_result = generate(backend, vanilla_prompt(question_seed_prompt(chunk.text)))
            question = question_result.text.strip()
            if not question:
                raise DatasetError("backend produced an empty question")
            ctx = retriever.retrieve(question, k=k)
            kwargs = {} if char_budget is None else {"char_budget": char_budget}
            answer_result = generate(backend, build_prompt(question, ctx, **kwargs))
            references = tuple(r.url for r in parse_answer(answer_result.text).references)
            drafts.append(
                QAPair(
                    id=f"draft-{chunk.chunk_id}",
                    question=question,
                    answer=answer_result.text,
                    context=chunk.text,
                    references=references,
                    unvalidated=True,
                )
            )
        except Exception as exc:
            errors.append({"chunk_id": chunk.chunk_id, "error": str(exc)})
    return drafts, errors
