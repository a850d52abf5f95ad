from __future__ import annotations

import json

import pytest

from conftest import build_index, make_documents, populate_corpus
from ragkit import qa_dataset
from ragkit.corpus import CorpusStore
from ragkit.embeddings import DeterministicEmbedder
from ragkit.llm_client import StubBackend
from ragkit.qa_dataset import DatasetError, QAPair, question_seed_prompt
from ragkit.retriever import Retriever


def pair(i: int, question: str | None = None, answer: str | None = None, **kw) -> QAPair:
    return QAPair(
        id=f"q{i}",
        question=question or f"Question number {i} about topic {i}?",
        answer=answer or f"Answer body for item {i}.",
        **kw,
    )


# --- persistence ----------------------------------------------------------------

def test_round_trip_preserves_fields(tmp_path):
    pairs = [
        pair(1, references=("https://kb.example/a",), split="train"),
        pair(2, split="test"),
        pair(3, unvalidated=True),
    ]
    path = tmp_path / "data.jsonl"
    qa_dataset.save(pairs, path)
    loaded = qa_dataset.load(path)
    assert loaded == pairs


def test_save_omits_default_flags(tmp_path):
    path = tmp_path / "data.jsonl"
    qa_dataset.save([pair(1)], path)
    row = json.loads(path.read_text().splitlines()[0])
    assert "split" not in row
    assert "unvalidated" not in row


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "question": "q?", "answer": "a"}\n{"question": "no id"}\n')
    with pytest.raises(DatasetError, match="line 2"):
        qa_dataset.load(path)


def test_load_rejects_bad_split_and_duplicate_ids(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "question": "q?", "answer": "x", "split": "dev"}\n')
    with pytest.raises(DatasetError):
        qa_dataset.load(path)
    path.write_text(
        '{"id": "a", "question": "q?", "answer": "x"}\n{"id": "a", "question": "r?", "answer": "y"}\n'
    )
    with pytest.raises(DatasetError, match="duplicate"):
        qa_dataset.load(path)


# --- similarity helpers ------------------------------------------------------------

def test_normalize_collapses_case_and_spaces():
    assert qa_dataset.normalize("  What   HELPS? ") == "what helps?"


def test_jaccard_bounds():
    grams = qa_dataset.word_ngrams("one two three four five six")
    other = qa_dataset.word_ngrams("totally different words here now ok")
    assert qa_dataset.jaccard(grams, grams) == 1.0
    assert qa_dataset.jaccard(grams, other) == 0.0
    assert qa_dataset.jaccard(set(), grams) == 0.0
    # below the n-gram size there is no near-dup signal, only the exact check
    assert qa_dataset.word_ngrams("short text") == set()


# --- dedup ---------------------------------------------------------------------------

def long_q(i: int, tail: str = "") -> str:
    return f"What should a caregiver do about situation {i} during the long evening routine{tail}?"


def test_exact_duplicates_removed():
    a = pair(1, question=long_q(1))
    b = QAPair(id="q2", question=a.question.upper(), answer=a.answer)
    kept, removed = qa_dataset.dedup([a, b])
    assert [p.id for p in kept] == ["q1"]
    assert removed == 1


def test_near_duplicate_questions_removed():
    a = pair(1, question="What should a caregiver do when evening wandering and restlessness begin at home?")
    b = pair(2, question="What should a caregiver do when evening wandering and restlessness begin at night?")
    c = pair(3, question="How is a power of attorney for finances arranged through an elder law attorney?")
    kept, removed = qa_dataset.dedup([a, b, c], threshold=0.5)
    assert [p.id for p in kept] == ["q1", "q3"]
    assert removed == 1


def test_dedup_idempotent():
    pairs = [pair(i, question=long_q(i)) for i in range(10)]
    once, _ = qa_dataset.dedup(pairs)
    twice, removed = qa_dataset.dedup(once)
    assert twice == once
    assert removed == 0


def test_self_concatenation_removes_original_count():
    pairs = [pair(i, question=long_q(i)) for i in range(20)]
    kept, removed = qa_dataset.dedup(pairs + pairs)
    assert removed == len(pairs)
    assert kept == pairs


# --- split ------------------------------------------------------------------------------

def test_split_is_deterministic_partition():
    pairs = [pair(i, question=long_q(i)) for i in range(30)]
    labeled_a, manifest = qa_dataset.split(pairs, n_train=20, seed=13)
    labeled_b, _ = qa_dataset.split(pairs, n_train=20, seed=13)
    assert labeled_a == labeled_b
    assert manifest.n_train == 20
    assert manifest.n_test == 10
    assert [p.id for p in labeled_a] == [p.id for p in pairs]
    assert sum(1 for p in labeled_a if p.split == "train") == 20
    assert sum(1 for p in labeled_a if p.split == "test") == 10


def test_split_seed_changes_assignment():
    pairs = [pair(i, question=long_q(i)) for i in range(30)]
    a, _ = qa_dataset.split(pairs, n_train=15, seed=1)
    b, _ = qa_dataset.split(pairs, n_train=15, seed=2)
    assert a != b


def test_split_rejects_bad_n_train():
    pairs = [pair(i) for i in range(3)]
    with pytest.raises(DatasetError):
        qa_dataset.split(pairs, n_train=3, seed=0)
    with pytest.raises(DatasetError):
        qa_dataset.split(pairs, n_train=0, seed=0)


# --- leakage -------------------------------------------------------------------------------

def test_leakage_check_passes_on_disjoint_questions():
    train = [pair(i, question=long_q(i)) for i in range(5)]
    test = [pair(100 + i, question=f"How does drafting document {i} for estate planning work in practice?") for i in range(3)]
    report = qa_dataset.leakage_check(train, test)
    assert report.passed
    assert report.offending == ()


def test_leakage_check_catches_exact_and_near_duplicates():
    train = [pair(1, question=long_q(1)), pair(2, question=long_q(2))]
    test = [
        pair(101, question=long_q(1).upper()),
        pair(102, question=long_q(2, tail=" today")),
    ]
    report = qa_dataset.leakage_check(train, test, threshold=0.5)
    assert not report.passed
    ids = {(o["train_id"], o["test_id"]) for o in report.offending}
    assert ("q1", "q101") in ids
    assert ("q2", "q102") in ids


# --- synthesis -----------------------------------------------------------------------------

def test_synthesize_drafts_and_collects_failures(tmp_path):
    store = CorpusStore(tmp_path / "corpus")
    populate_corpus(store, make_documents(3))
    retriever = Retriever(build_index(store), store, DeterministicEmbedder(64))
    chunks = sorted(store.iter_chunks(), key=lambda c: c.chunk_id)

    fixtures = {}
    for i, chunk in enumerate(chunks[:2]):
        question = f"Synthetic question {i} about {chunk.text.split()[1]}?"
        fixtures[question_seed_prompt(chunk.text)] = question
        fixtures[question] = f"Drafted answer {i}.\n\nReferences:\n[1] {chunk.source_url}"
    # chunk 3 has no fixture: its draft must fail without sinking the rest

    drafts, errors = qa_dataset.synthesize_qa(chunks, retriever, StubBackend("canned", fixtures), k=2)
    assert len(drafts) == 2
    assert len(errors) == 1
    assert errors[0]["chunk_id"] == chunks[2].chunk_id
    for draft in drafts:
        assert draft.unvalidated
        assert draft.id.startswith("draft-")
        assert draft.references
        assert draft.context
