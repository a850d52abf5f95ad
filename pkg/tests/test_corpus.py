from __future__ import annotations

import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import load_fixture
from ragkit.corpus import (
    CorpusStore,
    IngestError,
    chunk_spans,
    chunk_text,
    clean_text,
    clean_text_with_report,
    document_id,
    html_to_text,
    ingest,
)


# --- HTML extraction -------------------------------------------------------

def test_html_extraction_matches_frozen_fixtures():
    for case in load_fixture("html_fixtures.json"):
        assert html_to_text(case["html"]) == case["text"], case["html"]


def test_script_and_style_fully_suppressed():
    html = '<div>a<script>var x = "<p>no</p>";</script>b</div>'
    assert html_to_text(html) == "ab"


# --- Cleaning --------------------------------------------------------------

def test_clean_rules_and_report():
    text = "  a\r\nb\x00c\td!!!!e  f\n\n\ng  "
    cleaned, report = clean_text_with_report(text)
    assert cleaned == "a\nbc d!e f\ng"
    assert report["newlines_normalized"] == 1
    assert report["control_chars_removed"] == 1
    assert report["tabs_to_spaces"] == 1
    assert report["punctuation_runs_collapsed"] == 1
    assert report["space_runs_collapsed"] >= 1
    assert report["newline_runs_collapsed"] == 1
    assert report["edges_trimmed"] == 1


def test_punctuation_run_needs_three_repeats():
    assert clean_text("wait!!") == "wait!!"
    assert clean_text("wait!!!") == "wait!"
    assert clean_text("a...b") == "a.b"


def test_mixed_punctuation_runs_survive():
    # only runs of the same character collapse
    assert clean_text("?!?!?!") == "?!?!?!"


@settings(max_examples=200)
@given(st.text(max_size=300))
def test_clean_is_idempotent(text):
    once = clean_text(text)
    assert clean_text(once) == once


@given(st.text(max_size=300))
def test_clean_output_charset(text):
    cleaned = clean_text(text)
    for ch in cleaned:
        assert ch == "\n" or unicodedata.category(ch) != "Cc"
    assert "\t" not in cleaned
    assert "  " not in cleaned
    assert "\n\n" not in cleaned


# --- Chunking ---------------------------------------------------------------

def test_chunk_spans_regular_text_oracle():
    text = " ".join(["y" * 9] * 250)  # 2499 chars, a space every 10
    spans = chunk_spans(text, 1200)
    assert spans == [(0, 1199), (1200, 2399), (2400, 2499)]


def test_chunk_spans_unbreakable_text_hard_splits():
    text = "x" * 2500
    spans = chunk_spans(text, 1200)
    assert spans == [(0, 1200), (1200, 2400), (2400, 2500)]


def test_chunk_spans_rejects_bad_budget():
    with pytest.raises(ValueError):
        chunk_spans("abc", 0)


@settings(max_examples=150)
@given(st.text(alphabet=st.characters(blacklist_categories=("C",)), max_size=4000), st.integers(20, 400))
def test_chunk_invariants(raw, max_chars):
    text = clean_text(raw)
    spans = chunk_spans(text, max_chars)
    covered = set()
    last_end = 0
    for start, end in spans:
        assert 0 < end - start <= max_chars
        assert start >= last_end
        chunk = text[start:end]
        assert chunk == chunk.rstrip()
        assert not chunk[0].isspace()
        covered.update(range(start, end))
        last_end = end
    for i, ch in enumerate(text):
        if not ch.isspace():
            assert i in covered


def test_chunk_objects_carry_ids_and_ordinals():
    chunks = chunk_text("alpha " * 50, max_chars=40, doc_id="d1", source_url="u", source_type="forum")
    assert [c.ordinal for c in chunks] == list(range(len(chunks)))
    assert all(c.chunk_id == f"d1:{c.ordinal}" for c in chunks)
    assert all(len(c.text) <= 40 for c in chunks)


# --- Ingestion ---------------------------------------------------------------

def write_docs(tmp_path, n, body="Some narrative text about care routines. " * 20):
    paths = []
    for i in range(n):
        p = tmp_path / f"doc{i}.txt"
        p.write_text(f"Document {i}. {body}", encoding="utf-8")
        paths.append(str(p))
    return paths


def test_ingest_and_duplicate_skip(tmp_path):
    paths = write_docs(tmp_path, 3)
    store = CorpusStore(tmp_path / "corpus")
    report = ingest([(p, "web_article") for p in paths], store)
    assert report.n_added == 3
    assert report.n_skipped_duplicates == 0
    again = ingest([(paths[0], "web_article")], store)
    assert again.n_added == 0
    assert again.n_skipped_duplicates == 1
    assert store.document_count == 3


def test_ingest_html_file_extracts_text(tmp_path):
    page = tmp_path / "page.html"
    page.write_text("<html><body><p>First.</p><p>Second.</p></body></html>", encoding="utf-8")
    store = CorpusStore(tmp_path / "corpus")
    ingest([(str(page), "guideline")], store)
    chunk = next(iter(store.iter_chunks()))
    assert chunk.text == "First.\nSecond."
    assert chunk.source_type == "guideline"


def test_ingest_collects_per_item_errors(tmp_path):
    good = write_docs(tmp_path, 1)[0]
    store = CorpusStore(tmp_path / "corpus")
    report = ingest([(good, "web_article"), (str(tmp_path / "missing.txt"), "web_article")], store)
    assert report.n_added == 1
    assert len(report.errors) == 1
    assert "missing.txt" in report.errors[0]["input"]


def test_ingest_all_failed_raises(tmp_path):
    store = CorpusStore(tmp_path / "corpus")
    with pytest.raises(IngestError):
        ingest([(str(tmp_path / "nope.txt"), "web_article")], store)


def test_ingest_url_uses_fetch(tmp_path):
    def fetch(url: str) -> str:
        return f"<p>Fetched from {url}</p>"

    store = CorpusStore(tmp_path / "corpus")
    report = ingest([("https://kb.example/a", "web_article")], store, fetch=fetch)
    assert report.n_added == 1
    chunk = next(iter(store.iter_chunks()))
    assert chunk.source_url == "https://kb.example/a"
    assert chunk.text == "Fetched from https://kb.example/a"


def test_document_id_is_content_addressed():
    a = document_id("https://kb.example/a", "body")
    assert a == document_id("https://kb.example/a", "body")
    assert a != document_id("https://kb.example/a", "body2")
    assert a != document_id("https://kb.example/b", "body")


def test_store_reopen_sees_existing_content(tmp_path, small_corpus):
    reopened = CorpusStore(small_corpus.directory)
    assert reopened.document_count == small_corpus.document_count
    assert reopened.chunk_count == small_corpus.chunk_count
