"""Command-line umbrella: ingest, index, search, ask, eval, compare, dataset, audit, score, serve."""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click

from . import qa_dataset
from .citations import (
    audit as audit_answer,
    audit_to_dict,
    aggregate,
    parse_answer,
    stats_to_dict,
    with_liveness,
)
from .config import load_config
from .corpus import CorpusStore, IngestError, ingest as ingest_inputs
from .embeddings import DeterministicEmbedder
from .harness import EvalRunConfig, compare_runs, load_result, run_eval
from .llm_client import GenerationBackendConfig, StubBackend
from .metrics import evaluate_set, report_to_dict
from .prompt import DEFAULT_CHAR_BUDGET
from .retriever import Retriever
from .service import AskEngine, create_app_from_config
from .vector_store import EntryMeta, VectorStore

_JSON_KW = {"sort_keys": True, "ensure_ascii": False}


def _echo_json(obj, indent: int | None = 2) -> None:
    click.echo(json.dumps(obj, indent=indent, **_JSON_KW))


def _resolve_backend(spec: str, backend_url: str, model: str, dataset_path: str | None):
    """Backend spec: http (with --backend-url/--model), stub:echo, stub:empty,
    stub:gold (canned answers from the dataset's gold pairs), stub:canned:<path>."""
    if spec == "http":
        if not backend_url or not model:
            raise click.UsageError("http backend requires --backend-url and --model")
        return GenerationBackendConfig(base_url=backend_url, model_name=model)
    if spec == "stub:echo":
        return StubBackend("echo")
    if spec == "stub:empty":
        return StubBackend("empty")
    if spec == "stub:gold":
        if not dataset_path:
            raise click.UsageError("stub:gold needs a dataset to take answers from")
        fixtures = {p.question: p.answer for p in qa_dataset.load(dataset_path)}
        return StubBackend("canned", fixtures, model_name="stub-gold")
    if spec.startswith("stub:canned:"):
        fixtures = json.loads(Path(spec[len("stub:canned:"):]).read_text(encoding="utf-8"))
        return StubBackend("canned", fixtures)
    raise click.UsageError(f"unknown backend spec {spec!r}")


@click.group()
def main() -> None:
    """Grounded question answering over a domain knowledge base."""


@main.command("ingest")
@click.option("--input", "inputs", multiple=True, required=True, help="File path or URL; repeatable.")
@click.option("--source-type", default="web_article", show_default=True,
              type=click.Choice(["forum", "guideline", "literature", "web_article"]))
@click.option("--max-chars", default=1200, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def ingest_cmd(inputs: tuple[str, ...], source_type: str, max_chars: int, out: str) -> None:
    """Read documents into corpus storage (documents.jsonl + chunks.jsonl)."""
    store = CorpusStore(out)
    try:
        report = ingest_inputs([(i, source_type) for i in inputs], store, max_chars=max_chars)
    except IngestError as exc:
        raise click.ClickException(str(exc)) from exc
    payload = report.manifest()
    payload["n_added"] = report.n_added
    payload["n_skipped_duplicates"] = report.n_skipped_duplicates
    if report.errors:
        payload["errors"] = report.errors
    _echo_json(payload)


@main.group("index")
def index_group() -> None:
    """Build and query the vector index."""


@index_group.command("build")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--metric", default="cosine", show_default=True,
              type=click.Choice(["cosine", "inner_product", "squared_l2"]))
@click.option("--dim", default=768, show_default=True, type=int)
def index_build(corpus_dir: str, out: str, metric: str, dim: int) -> None:
    """Embed every corpus chunk and persist the index."""
    corpus = CorpusStore(corpus_dir)
    chunks = sorted(corpus.iter_chunks(), key=lambda c: c.chunk_id)
    embedder = DeterministicEmbedder(dim)
    store = VectorStore(dim=dim, metric=metric)
    if chunks:
        vectors = embedder.embed([c.text for c in chunks])
        for chunk, vector in zip(chunks, vectors):
            store.add(EntryMeta(chunk.chunk_id, chunk.source_url, chunk.source_type), vector)
    store.save(out)
    _echo_json({"count": len(store), "dim": dim, "metric": metric, "out": out})


@index_group.command("search")
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--query-text", required=True)
@click.option("-k", default=3, show_default=True, type=int)
def index_search(index_dir: str, query_text: str, k: int) -> None:
    """Raw index query; prints one hit per line without chunk text."""
    store = VectorStore.load(index_dir)
    vector = DeterministicEmbedder(store.dim).embed([query_text])[0]
    for hit in store.search(vector, k):
        _echo_json(
            {"chunk_id": hit.chunk_id, "score": hit.score, "source_url": hit.source_url},
            indent=None,
        )


@main.command("search")
@click.argument("question")
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("-k", default=3, show_default=True, type=int)
def search_cmd(question: str, index_dir: str, corpus_dir: str, k: int) -> None:
    """Retrieve the top-k chunks for a question; prints hits with text as JSON lines."""
    store = VectorStore.load(index_dir)
    corpus = CorpusStore(corpus_dir)
    retriever = Retriever(store, corpus, DeterministicEmbedder(store.dim))
    ctx = retriever.retrieve(question, k=k)
    for hit in ctx.hits:
        _echo_json(
            {
                "chunk_id": hit.chunk_id,
                "score": hit.score,
                "source_url": hit.source_url,
                "text": hit.text,
            },
            indent=None,
        )


@main.command("ask")
@click.argument("question")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-k", default=None, type=int)
def ask_cmd(question: str, config_path: str, k: int | None) -> None:
    """One grounded question-answer round trip; prints the full response JSON."""
    engine = AskEngine.from_config(load_config(config_path))
    _echo_json(engine.ask(question, k))


@main.command("eval")
@click.option("--setting", required=True, type=click.Choice(["vanilla", "rag", "rag_ft"]))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_dir", default=None, type=click.Path(file_okay=False))
@click.option("--corpus", "corpus_dir", default=None, type=click.Path(file_okay=False))
@click.option("--backend", "backend_spec", default="http", show_default=True)
@click.option("--backend-url", default="")
@click.option("--model", default="")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("-k", default=3, show_default=True, type=int)
@click.option("--char-budget", default=DEFAULT_CHAR_BUDGET, show_default=True, type=int)
@click.option("--check-live", is_flag=True, default=False)
@click.option("--include-references", is_flag=True, default=False,
              help="Score full answer text instead of the body without the reference list.")
@click.option("--max-error-fraction", default=0.5, show_default=True, type=float)
def eval_cmd(
    setting: str,
    dataset_path: str,
    index_dir: str | None,
    corpus_dir: str | None,
    backend_spec: str,
    backend_url: str,
    model: str,
    out: str,
    k: int,
    char_budget: int,
    check_live: bool,
    include_references: bool,
    max_error_fraction: float,
) -> None:
    """Run one evaluation setting over the dataset's test split."""
    backend = _resolve_backend(backend_spec, backend_url, model, dataset_path)
    config = EvalRunConfig(
        setting=setting,
        backend=backend,
        dataset_path=dataset_path,
        output_dir=out,
        index_path=index_dir,
        corpus_path=corpus_dir,
        k=k,
        char_budget=char_budget,
        check_live=check_live,
        include_references_in_scoring=include_references,
        max_error_fraction=max_error_fraction,
    )
    result = run_eval(config)
    _echo_json(
        {
            "n_items": result.metric_report.n_items,
            "aggregates": result.metric_report.aggregates,
            "reference_stats": stats_to_dict(result.reference_stats),
            "errors": len(result.errors),
            "out": out,
        }
    )


@main.command("compare")
@click.argument("results", nargs=-1, required=True)
@click.option("--out", default=None, type=click.Path(file_okay=False),
              help="Directory for comparison.csv and comparison.md.")
def compare_cmd(results: tuple[str, ...], out: str | None) -> None:
    """Side-by-side table over two or more runs of the same test set."""
    table = compare_runs([load_result(p) for p in results])
    if out is not None:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "comparison.csv").write_text(table.to_csv(), encoding="utf-8")
        (out_dir / "comparison.md").write_text(table.to_markdown(), encoding="utf-8")
    click.echo(table.to_markdown(), nl=False)


@main.group("dataset")
def dataset_group() -> None:
    """Dataset maintenance: dedup, split, leakage check, synthesis."""


@dataset_group.command("dedup")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--jaccard", default=0.8, show_default=True, type=float)
def dataset_dedup(in_path: str, out: str, jaccard: float) -> None:
    pairs = qa_dataset.load(in_path)
    kept, removed = qa_dataset.dedup(pairs, threshold=jaccard)
    qa_dataset.save(kept, out)
    _echo_json({"n_in": len(pairs), "n_kept": len(kept), "removed": removed})


@dataset_group.command("split")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--n-train", required=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def dataset_split(in_path: str, out: str, n_train: int, seed: int) -> None:
    pairs = qa_dataset.load(in_path)
    labeled, manifest = qa_dataset.split(pairs, n_train=n_train, seed=seed)
    qa_dataset.save(labeled, out)
    _echo_json(
        {
            "n_total": manifest.n_total,
            "n_train": manifest.n_train,
            "n_test": manifest.n_test,
            "seed": manifest.seed,
        }
    )


@dataset_group.command("check")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--jaccard", default=0.8, show_default=True, type=float)
def dataset_check(in_path: str, jaccard: float) -> None:
    """Leakage check between the train and test labels of one dataset file."""
    pairs = qa_dataset.load(in_path)
    train = [p for p in pairs if p.split == "train"]
    test = [p for p in pairs if p.split == "test"]
    report = qa_dataset.leakage_check(train, test, threshold=jaccard)
    _echo_json({"passed": report.passed, "offending": list(report.offending)})
    if not report.passed:
        sys.exit(1)


@dataset_group.command("synthesize")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--index", "index_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--backend", "backend_spec", default="http", show_default=True)
@click.option("--backend-url", default="")
@click.option("--model", default="")
@click.option("--n-seeds", default=10, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("-k", default=3, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def dataset_synthesize(
    corpus_dir: str,
    index_dir: str,
    backend_spec: str,
    backend_url: str,
    model: str,
    n_seeds: int,
    seed: int,
    k: int,
    out: str,
) -> None:
    """Draft unvalidated question-answer pairs from sampled corpus chunks."""
    backend = _resolve_backend(backend_spec, backend_url, model, None)
    corpus = CorpusStore(corpus_dir)
    store = VectorStore.load(index_dir)
    retriever = Retriever(store, corpus, DeterministicEmbedder(store.dim))
    chunks = sorted(corpus.iter_chunks(), key=lambda c: c.chunk_id)
    if n_seeds < len(chunks):
        chunks = random.Random(seed).sample(chunks, n_seeds)
    drafts, errors = qa_dataset.synthesize_qa(chunks, retriever, backend, k=k)
    qa_dataset.save(drafts, out)
    _echo_json({"n_drafts": len(drafts), "n_errors": len(errors), "errors": errors})


@main.command("audit")
@click.option("--answers", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {id, answer}.")
@click.option("--contexts", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {id, sources: [url, ...]}.")
@click.option("--check-live", is_flag=True, default=False)
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write per-answer audit JSONL here instead of stdout.")
def audit_cmd(answers: str, contexts: str, check_live: bool, out: str | None) -> None:
    """Audit answer reference lists against their prompt context sources."""
    sources_by_id: dict[str, list[str]] = {}
    with Path(contexts).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                sources_by_id[obj["id"]] = list(obj.get("sources", ()))
    rows = []
    audits = []
    cache: dict[str, bool] = {}
    with Path(answers).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            parsed = parse_answer(obj.get("answer", obj.get("text", "")))
            verdict = audit_answer(parsed, sources_by_id.get(obj["id"], ()))
            if check_live:
                verdict = with_liveness(verdict, parsed, cache=cache)
            audits.append(verdict)
            rows.append({"id": obj["id"], **audit_to_dict(verdict)})
    if out is not None:
        with Path(out).open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, **_JSON_KW) + "\n")
    else:
        for row in rows:
            _echo_json(row, indent=None)
    if audits:
        _echo_json(stats_to_dict(aggregate(audits)))


@main.command("score")
@click.option("--pred", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {id, text} (or {id, answer}).")
@click.option("--gold", required=True, type=click.Path(exists=True, dir_okay=False),
              help="JSONL of {id, text}/{id, answer} or a full dataset file.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--include-references", is_flag=True, default=False)
def score_cmd(pred: str, gold: str, out: str, include_references: bool) -> None:
    """Score predictions against gold texts and write the metric report JSON."""

    def read_texts(path: str) -> dict[str, str]:
        texts: dict[str, str] = {}
        with Path(path).open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                if "id" not in obj:
                    raise click.ClickException(f"{path}:{lineno}: missing id")
                texts[obj["id"]] = obj.get("text") or obj.get("answer") or ""
        return texts

    def scoring_text(text: str) -> str:
        if include_references or not text:
            return text
        body = parse_answer(text).body
        return body if body.strip() else text

    preds = read_texts(pred)
    golds = read_texts(gold)
    items = [(item_id, scoring_text(preds.get(item_id, "")), scoring_text(gold_text))
             for item_id, gold_text in sorted(golds.items())]
    report = evaluate_set(items, DeterministicEmbedder())
    payload = report_to_dict(report)
    Path(out).write_text(json.dumps(payload, indent=2, **_JSON_KW) + "\n", encoding="utf-8")
    _echo_json({"n_items": report.n_items, "aggregates": report.aggregates, "out": out})


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def serve_cmd(config_path: str) -> None:
    """Serve the HTTP API (and the web UI when its static build is configured)."""
    import uvicorn

    config = load_config(config_path)
    app = create_app_from_config(config)
    uvicorn.run(app, host=config.service.host, port=config.service.port)


if __name__ == "__main__":
    main()
