"""Evaluation runs over a gold test set: generate, parse, audit, score, persist.

A run writes three artifacts into its output directory:
    result.json     aggregates, reference stats, config echo (deterministic)
    per_item.jsonl  one record per test item, sorted by id (deterministic)
    run_info.json   wall-clock timing and latencies (volatile, excluded from
                    byte-identical rerun comparisons)
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import qa_dataset
from .citations import (
    ReferenceStats,
    aggregate,
    audit,
    audit_to_dict,
    parse_answer,
    parsed_to_dict,
    stats_to_dict,
    with_liveness,
)
from .corpus import CorpusStore
from .embeddings import DeterministicEmbedder, Embedder
from .llm_client import (
    ChatBackend,
    EmptyGenerationError,
    GenerationBackendConfig,
    GenerationError,
    generate,
)
from .metrics import MetricReport, evaluate_set, report_to_dict, scores_to_dict
from .prompt import DEFAULT_CHAR_BUDGET, build_prompt, vanilla_prompt
from .retriever import Retriever
from .vector_store import VectorStore

SETTINGS = ("vanilla", "rag", "rag_ft")


class HarnessError(Exception):
    """Invalid run configuration or an over-threshold failure rate."""


@dataclass
class EvalRunConfig:
    setting: str
    backend: ChatBackend | GenerationBackendConfig
    dataset_path: str | Path
    output_dir: str | Path
    index_path: str | Path | None = None
    corpus_path: str | Path | None = None
    k: int = 3
    char_budget: int = DEFAULT_CHAR_BUDGET
    check_live: bool = False
    include_references_in_scoring: bool = False
    max_error_fraction: float = 0.5
    embedder: Embedder | None = None

    def __post_init__(self) -> None:
        if self.setting not in SETTINGS:
            raise HarnessError(f"unknown setting {self.setting!r}, expected one of {SETTINGS}")
        if self.setting != "vanilla":
            if self.index_path is None:
                raise HarnessError(f"setting {self.setting!r} requires index_path")
            if self.corpus_path is None:
                raise HarnessError(f"setting {self.setting!r} requires corpus_path")


@dataclass
class EvalRunResult:
    metric_report: MetricReport
    reference_stats: ReferenceStats
    per_item: list[dict]
    run_metadata: dict
    errors: list[dict] = field(default_factory=list)


def _test_pairs(pairs: Sequence[qa_dataset.QAPair]) -> list[qa_dataset.QAPair]:
    labeled = [p for p in pairs if p.split is not None]
    if not labeled:
        # An unlabeled file is taken to be the test set itself.
        return list(pairs)
    test = [p for p in pairs if p.split == "test"]
    if not test:
        raise HarnessError("dataset has split labels but no test items")
    return test


def dataset_fingerprint(pairs: Sequence[qa_dataset.QAPair]) -> str:
    h = hashlib.sha256()
    for pair in sorted(pairs, key=lambda p: p.id):
        h.update(pair.id.encode("utf-8"))
        h.update(b"\x00")
        h.update(pair.question.encode("utf-8"))
        h.update(b"\x00")
        h.update(pair.answer.encode("utf-8"))
        h.update(b"\x01")
    return h.hexdigest()


def _scoring_text(answer: str, include_references: bool) -> str:
    if include_references:
        return answer
    return parse_answer(answer).body


def run_eval(config: EvalRunConfig) -> EvalRunResult:
    """Evaluate every test pair under the configured setting and persist artifacts."""
    started = datetime.now(timezone.utc)
    t0 = time.monotonic()

    pairs = qa_dataset.load(config.dataset_path)
    test = _test_pairs(pairs)
    if not test:
        raise HarnessError("empty test set")

    embedder: Embedder = config.embedder if config.embedder is not None else DeterministicEmbedder()
    retriever: Retriever | None = None
    if config.setting != "vanilla":
        store = VectorStore.load(config.index_path)
        if store.dim != embedder.dim:
            embedder = DeterministicEmbedder(store.dim) if config.embedder is None else embedder
            if store.dim != embedder.dim:
                raise HarnessError(f"index dim {store.dim} != embedder dim {embedder.dim}")
        corpus = CorpusStore(config.corpus_path)
        retriever = Retriever(store, corpus, embedder, default_k=config.k)

    records: list[dict] = []
    errors: list[dict] = []
    latencies: list[dict] = []
    scoring_items: list[tuple[str, str, str]] = []
    audits = []
    liveness_cache: dict[str, bool] = {}

    for pair in test:
        if retriever is not None:
            ctx = retriever.retrieve(pair.question, k=config.k)
            bundle = build_prompt(pair.question, ctx, char_budget=config.char_budget)
        else:
            bundle = vanilla_prompt(pair.question, char_budget=config.char_budget)

        answer_text = ""
        item_error = None
        item_latency = 0.0
        try:
            result = generate(config.backend, bundle)
            answer_text = result.text
            item_latency = result.latency
        except EmptyGenerationError as exc:
            # An empty completion is a zero-scored item, not a failed backend:
            # it must not trip the abort threshold.
            item_error = str(exc)
        except GenerationError as exc:
            item_error = str(exc)
            errors.append({"id": pair.id, "error": item_error})

        parsed = parse_answer(answer_text)
        item_audit = audit(parsed, bundle.source_urls())
        if config.check_live:
            item_audit = with_liveness(item_audit, parsed, cache=liveness_cache)
        audits.append(item_audit)

        gold = _scoring_text(pair.answer, config.include_references_in_scoring)
        if not gold.strip():
            gold = pair.answer
        candidate = _scoring_text(answer_text, config.include_references_in_scoring) if answer_text else ""
        scoring_items.append((pair.id, candidate, gold))

        records.append(
            {
                "id": pair.id,
                "question": pair.question,
                "prompt": bundle.rendered,
                "answer": answer_text,
                "parsed": parsed_to_dict(parsed),
                "audit": audit_to_dict(item_audit),
                "error": item_error,
            }
        )
        latencies.append({"id": pair.id, "latency": item_latency})

    if len(errors) / len(test) > config.max_error_fraction:
        raise HarnessError(
            f"{len(errors)} of {len(test)} items failed, above the "
            f"{config.max_error_fraction:.0%} threshold"
        )

    report = evaluate_set(scoring_items, embedder)
    stats = aggregate(audits)

    scores_by_id = {p.id: scores_to_dict(p) for p in report.per_item}
    for record in records:
        record["scores"] = scores_by_id[record["id"]]
    records.sort(key=lambda r: r["id"])

    backend_model = getattr(config.backend, "model_name", "")
    finished = datetime.now(timezone.utc)
    run_metadata = {
        "setting": config.setting,
        "backend_model": backend_model,
        "k": config.k,
        "char_budget": config.char_budget,
        "check_live": config.check_live,
        "include_references_in_scoring": config.include_references_in_scoring,
        "dataset_fingerprint": dataset_fingerprint(test),
        "n_items": len(test),
        "started_at": started.isoformat(),
        "finished_at": finished.isoformat(),
        "duration_s": time.monotonic() - t0,
    }

    _persist(Path(config.output_dir), report, stats, records, run_metadata, errors, latencies)
    return EvalRunResult(
        metric_report=report,
        reference_stats=stats,
        per_item=records,
        run_metadata=run_metadata,
        errors=errors,
    )


def _persist(
    out_dir: Path,
    report: MetricReport,
    stats: ReferenceStats,
    records: list[dict],
    run_metadata: dict,
    errors: list[dict],
    latencies: list[dict],
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    deterministic_meta = {
        k: v
        for k, v in run_metadata.items()
        if k not in ("started_at", "finished_at", "duration_s")
    }
    summary = report_to_dict(report)
    del summary["per_item"]
    result = {
        "run": deterministic_meta,
        "metric_report": summary,
        "reference_stats": stats_to_dict(stats),
        "errors": errors,
    }
    (out_dir / "result.json").write_text(
        json.dumps(result, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    with (out_dir / "per_item.jsonl").open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
    run_info = {
        "started_at": run_metadata["started_at"],
        "finished_at": run_metadata["finished_at"],
        "duration_s": run_metadata["duration_s"],
        "latencies": latencies,
    }
    (out_dir / "run_info.json").write_text(
        json.dumps(run_info, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    setting: str
    backend_model: str
    aggregates: dict[str, float]
    n_returning: int
    n_total: int
    pct_returning: float
    pct_grounded: float


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]

    _METRICS = ("bleu", "rouge1", "rouge2", "rougeL", "chrf", "semantic")

    def to_csv(self) -> str:
        header = (
            ["label", "setting", "backend_model"]
            + list(self._METRICS)
            + ["n_returning", "n_total", "pct_returning", "pct_grounded"]
        )
        lines = [",".join(header)]
        for row in self.rows:
            cells = [row.label, row.setting, row.backend_model]
            cells += [f"{row.aggregates[m]:.6f}" for m in self._METRICS]
            cells += [str(row.n_returning), str(row.n_total), f"{row.pct_returning:.1f}", f"{row.pct_grounded:.1f}"]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        header = ["label", "setting"] + list(self._METRICS) + ["refs returned", "refs %"]
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        for row in self.rows:
            cells = [row.label, row.setting]
            cells += [f"{row.aggregates[m]:.4f}" for m in self._METRICS]
            cells += [f"{row.n_returning}/{row.n_total}", f"{row.pct_returning:.1f}"]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def load_result(path: str | Path) -> dict:
    result_path = Path(path)
    if result_path.is_dir():
        result_path = result_path / "result.json"
    return json.loads(result_path.read_text(encoding="utf-8"))


def compare_runs(results: Sequence[dict]) -> ComparisonTable:
    """Side-by-side aggregates for runs over the same test set."""
    if len(results) < 2:
        raise HarnessError("compare requires at least two runs")
    fingerprints = {r["run"]["dataset_fingerprint"] for r in results}
    if len(fingerprints) != 1:
        raise HarnessError("runs evaluate different test sets; refusing to compare")
    rows = []
    for r in results:
        run = r["run"]
        stats = r["reference_stats"]
        rows.append(
            ComparisonRow(
                label=f"{run['setting']}:{run['backend_model']}",
                setting=run["setting"],
                backend_model=run["backend_model"],
                aggregates=dict(r["metric_report"]["aggregates"]),
                n_returning=stats["n_returning"],
                n_total=stats["n_total"],
                pct_returning=stats["pct_returning"],
                pct_grounded=stats["pct_grounded"],
            )
        )
    return ComparisonTable(rows=tuple(rows))
