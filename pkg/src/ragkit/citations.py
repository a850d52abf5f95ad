"""Parse inline citations and reference lists out of generated answers, and audit them.

The reference section is the last "References:" marker that is actually
followed by at least one parseable entry, so prose like "for more references:
see below" never splits an answer. Entries come in three printed shapes:
markdown `[n](url)`, angle `[n] <url>`, and bare `[n] url`; bare URLs stop at
whitespace or brackets, so run-together lists like `...x/[2] https://y` split
correctly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence
from urllib.parse import urlsplit, urlunsplit

import requests

_MARKER = re.compile(r"\breferences\s*:", flags=re.IGNORECASE)
_INLINE = re.compile(r"\[(\d+)\]")
_ENTRY = re.compile(
    r"\[(?P<idx>\d+)\]\s*"
    r"(?:\((?P<md>https?://[^)\s]+)\)"
    r"|<(?P<angle>https?://[^>\s]+)>"
    r"|(?P<bare>https?://[^\s\[\]<>()\"']+))"
)
_BARE_TRAILING = ".,;:!?"


@dataclass(frozen=True)
class Reference:
    index: int
    url: str


@dataclass(frozen=True)
class ParsedAnswer:
    body: str
    inline_citations: tuple[int, ...]
    references: tuple[Reference, ...]


@dataclass(frozen=True)
class ReferenceAudit:
    has_references: bool
    n_references: int
    inline_resolved: bool
    grounded_fraction: float
    urls_wellformed: bool
    urls_live: bool | None = None


@dataclass(frozen=True)
class ReferenceStats:
    n_returning: int
    n_total: int
    pct_returning: float
    pct_grounded: float


def _is_absolute_http(url: str) -> bool:
    parts = urlsplit(url)
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def _entries_in(section: str) -> list[Reference]:
    refs: list[Reference] = []
    seen: set[int] = set()
    for match in _ENTRY.finditer(section):
        url = match.group("md") or match.group("angle") or match.group("bare")
        if match.group("bare"):
            url = url.rstrip(_BARE_TRAILING)
        if not _is_absolute_http(url):
            continue
        index = int(match.group("idx"))
        if index in seen:
            continue
        seen.add(index)
        refs.append(Reference(index=index, url=url))
    return refs


def parse_answer(text: str) -> ParsedAnswer:
    """Split an answer into body, inline citation indices, and the reference list.

    Unparseable input degrades to an empty citation set, never an error.
    """
    body = text
    references: tuple[Reference, ...] = ()
    markers = list(_MARKER.finditer(text))
    for marker in reversed(markers):
        refs = _entries_in(text[marker.end():])
        if refs:
            body = text[: marker.start()]
            references = tuple(refs)
            break
    body = body.rstrip()
    inline = tuple(int(m.group(1)) for m in _INLINE.finditer(body))
    return ParsedAnswer(body=body, inline_citations=inline, references=references)


def render_answer(parsed: ParsedAnswer) -> str:
    """Canonical renderer over the citation grammar; parse_answer inverts it."""
    text = parsed.body.rstrip()
    if parsed.references:
        lines = "\n".join(f"[{r.index}] {r.url}" for r in parsed.references)
        text = f"{text}\n\nReferences:\n{lines}" if text else f"References:\n{lines}"
    return text


def canonical_url(url: str) -> str:
    """Lowercase scheme and host, drop the fragment, strip one trailing slash."""
    parts = urlsplit(url)
    path = parts.path.rstrip("/")
    return urlunsplit((parts.scheme.lower(), parts.netloc.lower(), path, parts.query, ""))


def audit(parsed: ParsedAnswer, context_sources: Iterable[str]) -> ReferenceAudit:
    """Structural verdict on the references against the prompt's context sources."""
    canon_sources = {canonical_url(u) for u in context_sources}
    n = len(parsed.references)
    if n:
        grounded = sum(1 for r in parsed.references if canonical_url(r.url) in canon_sources)
        grounded_fraction = grounded / n
    else:
        grounded_fraction = 0.0
    indices = {r.index for r in parsed.references}
    inline_resolved = all(i in indices for i in parsed.inline_citations)
    urls_wellformed = all(_is_absolute_http(r.url) for r in parsed.references)
    return ReferenceAudit(
        has_references=n > 0,
        n_references=n,
        inline_resolved=inline_resolved,
        grounded_fraction=grounded_fraction,
        urls_wellformed=urls_wellformed,
    )


UrlProbe = Callable[[str, str, float], int]


def _requests_probe(method: str, url: str, timeout: float) -> int:
    response = requests.request(method, url, timeout=timeout, allow_redirects=True)
    return response.status_code


def check_url_live(
    url: str,
    timeout: float = 5.0,
    cache: dict[str, bool] | None = None,
    probe: UrlProbe | None = None,
) -> bool:
    """True when the URL answers 2xx/3xx; failures are False, never an exception."""
    if cache is not None and url in cache:
        return cache[url]
    send = probe if probe is not None else _requests_probe
    alive = False
    try:
        status = send("HEAD", url, timeout)
        if status >= 400:
            status = send("GET", url, timeout)
        alive = 200 <= status < 400
    except Exception:
        try:
            status = send("GET", url, timeout)
            alive = 200 <= status < 400
        except Exception:
            alive = False
    if cache is not None:
        cache[url] = alive
    return alive


def with_liveness(
    audit_result: ReferenceAudit,
    parsed: ParsedAnswer,
    timeout: float = 5.0,
    cache: dict[str, bool] | None = None,
    probe: UrlProbe | None = None,
) -> ReferenceAudit:
    if not parsed.references:
        return replace(audit_result, urls_live=None)
    live = all(check_url_live(r.url, timeout=timeout, cache=cache, probe=probe) for r in parsed.references)
    return replace(audit_result, urls_live=live)


def aggregate(audits: Sequence[ReferenceAudit]) -> ReferenceStats:
    """Reference-return statistics over one evaluated run."""
    if not audits:
        raise ValueError("aggregate requires at least one audit")
    n_total = len(audits)
    n_returning = sum(1 for a in audits if a.has_references)
    pct_returning = round(100.0 * n_returning / n_total, 1)
    pct_grounded = round(100.0 * sum(a.grounded_fraction for a in audits) / n_total, 1)
    return ReferenceStats(
        n_returning=n_returning,
        n_total=n_total,
        pct_returning=pct_returning,
        pct_grounded=pct_grounded,
    )


def audit_to_dict(a: ReferenceAudit) -> dict:
    return {
        "has_references": a.has_references,
        "n_references": a.n_references,
        "inline_resolved": a.inline_resolved,
        "grounded_fraction": a.grounded_fraction,
        "urls_wellformed": a.urls_wellformed,
        "urls_live": a.urls_live,
    }


def parsed_to_dict(p: ParsedAnswer) -> dict:
    return {
        "body": p.body,
        "inline_citations": list(p.inline_citations),
        "references": [{"index": r.index, "url": r.url} for r in p.references],
    }


def stats_to_dict(s: ReferenceStats) -> Mapping[str, float | int]:
    return {
        "n_returning": s.n_returning,
        "n_total": s.n_total,
        "pct_returning": s.pct_returning,
        "pct_grounded": s.pct_grounded,
    }
