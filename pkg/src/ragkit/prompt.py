"""Prompt assembly: grounding instructions, numbered context blocks, question.

Each context block renders as `Content: {content}Source: [{index}] <{url}>`,
blocks concatenate directly, and the three segments (system text, blocks,
question) are separated by blank lines. The grounding text ships as a data
file and is read byte-for-byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .retriever import RetrievedContext

DEFAULT_CHAR_BUDGET = 12_000

_SYSTEM_ASSET = "system_grounded.txt"


class PromptBudgetError(Exception):
    """The fixed parts alone exceed the character budget."""


@dataclass(frozen=True)
class ContextBlock:
    index: int
    source_url: str
    content: str


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    context_blocks: tuple[ContextBlock, ...]
    question: str
    rendered: str
    char_budget: int

    def source_urls(self) -> tuple[str, ...]:
        return tuple(block.source_url for block in self.context_blocks)


def load_system_prompt() -> str:
    return (
        resources.files("ragkit")
        .joinpath("prompts")
        .joinpath(_SYSTEM_ASSET)
        .read_text(encoding="utf-8")
    )


def render_block(block: ContextBlock) -> str:
    return f"Content: {block.content}Source: [{block.index}] <{block.source_url}>"


def render_prompt(system_text: str, blocks: Sequence[ContextBlock], question: str) -> str:
    segments = []
    if system_text:
        segments.append(system_text)
    if blocks:
        segments.append("".join(render_block(b) for b in blocks))
    segments.append(question)
    return "\n\n".join(segments)


def _numbered(contents: Sequence[tuple[str, str]]) -> tuple[ContextBlock, ...]:
    return tuple(
        ContextBlock(index=i, source_url=url, content=content)
        for i, (url, content) in enumerate(contents, start=1)
    )


def build_prompt(
    question: str,
    ctx: RetrievedContext,
    char_budget: int = DEFAULT_CHAR_BUDGET,
    system_text: str | None = None,
) -> PromptBundle:
    """Grounded prompt over the retrieved hits, fitted to the character budget.

    Over budget, whole blocks are dropped lowest-rank-first; if the single
    top block still does not fit, its content is truncated at whitespace.
    The system text and the question are never cut.
    """
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    if system_text is None:
        system_text = load_system_prompt()

    base = render_prompt(system_text, (), question)
    if len(base) > char_budget:
        raise PromptBudgetError(
            f"budget too small: fixed prompt parts need {len(base)} chars, budget is {char_budget}"
        )

    contents = [(hit.source_url, hit.text) for hit in ctx.hits]
    blocks = _numbered(contents)
    rendered = render_prompt(system_text, blocks, question)
    while len(rendered) > char_budget and len(blocks) > 1:
        blocks = blocks[:-1]
        rendered = render_prompt(system_text, blocks, question)

    if len(rendered) > char_budget and blocks:
        only = blocks[0]
        overhead = len(rendered) - len(only.content)
        allowed = char_budget - overhead
        if allowed <= 0:
            blocks = ()
        else:
            prefix = only.content[:allowed]
            if allowed < len(only.content) and not only.content[allowed].isspace():
                cut = -1
                for i in range(len(prefix) - 1, 0, -1):
                    if prefix[i].isspace():
                        cut = i
                        break
                if cut > 0:
                    prefix = prefix[:cut]
            prefix = prefix.rstrip()
            blocks = (ContextBlock(1, only.source_url, prefix),) if prefix else ()
        rendered = render_prompt(system_text, blocks, question)

    return PromptBundle(
        system_text=system_text,
        context_blocks=blocks,
        question=question,
        rendered=rendered,
        char_budget=char_budget,
    )


def vanilla_prompt(
    question: str,
    system_line: str = "",
    char_budget: int = DEFAULT_CHAR_BUDGET,
) -> PromptBundle:
    """No grounding, no context blocks; by default the prompt is the bare question."""
    if not question or not question.strip():
        raise ValueError("question must be non-empty")
    rendered = render_prompt(system_line, (), question)
    return PromptBundle(
        system_text=system_line,
        context_blocks=(),
        question=question,
        rendered=rendered,
        char_budget=max(char_budget, len(rendered)),
    )
