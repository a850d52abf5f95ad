#!/usr/bin/env python3
"""DOM-walk oracle fixing expected outputs for the HTML-to-text converter.

Builds an explicit element tree from the input, then recursively walks it:
script/style/template subtrees are dropped, block-level elements contribute
newline boundaries, runs of boundary newlines collapse to one. The streaming
converter in the package must produce identical text; this script regenerates
tests/data/html_fixtures.json and is never imported by the test suite.
"""

from __future__ import annotations

import json
from html.parser import HTMLParser
from pathlib import Path

OUT_PATH = Path(__file__).resolve().parent.parent / "tests" / "data" / "html_fixtures.json"

SKIPPED = {"script", "style", "template", "noscript"}
BLOCK = {
    "address", "article", "aside", "blockquote", "br", "dd", "div", "dl", "dt",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4",
    "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p", "pre", "section",
    "table", "tbody", "td", "tfoot", "th", "thead", "tr", "ul",
}
VOID = {"br", "hr", "img", "input", "meta", "link", "area", "base", "col", "embed",
        "source", "track", "wbr"}


class Node:
    def __init__(self, tag, parent):
        self.tag = tag
        self.parent = parent
        self.children = []  # Node or str


class TreeBuilder(HTMLParser):
    """Parses into an explicit tree; unclosed tags close implicitly at their parent."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = Node("#root", None)
        self.cursor = self.root

    def handle_starttag(self, tag, attrs):
        node = Node(tag, self.cursor)
        self.cursor.children.append(node)
        if tag not in VOID:
            self.cursor = node

    def handle_startendtag(self, tag, attrs):
        self.cursor.children.append(Node(tag, self.cursor))

    def handle_endtag(self, tag):
        probe = self.cursor
        while probe is not None and probe.tag != tag:
            probe = probe.parent
        if probe is not None and probe.parent is not None:
            self.cursor = probe.parent

    def handle_data(self, data):
        if data:
            self.cursor.children.append(data)


def walk(node, pieces):
    if isinstance(node, str):
        pieces.append(node)
        return
    if node.tag in SKIPPED:
        return
    if node.tag in BLOCK:
        pieces.append("\n")
    for child in node.children:
        walk(child, pieces)
    if node.tag in BLOCK:
        pieces.append("\n")


def dom_extract(html: str) -> str:
    builder = TreeBuilder()
    builder.feed(html)
    builder.close()
    pieces: list[str] = []
    walk(builder.root, pieces)
    text = "".join(pieces)
    # Boundary newlines collapse to one; surrounding spaces fold into the break.
    lines = []
    for raw_line in text.split("\n"):
        stripped = raw_line.strip()
        if stripped:
            lines.append(stripped)
    return "\n".join(lines)


FIXTURES = [
    "<p>Hello</p>",
    "",
    "<div>a<script>x()</script>b</div>",
    "<html><head><title>t</title><style>.x{color:red}</style></head><body><p>one</p><p>two</p></body></html>",
    "<ul><li>first</li><li>second</li></ul>",
    "<p>caf&eacute; &amp; co</p>",
    "<div><div><p>deep</p></div></div>",
    "plain text, no tags",
    "<p>broken <b>markup with <i>unclosed tags</p><p>next</p>",
    "<h1>Title</h1>text after heading<br>line two",
    "<p>spaced   out</p>\n\n<p>paragraph</p>",
    "<td>cell one</td><td>cell two</td>",
    "<p>inline <b>bold</b> and <a href='x'>link</a> text</p>",
    "<script>only script</script>",
    "<div>a<noscript>hidden</noscript>b</div>",
]


def main():
    rows = [{"html": html, "text": dom_extract(html)} for html in FIXTURES]
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_text(json.dumps(rows, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} fixture rows to {OUT_PATH}")
    for row in rows[:6]:
        print(repr(row["html"]), "->", repr(row["text"]))


if __name__ == "__main__":
    main()
