"""Grounded question answering over a domain knowledge base, with a full evaluation harness."""

__version__ = "0.1.0"
