"""Hypergraph-based multi-domain recommendation toolkit."""

__version__ = "0.1.0"
