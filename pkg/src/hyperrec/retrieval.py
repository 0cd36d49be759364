"""Hyperedge-i construction: pick similar target-domain items for a source
item, by co-click paths or by embedding nearest neighbours."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph import HYPER_I, Hyperedge, MultiDomainGraph

PATH_BASED = "path"
EMBEDDING_BASED = "embedding"


@dataclass
class RetrievalConfig:
    method: str = EMBEDDING_BASED
    k: int = 20
    time_window: int = 604800  # seconds for real data; use ~50 ticks for synthetic
    refresh_interval: int = 100  # steps between embedding-based recomputation
    similarity: str = "inner"  # or "cosine"

    def validate(self) -> None:
        if self.method not in (PATH_BASED, EMBEDDING_BASED):
            raise ConfigError(f"unknown retrieval method {self.method!r}")
        if self.k < 1 or self.time_window < 0 or self.refresh_interval < 1:
            raise ConfigError("retrieval config out of range")
        if self.similarity not in ("inner", "cosine"):
            raise ConfigError(f"unknown similarity {self.similarity!r}")


def path_based_candidates(graph: MultiDomainGraph, item: int, source: int,
                          target: int, cfg: RetrievalConfig,
                          rng: np.random.Generator) -> list:
    """Items j reachable by item -> u(source) -> u(target) -> j whose click
    time falls within the window around the source click. Sampling over paths
    (frequency-weighted) without replacement; the item itself is excluded."""
    if source == target:
        raise ValueError("source and target domains must differ")
    counts = Counter()
    for u, ts_src in graph.item_users[source].get(item, ()):
        for j, ts_tgt in graph.user_items[target].get(u, ()):
            if j == item:
                continue
            if abs(ts_tgt - ts_src) <= cfg.time_window:
                counts[j] += 1
    if not counts:
        return []
    items = np.array(sorted(counts), dtype=np.int64)
    if len(items) <= cfg.k:
        return items.tolist()
    weights = np.array([counts[j] for j in items], dtype=np.float64)
    weights /= weights.sum()
    picked = rng.choice(items, size=cfg.k, replace=False, p=weights)
    return sorted(picked.tolist())


def embedding_based_candidates(item_reps: np.ndarray, rep_ids, query: np.ndarray,
                               k: int, exclude: int | None = None,
                               similarity: str = "inner") -> list:
    """Exact top-k of `rep_ids` by similarity of their rows to `query`.

    Ties break toward the smaller item id; `exclude` drops the query item when
    it belongs to the candidate pool. k > pool size returns the whole pool
    sorted by similarity.
    """
    rep_ids = np.asarray(rep_ids, dtype=np.int64)
    if len(rep_ids) == 0:
        return []
    reps = np.asarray(item_reps, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    if similarity == "cosine":
        reps = reps / np.maximum(np.linalg.norm(reps, axis=1, keepdims=True), 1e-12)
        q = q / max(np.linalg.norm(q), 1e-12)
    scores = reps @ q
    if exclude is not None:
        keep = rep_ids != exclude
        rep_ids, scores = rep_ids[keep], scores[keep]
        if len(rep_ids) == 0:
            return []
    order = np.lexsort((rep_ids, -scores))
    return rep_ids[order[:k]].tolist()


def build_hyperedges_i(graph: MultiDomainGraph, item_reps, cfg: RetrievalConfig,
                       step: int, rng: np.random.Generator | None = None) -> MultiDomainGraph:
    """Attach hyperedge-i for every (item, target domain != its source) pair.

    Path-based sets are computed once from the training graph (step 0).
    Embedding-based sets are recomputed at step 0 and whenever
    step % refresh_interval == 0; `item_reps` is the (|I|, d) matrix of
    current item representations indexed by item id.
    """
    cfg.validate()
    if cfg.method == PATH_BASED:
        if graph.hyperedges_i and step != 0:
            return graph
        if rng is None:
            rng = np.random.Generator(np.random.PCG64(0))
    else:
        if step % cfg.refresh_interval != 0 and graph.hyperedges_i:
            return graph
        if item_reps is None:
            raise ValueError("embedding-based retrieval needs item representations")

    per_domain = [sorted(s) for s in _per_domain_items(graph)]
    edges = {}
    for t in range(graph.T):
        pool_ids = np.array(per_domain[t], dtype=np.int64)
        if cfg.method == EMBEDDING_BASED and len(pool_ids):
            pool_reps = np.asarray(item_reps)[pool_ids]
        for s in range(graph.T):
            if s == t:
                continue
            for i in per_domain[s]:
                key = (i, t)
                if key in edges:
                    continue
                if cfg.method == PATH_BASED:
                    cand = path_based_candidates(graph, i, s, t, cfg, rng)
                else:
                    cand = embedding_based_candidates(
                        pool_reps, pool_ids, np.asarray(item_reps)[i], cfg.k,
                        exclude=i, similarity=cfg.similarity)
                nodes = [graph.item_node(i)] + [graph.item_node(j) for j in cand]
                edges[key] = Hyperedge(HYPER_I, nodes, owner=key)
    graph.hyperedges_i = edges
    return graph


def _per_domain_items(graph: MultiDomainGraph):
    """Items observed per domain in the training graph."""
    return [set(graph.item_users[m].keys()) for m in range(graph.T)]
