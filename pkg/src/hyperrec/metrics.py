"""Leave-one-out all-ranking evaluation: per-domain HR@K, MRR, NDCG@K, plus
activity-group (quintile) breakdowns."""
from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from . import tensor as tn
from .data import SplitDataset
from .errors import DataError
from .model import Model

N_ACTIVITY_GROUPS = 5


@dataclass(frozen=True)
class RankResult:
    user: int
    domain: int
    held_out_item: int
    rank: int  # 1-based among all candidates, pessimistic on ties


def rank_from_scores(cand_scores: np.ndarray, held_pos: int) -> int:
    """1 + number of candidates scoring strictly higher, with ties counted
    against the held-out item (pessimistic, deterministic)."""
    s = cand_scores[held_pos]
    greater = int(np.sum(cand_scores > s))
    equal_others = int(np.sum(cand_scores == s)) - 1
    return 1 + greater + equal_others


def hr_at_k(results, k: int) -> float:
    ranks = _ranks(results)
    return float(np.mean(ranks <= k))


def mrr(results) -> float:
    ranks = _ranks(results)
    return float(np.mean(1.0 / ranks))


def ndcg_at_k(results, k: int) -> float:
    """Single-relevant-item NDCG: 1/log2(rank + 1) inside the cutoff, else 0."""
    ranks = _ranks(results)
    gains = np.where(ranks <= k, 1.0 / np.log2(ranks + 1.0), 0.0)
    return float(np.mean(gains))


def _ranks(results) -> np.ndarray:
    ranks = np.array([r.rank if isinstance(r, RankResult) else r for r in results],
                     dtype=np.float64)
    if len(ranks) == 0:
        raise ValueError("empty result list")
    return ranks


def activity_groups(split: SplitDataset) -> dict:
    """User -> activity group 1..5 by total training interaction count,
    ascending; boundaries by rank with ties broken by user id; group sizes
    differ by at most one."""
    counts = Counter(r.user for r in split.train.records)
    users = sorted(range(split.train.user_count), key=lambda u: (counts.get(u, 0), u))
    group_of = {}
    for g, chunk in enumerate(np.array_split(np.array(users), N_ACTIVITY_GROUPS), start=1):
        for u in chunk:
            group_of[int(u)] = g
    return group_of


def rank_test_records(model: Model, split: SplitDataset, seed: int = 0) -> list:
    """RankResult per test record under the all-ranking protocol: candidates
    are the domain's item pool minus the user's training items there, with the
    held-out item always included."""
    graph = model.graph
    train_items = defaultdict(set)
    for r in split.train.records:
        train_items[(r.user, r.domain)].add(r.item)

    domains = sorted({r.domain for r in split.test})
    results = []
    with tn.no_grad():
        z_cache = {}
        for m in domains:
            target = m if model.cfg.uses_hyper_i() else None
            if target not in z_cache:
                rng = np.random.Generator(
                    np.random.PCG64(np.random.SeedSequence([seed, 5])))
                z_cache[target] = model.node_representations(target, rng=rng).data
            Z = z_cache[target]
            pool = np.array(sorted(split.train.per_domain_items[m]), dtype=np.int64)
            pool_pos = {int(i): p for p, i in enumerate(pool)}
            zi = Z[graph.num_user_nodes + pool]
            for r in (t for t in split.test if t.domain == m):
                if r.item not in pool_pos:
                    raise DataError(
                        f"held-out item {r.item} missing from domain {m} pool")
                zu = Z[graph.user_node(r.user, m)]
                scores = zi @ zu
                seen = train_items.get((r.user, m), set())
                keep = np.array([int(i) not in seen or int(i) == r.item for i in pool])
                cand_scores = scores[keep]
                held_pos = int(np.searchsorted(pool[keep], r.item))
                results.append(RankResult(r.user, m, r.item,
                                          rank_from_scores(cand_scores, held_pos)))
    return results


@dataclass
class MetricsTable:
    rows: list  # dicts: domain, group, metric, K, value, count

    def get(self, domain: int, metric: str, k=None, group: str = "ALL"):
        for row in self.rows:
            if (row["domain"] == domain and row["group"] == group
                    and row["metric"] == metric and row["K"] == k):
                return row["value"]
        return None

    def to_tsv(self) -> str:
        lines = ["domain\tgroup\tmetric\tK\tvalue\tcount"]
        for r in self.rows:
            k = "" if r["K"] is None else str(r["K"])
            lines.append(f"{r['domain']}\t{r['group']}\t{r['metric']}\t{k}"
                         f"\t{r['value']:.6f}\t{r['count']}")
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.rows)


def _metric_rows(domain: int, group: str, results, ks) -> list:
    rows = [{"domain": domain, "group": group, "metric": "MRR", "K": None,
             "value": mrr(results), "count": len(results)}]
    for k in ks:
        rows.append({"domain": domain, "group": group, "metric": "HR", "K": k,
                     "value": hr_at_k(results, k), "count": len(results)})
        rows.append({"domain": domain, "group": group, "metric": "NDCG", "K": k,
                     "value": ndcg_at_k(results, k), "count": len(results)})
    return rows


def evaluate(model: Model, split: SplitDataset, ks=(20, 50), seed: int = 0) -> MetricsTable:
    """Rank every test record and aggregate per domain and per activity group.

    Domains without test records contribute no rows (absent, not zero).
    """
    results = rank_test_records(model, split, seed=seed)
    group_of = activity_groups(split)
    rows = []
    for m in range(split.train.T):
        dom_results = [r for r in results if r.domain == m]
        if not dom_results:
            continue
        rows.extend(_metric_rows(m, "ALL", dom_results, ks))
        for g in range(1, N_ACTIVITY_GROUPS + 1):
            grp = [r for r in dom_results if group_of[r.user] == g]
            if grp:
                rows.extend(_metric_rows(m, f"G{g}", grp, ks))
    return MetricsTable(rows=rows)
