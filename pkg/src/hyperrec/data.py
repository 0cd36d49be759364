"""Parse, filter, binarize, split, and synthesize multi-domain interaction data.

All operations are pure functions over immutable inputs. The atom is one
(user, item, domain, timestamp[, rating]) event; datasets carry dense ids
after remapping, with item ids shared across domains.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError, ParseError


@dataclass(frozen=True)
class RawRecord:
    """One event with original string ids, before remapping."""
    user: str
    item: str
    domain: int
    timestamp: int
    rating: Optional[int] = None


@dataclass(frozen=True)
class InteractionRecord:
    """One click event with dense integer ids."""
    user: int
    item: int
    domain: int
    timestamp: int
    rating: Optional[int] = None


@dataclass
class Dataset:
    records: list
    T: int
    user_count: int
    item_count: int
    per_domain_items: list  # list of frozenset, one per domain
    user_map: dict = field(default_factory=dict)  # original id -> dense id
    item_map: dict = field(default_factory=dict)


@dataclass
class SplitDataset:
    train: Dataset
    test: list  # InteractionRecord, one per (user, domain) with >= 2 events


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def parse_interactions(lines, format: str = "native", domain: int = 0) -> list:
    """Parse a line-oriented stream into raw records (string ids kept).

    native: TSV `user_id item_id domain_id timestamp [rating]`.
    amazon_ratings: CSV `item,user,rating,timestamp`; domain comes from the
    `domain` argument (one file per domain).
    Lines starting with `#` and blank lines are skipped.
    """
    if format not in ("native", "amazon_ratings"):
        raise ConfigError(f"unknown input format {format!r}")
    records = []
    for lineno, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.rstrip("\n").rstrip("\r")
        if not line or line.startswith("#"):
            continue
        if format == "native":
            parts = line.split("\t")
            if len(parts) not in (4, 5):
                raise ParseError(f"line {lineno}: expected 4 or 5 fields, got {len(parts)}")
            user, item, dom_s, ts_s = parts[:4]
            rating = None
            try:
                dom = int(dom_s)
                ts = int(ts_s)
                if len(parts) == 5:
                    rating = int(parts[4])
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric field in {line!r}") from None
            records.append(RawRecord(user, item, dom, ts, rating))
        else:
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            item, user, rating_s, ts_s = parts
            try:
                rating = int(float(rating_s))
                ts = int(ts_s)
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric field in {line!r}") from None
            records.append(RawRecord(user, item, domain, ts, rating))
    return records


def binarize(records, threshold: int = 4):
    """Keep positives: rating >= threshold, or no rating (clicks are positive)."""
    if threshold < 1:
        raise ConfigError("binarize threshold must be >= 1")
    return [r for r in records if r.rating is None or r.rating >= threshold]


def k_core_filter(records, k: int = 5):
    """Maximal k-core of the user-item multigraph (users and items each need
    >= k interactions, counted across all domains; iterated to a fixed point).
    Output preserves input order."""
    if k < 1:
        raise ConfigError("k-core k must be >= 1")
    kept = list(records)
    while True:
        ucount = Counter(r.user for r in kept)
        icount = Counter(r.item for r in kept)
        bad_u = {u for u, c in ucount.items() if c < k}
        bad_i = {i for i, c in icount.items() if c < k}
        if not bad_u and not bad_i:
            return kept
        kept = [r for r in kept if r.user not in bad_u and r.item not in bad_i]


def remap_ids(records) -> Dataset:
    """Dense 0-based ids in first-appearance order; deduplicates (user, item,
    domain) keeping the earliest timestamp. Items keep one id across domains."""
    records = list(records)
    if not records:
        raise DataError("remap_ids: empty record list")
    user_map: dict = {}
    item_map: dict = {}
    for r in records:
        if r.user not in user_map:
            user_map[r.user] = len(user_map)
        if r.item not in item_map:
            item_map[r.item] = len(item_map)

    best: dict = {}
    order: list = []
    for r in records:
        key = (user_map[r.user], item_map[r.item], r.domain)
        if key not in best:
            best[key] = r
            order.append(key)
        elif r.timestamp < best[key].timestamp:
            best[key] = r

    T = max(r.domain for r in records) + 1
    if min(r.domain for r in records) < 0:
        raise DataError("negative domain index")
    out = []
    domain_items = [set() for _ in range(T)]
    for key in order:
        r = best[key]
        u, i, m = key
        out.append(InteractionRecord(u, i, m, r.timestamp, r.rating))
        domain_items[m].add(i)
    return Dataset(
        records=out,
        T=T,
        user_count=len(user_map),
        item_count=len(item_map),
        per_domain_items=[frozenset(s) for s in domain_items],
        user_map=dict(user_map),
        item_map=dict(item_map),
    )


def leave_one_out_split(dataset: Dataset) -> SplitDataset:
    """Per (user, domain) with >= 2 interactions, move the last-timestamp one
    (ties: larger item id) to test. Candidate item pools stay those of the full
    dataset so held-out items remain rankable."""
    groups = defaultdict(list)
    for r in dataset.records:
        groups[(r.user, r.domain)].append(r)
    test = []
    test_ids = set()
    for key, rs in groups.items():
        if len(rs) < 2:
            continue
        last = max(rs, key=lambda r: (r.timestamp, r.item))
        test.append(last)
        test_ids.add(id(last))
    train_records = [r for r in dataset.records if id(r) not in test_ids]
    train = replace(dataset, records=train_records)
    test.sort(key=lambda r: (r.domain, r.user))
    return SplitDataset(train=train, test=test)


# ---------------------------------------------------------------------------
# synthetic generator
# ---------------------------------------------------------------------------

@dataclass
class GenConfig:
    T: int = 3
    users: int = 300
    items_per_domain: int = 200
    overlap_fraction: float = 0.2
    interactions_per_user: int = 10
    latent_dim: int = 8
    domain_correlation: float = 0.8  # rho

    def validate(self) -> None:
        if min(self.T, self.users, self.items_per_domain,
               self.interactions_per_user, self.latent_dim) < 1:
            raise ConfigError("all generator counts must be >= 1")
        if not 0.0 <= self.overlap_fraction <= 1.0:
            raise ConfigError("overlap_fraction must be in [0, 1]")
        if not 0.0 <= self.domain_correlation <= 1.0:
            raise ConfigError("domain_correlation must be in [0, 1]")
        if self.interactions_per_user > self.items_per_domain:
            raise ConfigError("interactions_per_user exceeds items_per_domain")


def _domain_item_sets(cfg: GenConfig):
    """Global item ids per domain; consecutive domains share a fixed fraction."""
    n_share = int(round(cfg.overlap_fraction * cfg.items_per_domain))
    sets = []
    next_id = 0
    for m in range(cfg.T):
        if m == 0:
            ids = list(range(cfg.items_per_domain))
            next_id = cfg.items_per_domain
        else:
            shared = sets[m - 1][:n_share]
            fresh = list(range(next_id, next_id + cfg.items_per_domain - n_share))
            next_id += len(fresh)
            ids = shared + fresh
        sets.append(ids)
    return sets, next_id


def synthetic_events(cfg: GenConfig, seed: int):
    """Raw (pre-dedup) events plus item latent factors keyed by global id.

    Latent-factor softmax sampler: user's domain-m factor is
    rho * g_u + (1 - rho) * noise; per-user concentration follows a power law
    so light users hit few distinct items (activity-group analysis needs the
    resulting skew). Domain m's stream is independent of T, so regenerating
    with fewer domains reproduces the early domains exactly.
    """
    cfg.validate()
    item_sets, n_items = _domain_item_sets(cfg)

    user_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 1])))
    g_user = user_rng.standard_normal((cfg.users, cfg.latent_dim))
    # power-law activity weight in (0, 1]; permuted so rank is not user id
    ranks = user_rng.permutation(cfg.users)
    activity = (1.0 + ranks) ** -0.7
    activity = activity / activity.max()
    # light users get sharp softmax (few distinct items), heavy users flat
    concentration = 1.0 + 7.0 * (1.0 - activity)

    factors = {}
    events = []
    for m in range(cfg.T):
        d_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 2, m])))
        ids = item_sets[m]
        for gid in ids:
            if gid not in factors:
                factors[gid] = d_rng.standard_normal(cfg.latent_dim)
        V = np.stack([factors[g] for g in ids])  # (items_per_domain, latent)
        noise = d_rng.standard_normal((cfg.users, cfg.latent_dim))
        rho = cfg.domain_correlation
        f = rho * g_user + (1.0 - rho) * noise
        logits = concentration[:, None] * (f @ V.T) / np.sqrt(cfg.latent_dim)
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        for u in range(cfg.users):
            picks = d_rng.choice(len(ids), size=cfg.interactions_per_user, p=probs[u])
            for j, pick in enumerate(picks):
                ts = m * cfg.interactions_per_user + j
                events.append(RawRecord(str(u), str(ids[pick]), m, ts))
    return events, factors


def generate_synthetic(cfg: GenConfig, seed: int, return_factors: bool = False):
    """Deterministic synthetic multi-domain dataset (deduplicated, dense ids)."""
    events, factors = synthetic_events(cfg, seed)
    # domain-major, then user/timestamp order: dense ids are stable across T
    events.sort(key=lambda r: (r.domain, int(r.user), r.timestamp))
    ds = remap_ids(events)
    if return_factors:
        dense_factors = {ds.item_map[str(orig)]: vec
                         for orig, vec in factors.items()
                         if str(orig) in ds.item_map}
        return ds, dense_factors
    return ds


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def write_records_tsv(path, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            fields = [str(r.user), str(r.item), str(r.domain), str(r.timestamp)]
            if r.rating is not None:
                fields.append(str(r.rating))
            f.write("\t".join(fields) + "\n")


def read_records_tsv(path) -> list:
    with open(path, encoding="utf-8") as f:
        raw = parse_interactions(f, format="native")
    return [InteractionRecord(int(r.user), int(r.item), r.domain, r.timestamp, r.rating)
            for r in raw]


def write_id_map(path, mapping: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for orig, dense in sorted(mapping.items(), key=lambda kv: kv[1]):
            f.write(f"{orig}\t{dense}\n")


def read_id_map(path) -> dict:
    mapping = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            orig, dense = line.split("\t")
            mapping[orig] = int(dense)
    return mapping


def write_meta(path, dataset: Dataset) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"T={dataset.T}\n")
        f.write(f"user_count={dataset.user_count}\n")
        f.write(f"item_count={dataset.item_count}\n")
        for m, items in enumerate(dataset.per_domain_items):
            f.write(f"items_domain_{m}={','.join(str(i) for i in sorted(items))}\n")


def read_meta(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, val = line.split("=", 1)
            out[key] = val
    return out


def save_split(out_dir, dataset: Dataset, split: SplitDataset) -> None:
    import os
    os.makedirs(out_dir, exist_ok=True)
    write_records_tsv(os.path.join(out_dir, "train.tsv"), split.train.records)
    write_records_tsv(os.path.join(out_dir, "test.tsv"), split.test)
    write_id_map(os.path.join(out_dir, "user_map.tsv"), dataset.user_map)
    write_id_map(os.path.join(out_dir, "item_map.tsv"), dataset.item_map)
    write_meta(os.path.join(out_dir, "meta.txt"), dataset)


def load_split(out_dir) -> SplitDataset:
    import os
    meta = read_meta(os.path.join(out_dir, "meta.txt"))
    T = int(meta["T"])
    per_domain = []
    for m in range(T):
        val = meta.get(f"items_domain_{m}", "")
        per_domain.append(frozenset(int(x) for x in val.split(",") if x != ""))
    train_records = read_records_tsv(os.path.join(out_dir, "train.tsv"))
    test_records = read_records_tsv(os.path.join(out_dir, "test.tsv"))
    train = Dataset(
        records=train_records,
        T=T,
        user_count=int(meta["user_count"]),
        item_count=int(meta["item_count"]),
        per_domain_items=per_domain,
        user_map=read_id_map(os.path.join(out_dir, "user_map.tsv")),
        item_map=read_id_map(os.path.join(out_dir, "item_map.tsv")),
    )
    return SplitDataset(train=train, test=test_records)
