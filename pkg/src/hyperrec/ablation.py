"""Ablation driver: train and evaluate each requested variant (and optional
domain-count prefixes) on the synthetic benchmark under a shared seed set."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .config import RunConfig
from .data import generate_synthetic, leave_one_out_split
from .training import train


def run_single(cfg: RunConfig, variant: str, seed: int, T_prime: int | None = None,
               out_dir: str | None = None):
    """One train+evaluate run; returns (MetricsTable, TrainResult, split)."""
    from .metrics import evaluate

    gen = cfg.gen_config()
    if T_prime is not None:
        gen = replace(gen, T=T_prime)
    dataset = generate_synthetic(gen, seed)
    split = leave_one_out_split(dataset)
    model_cfg = cfg.model_config()
    model_cfg.variant = variant
    # the ladder fixes the retrieval flavour: PHI is the path-based rung,
    # EHI and EHIplus are the embedding-based rungs
    if variant == "phi":
        model_cfg.retrieval.method = "path"
    elif variant in ("ehi", "ehi_plus"):
        model_cfg.retrieval.method = "embedding"
    train_cfg = cfg.train_config()
    train_cfg.seed = seed
    result = train(split, model_cfg, train_cfg, out_dir=out_dir)
    table = evaluate(result.model, split, ks=cfg.eval_ks, seed=seed)
    return table, result, split


def run_ablation(cfg: RunConfig, variants=None, seeds=None,
                 domain_sweep: bool | None = None):
    """All requested (T', variant, seed) runs.

    Returns (rows, tables): rows are flat per-domain records including
    seed-averaged means (seed = "mean"); tables maps (T', variant, seed) to
    the full MetricsTable for finer-grained consumers.
    """
    variants = list(variants if variants is not None else cfg.variants)
    seeds = list(seeds if seeds is not None else cfg.seeds)
    sweep = cfg.domain_sweep if domain_sweep is None else domain_sweep
    t_values = list(range(1, cfg.T + 1)) if sweep else [cfg.T]

    rows = []
    tables = {}
    for t_prime in t_values:
        for variant in variants:
            per_seed = []
            for seed in seeds:
                table, _result, _split = run_single(cfg, variant, seed, t_prime)
                tables[(t_prime, variant, seed)] = table
                per_seed.append(table)
                for r in table.rows:
                    if r["group"] != "ALL":
                        continue
                    rows.append({"T": t_prime, "variant": variant, "seed": seed,
                                 "domain": r["domain"], "metric": r["metric"],
                                 "K": r["K"], "value": r["value"]})
            # seed-averaged means per (domain, metric, K)
            keys = {(r["domain"], r["metric"], r["K"])
                    for t in per_seed for r in t.rows if r["group"] == "ALL"}
            for domain, metric, k in sorted(keys, key=lambda x: (x[0], x[1], x[2] or 0)):
                vals = [t.get(domain, metric, k) for t in per_seed]
                vals = [v for v in vals if v is not None]
                if vals:
                    rows.append({"T": t_prime, "variant": variant, "seed": "mean",
                                 "domain": domain, "metric": metric, "K": k,
                                 "value": float(np.mean(vals))})
    return rows, tables


def ablation_tsv(rows) -> str:
    lines = ["T\tvariant\tseed\tdomain\tmetric\tK\tvalue"]
    for r in rows:
        k = "" if r["K"] is None else str(r["K"])
        lines.append(f"{r['T']}\t{r['variant']}\t{r['seed']}\t{r['domain']}"
                     f"\t{r['metric']}\t{k}\t{r['value']:.6f}")
    return "\n".join(lines) + "\n"
