"""Batch sampling, the InfoNCE objective, and the optimization loop."""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import tensor as tn
from .data import SplitDataset
from .errors import NumericError
from .graph import HYPER_I, Hyperedge, build_graph, build_hyperedges_u
from .layers import ParamStore
from .model import Model, ModelConfig, build_params
from .optim import Adam
from .retrieval import PATH_BASED, build_hyperedges_i
from .tensor import Tensor


@dataclass
class TrainConfig:
    batch_size: int = 512
    negatives: int = 64
    epochs: int = 30
    steps: int | None = None  # overrides epochs when set
    checkpoint_every: int = 0  # 0 disables periodic checkpoints
    log_every: int = 10
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0


@dataclass
class BatchSample:
    user: int
    domain: int
    positive: int
    negatives: np.ndarray


def sample_batch(train_records, per_domain_items, train_pairs: set,
                 batch_size: int, n_neg: int, rng: np.random.Generator):
    """Positives uniform over the mixed multi-domain record list; negatives
    uniform over the positive's domain pool, rejecting observed train pairs up
    to 100 times (then accepting, counted in the returned telemetry)."""
    pools = [np.array(sorted(s), dtype=np.int64) for s in per_domain_items]
    picks = rng.integers(0, len(train_records), size=batch_size)
    batch = []
    forced = 0
    for ridx in picks:
        r = train_records[ridx]
        pool = pools[r.domain]
        negs = np.empty(n_neg, dtype=np.int64)
        for j in range(n_neg):
            cand = pool[rng.integers(0, len(pool))]
            tries = 0
            while (r.user, int(cand), r.domain) in train_pairs and tries < 100:
                cand = pool[rng.integers(0, len(pool))]
                tries += 1
            if tries >= 100:
                forced += 1
            negs[j] = cand
        batch.append(BatchSample(r.user, r.domain, r.item, negs))
    return batch, forced


def infonce_loss(pos_score: Tensor, neg_scores: Tensor, tau: float) -> Tensor:
    """Mean InfoNCE over the batch; the positive appears in the denominator
    alongside the negatives (categorical cross-entropy over 1 + N candidates),
    computed with log-sum-exp stabilization."""
    if tau <= 0:
        raise ValueError("temperature must be positive")
    b = pos_score.shape[0]
    pos_col = tn.reshape(pos_score, (b, 1))
    scores = tn.concat([pos_col, neg_scores], axis=1)
    return _infonce_from_scores(scores, tau)


def _infonce_from_scores(scores: Tensor, tau: float) -> Tensor:
    """InfoNCE from a (B, 1 + N) score matrix with the positive in column 0."""
    b = scores.shape[0]
    scaled = tn.scale(scores, 1.0 / tau)
    lse = tn.logsumexp_last(scaled)
    pos = tn.reshape(tn.gather_rows(tn.transpose(scaled, (1, 0)), [0]), (b,))
    return tn.scale(tn.sum_all(tn.sub(lse, pos)), 1.0 / b)


@dataclass
class TrainResult:
    store: ParamStore
    model: Model
    log: list = field(default_factory=list)
    forced_negatives: int = 0


def _step_rng(seed: int, stream: int, step: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream, step])))


def steps_for(train_cfg: TrainConfig, n_records: int) -> int:
    if train_cfg.steps is not None:
        return train_cfg.steps
    return train_cfg.epochs * math.ceil(n_records / train_cfg.batch_size)


def _item_reps(store: ParamStore, U: int) -> np.ndarray:
    return store["embed.X"].data[U:]


def _serialize_hyperedges(graph) -> dict:
    keys, offsets, nodes = [], [0], []
    for (i, t), edge in sorted(graph.hyperedges_i.items()):
        keys.append((i, t))
        nodes.extend(edge.nodes)
        offsets.append(len(nodes))
    return {
        "he_keys": np.array(keys, dtype=np.int64).reshape(-1, 2),
        "he_offsets": np.array(offsets, dtype=np.int64),
        "he_nodes": np.array(nodes, dtype=np.int64),
    }


def _restore_hyperedges(graph, arrays: dict) -> None:
    keys = arrays["he_keys"]
    offsets = arrays["he_offsets"]
    nodes = arrays["he_nodes"]
    edges = {}
    for n, (i, t) in enumerate(keys):
        key = (int(i), int(t))
        edges[key] = Hyperedge(HYPER_I, nodes[offsets[n]:offsets[n + 1]].tolist(), key)
    graph.hyperedges_i = edges


def save_checkpoint(path, store: ParamStore, adam: Adam, model: Model,
                    step: int, train_cfg: TrainConfig) -> None:
    extra = dict(adam.state_arrays())
    extra["step"] = np.array([step], dtype=np.int64)
    if model.cfg.uses_hyper_i():
        extra.update(_serialize_hyperedges(model.graph))
    meta = {
        "model_config": model.cfg.to_dict(),
        "seed": train_cfg.seed,
        "graph": {"U": model.graph.U, "I": model.graph.I, "T": model.graph.T},
    }
    store.save(path, meta=meta, extra=extra)


def load_checkpoint(path):
    store, meta, extra = ParamStore.load(path)
    return store, meta, extra


def train(split: SplitDataset, model_cfg: ModelConfig, train_cfg: TrainConfig,
          out_dir: str | None = None, resume_from: str | None = None) -> TrainResult:
    """Full optimization loop; fully reproducible given the seed.

    Emits one structured log record per `log_every` steps; writes periodic
    checkpoints to `out_dir` when configured; aborts on a non-finite loss with
    a diagnostic checkpoint.
    """
    model_cfg.validate()
    graph = build_graph(split.train)
    build_hyperedges_u(graph)
    seed = train_cfg.seed

    start_step = 0
    if resume_from is not None:
        store, meta, extra = load_checkpoint(resume_from)
        if meta["model_config"] != model_cfg.to_dict():
            raise ValueError("checkpoint model config does not match")
        start_step = int(extra["step"][0])
    else:
        store = build_params(model_cfg, split.train.user_count,
                             split.train.item_count, seed)

    model = Model(model_cfg, graph, store)
    adam = Adam(store, lr=train_cfg.lr, beta1=train_cfg.beta1,
                beta2=train_cfg.beta2, eps=train_cfg.eps)
    if resume_from is not None:
        adam.load_state_arrays(extra)
        if model_cfg.uses_hyper_i():
            _restore_hyperedges(graph, extra)
            model.refresh_hyperedge_batches()

    records = split.train.records
    train_pairs = {(r.user, r.item, r.domain) for r in records}
    n_steps = steps_for(train_cfg, len(records))
    domains_present = sorted({r.domain for r in records})
    result = TrainResult(store=store, model=model)

    for step in range(start_step, n_steps):
        t0 = time.perf_counter()
        if model_cfg.uses_hyper_i():
            if model_cfg.retrieval.method == PATH_BASED:
                # path sets depend only on the training graph: built once
                refresh = not graph.hyperedges_i
            else:
                refresh = (step % model_cfg.retrieval.refresh_interval == 0
                           or not graph.hyperedges_i)
            if refresh:
                build_hyperedges_i(graph, _item_reps(store, graph.U),
                                   model_cfg.retrieval, step=0,
                                   rng=_step_rng(seed, 6, 0))
                model.refresh_hyperedge_batches()
                result.log.append({"event": "hyperedge_refresh", "step": step,
                                   "variant": model_cfg.variant, "seed": seed})

        batch_rng = _step_rng(seed, 3, step)
        batch, forced = sample_batch(records, split.train.per_domain_items,
                                     train_pairs, train_cfg.batch_size,
                                     train_cfg.negatives, batch_rng)
        result.forced_negatives += forced

        nb_rng = _step_rng(seed, 4, step)
        neighbor_samples = model.sample_all_neighbors(nb_rng)

        per_sample_losses = []
        if model_cfg.uses_hyper_i():
            groups = {m: [s for s in batch if s.domain == m] for m in domains_present}
        else:
            groups = {None: batch}
        for target, samples in groups.items():
            if not samples:
                continue
            Z = model.node_representations(target, neighbor_samples=neighbor_samples)
            by_domain = {}
            for s in samples:
                by_domain.setdefault(s.domain, []).append(s)
            for m, subs in by_domain.items():
                users = [s.user for s in subs]
                cands = np.stack([np.concatenate(([s.positive], s.negatives))
                                  for s in subs])
                scores = model.score_batch(Z, users, m, cands)
                scaled = tn.scale(scores, 1.0 / model_cfg.temperature)
                lse = tn.logsumexp_last(scaled)
                pos = tn.reshape(
                    tn.gather_rows(tn.transpose(scaled, (1, 0)), [0]),
                    (len(subs),))
                per_sample_losses.append(tn.sub(lse, pos))

        loss = tn.scale(tn.sum_all(tn.concat(per_sample_losses, axis=0)),
                        1.0 / len(batch))
        loss_val = loss.item()
        if not np.isfinite(loss_val):
            if out_dir:
                os.makedirs(out_dir, exist_ok=True)
                save_checkpoint(os.path.join(out_dir, "diagnostic.npz"),
                                store, adam, model, step, train_cfg)
            raise NumericError(f"non-finite loss at step {step}")

        grads = store.gradients(loss)
        adam.step(grads)

        if train_cfg.log_every and (step + 1) % train_cfg.log_every == 0:
            wall_ms = (time.perf_counter() - t0) * 1000.0
            result.log.append({"step": step + 1, "loss": loss_val,
                               "wall_ms": wall_ms, "variant": model_cfg.variant,
                               "seed": seed})
        if (out_dir and train_cfg.checkpoint_every
                and (step + 1) % train_cfg.checkpoint_every == 0):
            os.makedirs(out_dir, exist_ok=True)
            save_checkpoint(os.path.join(out_dir, f"checkpoint_{step + 1}.npz"),
                            store, adam, model, step + 1, train_cfg)

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        save_checkpoint(os.path.join(out_dir, "final.npz"), store, adam, model,
                        n_steps, train_cfg)
        with open(os.path.join(out_dir, "train_log.jsonl"), "w") as f:
            for rec in result.log:
                f.write(json.dumps(rec, sort_keys=True) + "\n")
    return result
