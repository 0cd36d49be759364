"""The hierarchical hypergraph recommender network.

Pipeline per layer: item-transfer refinement (attention over a source item
and its retrieved target-domain items, optionally biased by shortest-path
distances), mean-pool message passing with linear node update, then user
aggregation (attention over a user's per-domain rows). Readout is last layer;
score is inner product (cosine optional).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as tn
from .errors import ConfigError
from .graph import MultiDomainGraph, all_item_distance_buckets
from .layers import AttentionParams, ParamStore, attention
from .retrieval import RetrievalConfig
from .tensor import Tensor

# ablation ladder, weakest to strongest
VANILLA = "vanilla"
HU = "hu"
HU_PLUS = "hu_plus"
PHI = "phi"
EHI = "ehi"
EHI_PLUS = "ehi_plus"
VARIANTS = (VANILLA, HU, HU_PLUS, PHI, EHI, EHI_PLUS)

_HYPER_U_VARIANTS = (HU, HU_PLUS, PHI, EHI, EHI_PLUS)
_HYPER_I_VARIANTS = (PHI, EHI, EHI_PLUS)


@dataclass
class ModelConfig:
    dims: tuple = (128, 64)  # hidden width per layer; L = len(dims)
    heads: int = 4
    k: int = 20  # hyperedge-i size
    neighbors: int = 10  # fan-out n per hop
    temperature: float = 0.2  # InfoNCE tau
    d_max: int = 6
    variant: str = EHI_PLUS
    score: str = "inner"  # or "cosine"
    nonlinearity: str = "leaky_relu"  # or "linear" (dense-reference mode)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)

    @property
    def layers(self) -> int:
        return len(self.dims)

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if not self.dims:
            raise ConfigError("dims must be non-empty")
        widths = (self.dims[0],) + tuple(self.dims)
        for d in widths:
            if d % self.heads != 0:
                raise ConfigError(f"heads={self.heads} does not divide width {d}")
        if self.score not in ("inner", "cosine"):
            raise ConfigError(f"unknown score function {self.score!r}")
        if self.nonlinearity not in ("leaky_relu", "linear"):
            raise ConfigError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        self.retrieval.validate()

    def uses_hyper_u(self) -> bool:
        return self.variant in _HYPER_U_VARIANTS

    def uses_hyper_i(self) -> bool:
        return self.variant in _HYPER_I_VARIANTS

    def uses_distance_bias(self) -> bool:
        return self.variant == EHI_PLUS

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims), "heads": self.heads, "k": self.k,
            "neighbors": self.neighbors, "temperature": self.temperature,
            "d_max": self.d_max, "variant": self.variant, "score": self.score,
            "nonlinearity": self.nonlinearity,
            "retrieval_method": self.retrieval.method,
            "retrieval_k": self.retrieval.k,
            "time_window": self.retrieval.time_window,
            "refresh_interval": self.retrieval.refresh_interval,
            "similarity": self.retrieval.similarity,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(
            dims=tuple(d["dims"]), heads=d["heads"], k=d["k"],
            neighbors=d["neighbors"], temperature=d["temperature"],
            d_max=d["d_max"], variant=d["variant"], score=d["score"],
            nonlinearity=d["nonlinearity"],
            retrieval=RetrievalConfig(
                method=d["retrieval_method"], k=d["retrieval_k"],
                time_window=d["time_window"],
                refresh_interval=d["refresh_interval"],
                similarity=d["similarity"]),
        )


def build_params(cfg: ModelConfig, U: int, I: int, seed: int) -> ParamStore:
    """All learnable weights for the configured variant.

    One embedding row per user id (shared by its T nodes) plus one per item;
    per-layer update weights for users and items; per-layer attention weights
    for each hyperedge module; a distance-bucket bias table shared across
    layers.
    """
    cfg.validate()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 7])))
    store = ParamStore()
    d0 = cfg.dims[0]
    store.add("embed.X", (U + I, d0), rng)
    widths = (d0,) + tuple(cfg.dims)
    for l in range(1, cfg.layers + 1):
        din, dout = widths[l - 1], widths[l]
        store.add(f"up_u.l{l}.self", (din, dout), rng)
        store.add(f"up_u.l{l}.nb", (din, dout), rng)
        store.add(f"up_i.l{l}.self", (din, dout), rng)
        store.add(f"up_i.l{l}.nb", (din, dout), rng)
        if cfg.uses_hyper_i():
            for w in ("wq", "wk"):
                store.add(f"hyper_i.l{l}.{w}", (din, din), rng)
            for w in ("wv", "wo"):
                store.add_identity(f"hyper_i.l{l}.{w}", din)
        if cfg.variant == HU:
            store.add(f"hyper_u.l{l}.comb", (dout, dout), rng)
        elif cfg.uses_hyper_u():
            for w in ("wq", "wk"):
                store.add(f"hyper_u.l{l}.{w}", (dout, dout), rng)
            for w in ("wv", "wo"):
                store.add_identity(f"hyper_u.l{l}.{w}", dout)
    if cfg.uses_distance_bias():
        # one learnable scalar per head per distance bucket (0..d_max,
        # unreachable); bucket 0 (self pairs) starts positive so refinement
        # begins close to the identity and drifts away only as it learns
        phi = np.zeros((cfg.heads, cfg.d_max + 2))
        phi[:, 0] = 2.0
        t = tn.parameter(phi, name="hyper_i.phi")
        store.params["hyper_i.phi"] = t
    return store


# ---------------------------------------------------------------------------
# building blocks (unit-testable pieces of the forward pass)
# ---------------------------------------------------------------------------

def gather_initial(store: ParamStore, graph: MultiDomainGraph) -> Tensor:
    """Layer-0 rows for every node; a user's T nodes share one embedding row."""
    U, I, T = graph.U, graph.I, graph.T
    idx = np.empty(graph.num_nodes, dtype=np.int64)
    for u in range(U):
        idx[u * T:(u + 1) * T] = u
    idx[U * T:] = U + np.arange(I)
    return tn.gather_rows(store["embed.X"], idx)


def hyper_i_refine(h_source: Tensor, candidates: Tensor | None, bias,
                   params: AttentionParams, heads: int) -> Tensor:
    """Refine one source-item row against its candidate rows.

    h_source: (1, d); candidates: (|S|, d) or None/empty -> unchanged input.
    bias, when present, is the per-head bucketed-distance bias
    (heads, 1+|S|, 1+|S|) applied inside the attention.
    """
    if candidates is None or candidates.shape[0] == 0:
        return h_source
    stacked = tn.concat_rows([h_source, candidates])
    if bias is not None and not isinstance(bias, Tensor):
        bias = tn.parameter(np.asarray(bias))
    if bias is not None:
        bias = tn.reshape(bias, (1,) + bias.shape)  # group axis
    grouped = tn.reshape(stacked, (1,) + stacked.shape)
    out = attention(grouped, grouped, grouped, bias, heads, params)
    return tn.slice_rows(tn.reshape(out, out.shape[1:]), 0, 1)


def hyper_u_refine(rows: Tensor, store: ParamStore, variant: str, layer: int,
                   heads: int) -> Tensor:
    """Refine one user's T per-domain rows ((T, d) or batched (G, T, d)).

    HU: every row becomes a shared linear map of the mean row. HU_PLUS and
    above: multi-head self-attention over the T rows, no positional terms.
    """
    if variant == VANILLA:
        raise ConfigError("hyper_u_refine is disabled for the vanilla variant")
    squeeze = rows.ndim == 2
    if squeeze:
        rows = tn.reshape(rows, (1,) + rows.shape)
    if variant == HU:
        g, t, d = rows.shape
        mean = tn.scale(tn.sum_axis(rows, 1, keepdims=True), 1.0 / t)
        combined = tn.matmul(mean, store[f"hyper_u.l{layer}.comb"])
        out = tn.broadcast_to(combined, (g, t, d))
    else:
        out = attention(rows, rows, rows, None, heads,
                        store.attention_params(f"hyper_u.l{layer}"))
    if squeeze:
        out = tn.reshape(out, out.shape[1:])
    return out


def readout(layer_outputs: list) -> Tensor:
    """Final representation: last layer only."""
    return layer_outputs[-1]


def predict(z_u: Tensor, z_i: Tensor, score: str = "inner") -> Tensor:
    """Similarity score between matching rows of z_u and z_i."""
    raw = tn.inner_product_rows(z_u, z_i)
    if score == "inner":
        return raw
    eps = tn.parameter(np.full(raw.shape, 1e-24))
    nu = tn.add(tn.inner_product_rows(z_u, z_u), eps)
    ni = tn.add(tn.inner_product_rows(z_i, z_i), eps)
    inv_denom = tn.exp(tn.scale(tn.add(tn.log(nu), tn.log(ni)), -0.25))
    return tn.mul(raw, tn.mul(inv_denom, inv_denom))


# ---------------------------------------------------------------------------
# full model
# ---------------------------------------------------------------------------

class HyperedgeBatch:
    """Per-target-domain dense view of the hyperedge-i sets.

    owners: (G,) item node indices to be refined; members: (G, 1+k) node
    indices (padded with 0); mask: (G, 1+k) validity; buckets: (G, 1+k, 1+k)
    distance buckets or None.
    """

    def __init__(self, owners, members, mask, buckets):
        self.owners = owners
        self.members = members
        self.mask = mask
        self.buckets = buckets

    @property
    def size(self) -> int:
        return len(self.owners)


class Model:
    def __init__(self, cfg: ModelConfig, graph: MultiDomainGraph, store: ParamStore):
        cfg.validate()
        self.cfg = cfg
        self.graph = graph
        self.store = store
        self._hyperedge_batches: dict[int, HyperedgeBatch] = {}
        self._native_items = [set(graph.item_users[m].keys()) for m in range(graph.T)]

    # -- hyperedge-i dense packing ------------------------------------------

    def refresh_hyperedge_batches(self) -> None:
        """Rebuild the packed per-target views from graph.hyperedges_i, and
        bucketed distances when the variant uses them."""
        self._hyperedge_batches = {}
        if not self.cfg.uses_hyper_i():
            return
        g = self.graph
        dist = None
        if self.cfg.uses_distance_bias():
            involved = set()
            for (i, _t), edge in g.hyperedges_i.items():
                if len(edge.nodes) > 1:
                    involved.update(n - g.num_user_nodes for n in edge.nodes)
            if involved:
                dist = all_item_distance_buckets(g, involved, self.cfg.d_max)
        for t in range(g.T):
            owners, members, masks, buckets = [], [], [], []
            width = 1 + self.cfg.retrieval.k
            for (i, tgt), edge in sorted(g.hyperedges_i.items()):
                if tgt != t or len(edge.nodes) <= 1 or i in self._native_items[t]:
                    continue
                owners.append(g.item_node(i))
                row = np.zeros(width, dtype=np.int64)
                msk = np.zeros(width, dtype=bool)
                row[: len(edge.nodes)] = edge.nodes
                msk[: len(edge.nodes)] = True
                members.append(row)
                masks.append(msk)
                if dist is not None:
                    items = [n - g.num_user_nodes for n in edge.nodes]
                    pos = [dist["index"][x] for x in items]
                    b = np.full((width, width), self.cfg.d_max + 1, dtype=np.int64)
                    sub = dist["buckets"][np.ix_(pos, pos)]
                    b[: len(pos), : len(pos)] = sub
                    buckets.append(b)
            if owners:
                self._hyperedge_batches[t] = HyperedgeBatch(
                    np.array(owners), np.stack(members), np.stack(masks),
                    np.stack(buckets) if buckets else None)

    # -- per-step neighbour sampling ----------------------------------------

    def _sampled_neighbors(self, rng: np.random.Generator):
        """Padded (num_nodes, n) neighbour indices + mask, fan-out capped."""
        g, n = self.graph, self.cfg.neighbors
        idx = np.zeros((g.num_nodes, n), dtype=np.int64)
        mask = np.zeros((g.num_nodes, n), dtype=bool)
        for v in range(g.num_nodes):
            nbrs = g.neighbors(v)
            deg = len(nbrs)
            if deg == 0:
                continue
            if deg <= n:
                idx[v, :deg] = nbrs
                mask[v, :deg] = True
            else:
                idx[v] = rng.choice(nbrs, size=n, replace=False)
                mask[v] = True
        return idx, mask

    # -- forward -------------------------------------------------------------

    def sample_all_neighbors(self, rng: np.random.Generator) -> list:
        """One (idx, mask) fan-out sample per layer, reusable across the
        per-target forwards of a single step."""
        return [self._sampled_neighbors(rng) for _ in range(self.cfg.layers)]

    def node_representations(self, target_domain: int | None,
                             rng: np.random.Generator | None = None,
                             hooks: list | None = None,
                             neighbor_samples: list | None = None) -> Tensor:
        """Final (num_nodes, d_L) representations with `target_domain` as the
        transfer target (None for target-free variants). Phase order per layer:
        item refinement, neighbour aggregation, node update, user refinement."""
        cfg, g, store = self.cfg, self.graph, self.store
        if cfg.uses_hyper_i() and target_domain is None:
            raise ConfigError("item-transfer variants need a target domain")
        if neighbor_samples is None:
            if rng is None:
                raise ValueError("need an rng or precomputed neighbor samples")
            neighbor_samples = self.sample_all_neighbors(rng)
        H = gather_initial(store, g)
        UT = g.num_user_nodes
        for l in range(1, cfg.layers + 1):
            if cfg.uses_hyper_i():
                H = self._refine_items(H, target_domain, l, hooks)
            if hooks is not None:
                hooks.append(("aggregate", l))
            nb_idx, nb_mask = neighbor_samples[l - 1]
            gathered = tn.gather_rows(H, nb_idx)
            gathered = tn.mul_const(gathered, nb_mask[:, :, None].astype(float))
            counts = nb_mask.sum(axis=1)
            inv = np.zeros_like(counts, dtype=float)
            nz = counts > 0
            inv[nz] = 1.0 / counts[nz]
            agg = tn.mul_const(tn.sum_axis(gathered, 1), inv[:, None])
            if hooks is not None:
                hooks.append(("update", l))
            h_users = tn.add(
                tn.matmul(tn.slice_rows(H, 0, UT), store[f"up_u.l{l}.self"]),
                tn.matmul(tn.slice_rows(agg, 0, UT), store[f"up_u.l{l}.nb"]))
            h_items = tn.add(
                tn.matmul(tn.slice_rows(H, UT, g.num_nodes), store[f"up_i.l{l}.self"]),
                tn.matmul(tn.slice_rows(agg, UT, g.num_nodes), store[f"up_i.l{l}.nb"]))
            H = tn.concat_rows([h_users, h_items])
            if l < cfg.layers and cfg.nonlinearity == "leaky_relu":
                H = tn.leaky_relu(H, 0.01)
            if cfg.uses_hyper_u():
                if hooks is not None:
                    hooks.append(("hyper_u", l))
                users = tn.reshape(tn.slice_rows(H, 0, UT), (g.U, g.T, H.shape[1]))
                users = hyper_u_refine(users, store, cfg.variant, l, cfg.heads)
                H = tn.concat_rows([
                    tn.reshape(users, (UT, H.shape[1])),
                    tn.slice_rows(H, UT, g.num_nodes)])
        return readout([H])

    def _refine_items(self, H: Tensor, target: int, layer: int,
                      hooks: list | None) -> Tensor:
        batch = self._hyperedge_batches.get(target)
        if batch is None or batch.size == 0:
            return H
        if hooks is not None:
            hooks.append(("hyper_i", layer))
        rows = tn.gather_rows(H, batch.members)  # (G, 1+k, d)
        bias = None
        if self.cfg.uses_distance_bias():
            bias = tn.distance_bias(self.store["hyper_i.phi"], batch.buckets)
        out = attention(rows, rows, rows, bias, self.cfg.heads,
                        self.store.attention_params(f"hyper_i.l{layer}"),
                        key_mask=batch.mask)
        G, R, d = out.shape
        first = tn.gather_rows(tn.reshape(out, (G * R, d)), np.arange(G) * R)
        return tn.scatter_rows(H, batch.owners, first)

    def score_batch(self, Z: Tensor, users, domain: int, cand_items) -> Tensor:
        """Scores (B, C) of each user's domain node against candidate items."""
        g = self.graph
        users = np.asarray(users, dtype=np.int64)
        cand_items = np.asarray(cand_items, dtype=np.int64)
        zu = tn.gather_rows(Z, users * g.T + domain)  # (B, d)
        zi = tn.gather_rows(Z, g.num_user_nodes + cand_items)  # (B, C, d)
        if self.cfg.score == "cosine":
            B, C, d = zi.shape
            zu_rep = tn.broadcast_to(tn.reshape(zu, (B, 1, d)), (B, C, d))
            flat = predict(tn.reshape(zu_rep, (B * C, d)),
                           tn.reshape(zi, (B * C, d)), "cosine")
            return tn.reshape(flat, (B, C))
        scores = tn.matmul(zi, tn.reshape(zu, zu.shape + (1,)))
        return tn.reshape(scores, scores.shape[:2])
