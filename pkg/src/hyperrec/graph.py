"""Unified multi-domain graph: per-domain user nodes, shared item nodes,
typed edges, hyperedges, incidence queries and bounded shortest paths.

Node indexing is dense: user node (u, m) -> u * T + m, item node i ->
U * T + i. The graph is immutable after build; hyperedge sets are attached by
their builders in a single-writer phase.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .data import Dataset

HYPER_U = "hyper_u"
HYPER_I = "hyper_i"


@dataclass
class Hyperedge:
    kind: str  # HYPER_U or HYPER_I
    nodes: list  # node indices; for HYPER_I position 0 is the source item
    owner: object  # user id (HYPER_U) or (item id, target domain) (HYPER_I)


@dataclass
class DistanceMatrix:
    """Bucketed pairwise shortest-path lengths among a node subset.

    Bucket values are 0..d_max plus `unreachable` (= d_max + 1) for pairs
    farther than d_max or disconnected.
    """
    nodes: list
    buckets: np.ndarray  # (n, n) int
    d_max: int

    @property
    def unreachable(self) -> int:
        return self.d_max + 1


class MultiDomainGraph:
    def __init__(self, U: int, I: int, T: int):
        self.U = U
        self.I = I
        self.T = T
        # per-domain interaction lists with timestamps
        self.user_items = [defaultdict(list) for _ in range(T)]  # [m][u] -> [(i, ts)]
        self.item_users = [defaultdict(list) for _ in range(T)]  # [m][i] -> [(u, ts)]
        self.hyperedges_u: list = []
        self.hyperedges_i: dict = {}  # (item, target domain) -> Hyperedge
        self._adj = None

    # -- node indexing -------------------------------------------------------

    @property
    def num_user_nodes(self) -> int:
        return self.U * self.T

    @property
    def num_nodes(self) -> int:
        return self.U * self.T + self.I

    def user_node(self, u: int, m: int) -> int:
        return u * self.T + m

    def item_node(self, i: int) -> int:
        return self.U * self.T + i

    def node_kind(self, node: int):
        if node < self.num_user_nodes:
            return "user", divmod(node, self.T)
        return "item", node - self.num_user_nodes

    # -- adjacency -----------------------------------------------------------

    def _build_adjacency(self) -> None:
        adj = [[] for _ in range(self.num_nodes)]
        for m in range(self.T):
            for u, pairs in self.user_items[m].items():
                un = self.user_node(u, m)
                for i, _ts in pairs:
                    adj[un].append(self.item_node(i))
                    adj[self.item_node(i)].append(un)
        self._adj = [np.array(sorted(a), dtype=np.int64) for a in adj]

    def neighbors(self, node: int) -> np.ndarray:
        return self._adj[node]

    def degree(self, node: int) -> int:
        return len(self._adj[node])

    def sparse_adjacency(self) -> csr_matrix:
        rows, cols = [], []
        for v, nbrs in enumerate(self._adj):
            rows.extend([v] * len(nbrs))
            cols.extend(nbrs)
        data = np.ones(len(rows), dtype=np.int8)
        return csr_matrix((data, (rows, cols)),
                          shape=(self.num_nodes, self.num_nodes))


def build_graph(train: Dataset) -> MultiDomainGraph:
    """Graph over train interactions. Every (user, domain) pair gets a node,
    even with no history in that domain (isolated; Hyper-U still reaches it)."""
    g = MultiDomainGraph(U=train.user_count, I=train.item_count, T=train.T)
    for r in train.records:
        g.user_items[r.domain][r.user].append((r.item, r.timestamp))
        g.item_users[r.domain][r.item].append((r.user, r.timestamp))
    g._build_adjacency()
    return g


def build_hyperedges_u(graph: MultiDomainGraph) -> MultiDomainGraph:
    """One hyperedge per user joining its T per-domain nodes, in domain order."""
    graph.hyperedges_u = [
        Hyperedge(HYPER_U, [graph.user_node(u, m) for m in range(graph.T)], owner=u)
        for u in range(graph.U)
    ]
    return graph


class IncidenceView:
    """Query access equivalent to the incidence matrix over all hyperedges."""

    def __init__(self, graph: MultiDomainGraph):
        self.edges = list(graph.hyperedges_u) + list(graph.hyperedges_i.values())
        self._node_edges = defaultdict(set)
        self._edge_nodes = []
        for e_idx, e in enumerate(self.edges):
            nodes = set(e.nodes)
            self._edge_nodes.append(nodes)
            for v in nodes:
                self._node_edges[v].add(e_idx)

    def h(self, v: int, e_idx: int) -> int:
        return 1 if v in self._edge_nodes[e_idx] else 0

    def edges_of(self, v: int) -> set:
        """E_v: indices of hyperedges containing node v."""
        return set(self._node_edges.get(v, set()))

    def nodes_of(self, e_idx: int) -> set:
        """V_e: nodes of hyperedge e."""
        return set(self._edge_nodes[e_idx])

    def hyper_neighbors(self, v: int) -> set:
        """N_v: nodes sharing at least one hyperedge with v (v excluded)."""
        out = set()
        for e_idx in self._node_edges.get(v, ()):
            out |= self._edge_nodes[e_idx]
        out.discard(v)
        return out


def sample_neighbors(graph: MultiDomainGraph, node: int, n: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Up to n neighbors: all of them (adjacency order) if degree <= n, else a
    uniform sample without replacement. Isolated node -> empty array."""
    if n < 1:
        raise ValueError("n must be >= 1")
    nbrs = graph.neighbors(node)
    if len(nbrs) <= n:
        return nbrs.copy()
    return rng.choice(nbrs, size=n, replace=False)


def shortest_path_distances(graph: MultiDomainGraph, nodeset, d_max: int) -> DistanceMatrix:
    """Pairwise shortest-path lengths among `nodeset` over ordinary user-item
    edges only (hyperedges excluded), truncated at depth d_max."""
    nodes = list(nodeset)
    if not nodes:
        raise ValueError("nodeset must be non-empty")
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    adj = graph.sparse_adjacency()
    dist = _csgraph_dijkstra(adj, unweighted=True, indices=nodes, limit=d_max)
    sub = dist[:, nodes]
    buckets = np.where(np.isfinite(sub) & (sub <= d_max),
                       sub, d_max + 1).astype(np.int64)
    return DistanceMatrix(nodes=nodes, buckets=buckets, d_max=d_max)


def all_item_distance_buckets(graph: MultiDomainGraph, item_ids, d_max: int) -> dict:
    """Bucketed item-to-item distances for the given items, as a dense lookup
    {item id -> row index} plus matrix; shared by all hyperedge-i instances."""
    item_ids = sorted(set(item_ids))
    nodes = [graph.item_node(i) for i in item_ids]
    dm = shortest_path_distances(graph, nodes, d_max)
    index = {i: pos for pos, i in enumerate(item_ids)}
    return {"index": index, "buckets": dm.buckets, "d_max": d_max}


# ---------------------------------------------------------------------------
# debug dump (round-trips losslessly)
# ---------------------------------------------------------------------------

def dump_graph(graph: MultiDomainGraph, edges_path, hyperedges_path) -> None:
    with open(edges_path, "w", encoding="utf-8") as f:
        for m in range(graph.T):
            for u in sorted(graph.user_items[m]):
                for i, ts in graph.user_items[m][u]:
                    f.write(f"{m}\t{u}\t{i}\t{ts}\n")
    with open(hyperedges_path, "w", encoding="utf-8") as f:
        for e in list(graph.hyperedges_u) + list(graph.hyperedges_i.values()):
            owner = e.owner if e.kind == HYPER_U else f"{e.owner[0]}:{e.owner[1]}"
            f.write(f"{e.kind}\t{owner}\t{','.join(str(v) for v in e.nodes)}\n")


def load_graph_dump(edges_path, hyperedges_path, U: int, I: int, T: int) -> MultiDomainGraph:
    g = MultiDomainGraph(U=U, I=I, T=T)
    with open(edges_path, encoding="utf-8") as f:
        for line in f:
            m, u, i, ts = (int(x) for x in line.split("\t"))
            g.user_items[m][u].append((i, ts))
            g.item_users[m][i].append((u, ts))
    g._build_adjacency()
    with open(hyperedges_path, encoding="utf-8") as f:
        for line in f:
            kind, owner_s, nodes_s = line.rstrip("\n").split("\t")
            nodes = [int(x) for x in nodes_s.split(",")]
            if kind == HYPER_U:
                g.hyperedges_u.append(Hyperedge(kind, nodes, owner=int(owner_s)))
            else:
                item_s, dom_s = owner_s.split(":")
                owner = (int(item_s), int(dom_s))
                g.hyperedges_i[owner] = Hyperedge(kind, nodes, owner=owner)
    return g
