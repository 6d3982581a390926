"""Approximate vertex-label and vertex-vertex distance oracle.

Every node ``r`` of the decomposition stores, for each path on its separator
and frame, connection sets of its hosted vertices and labels.  Lengths of
type-0 sets are distances inside the node's host graph, type-1 lengths are
upper bounds on distances in the whole graph obtained through an auxiliary
graph that only uses ancestors' type-0 connections.
"""
from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .covering import (ComparisonCounter, CoverBatch, combine_lists, cover_params,
                       eps_cover_batch, thin_batch, thin_size_bound)
from .graph_core import INF, GraphView, LabeledPlanarGraph, multi_source_distances
from .separator import (DecompositionTree, ProbeCounter, build_decomposition,
                        default_leaf_size, lowest_labeled_ancestor)

log = logging.getLogger(__name__)

VERTEX, LABEL = "v", "l"


@dataclass
class SlotTable:
    """Connection sets of many owners to one path (CSR over sorted owners).

    ``pos`` indexes the full separator path; ``xs`` caches its prefix values.
    """

    owners: np.ndarray
    indptr: np.ndarray
    pos: np.ndarray
    length: np.ndarray
    xs: np.ndarray = field(default=None, repr=False)

    def row(self, owner: int) -> int:
        i = int(np.searchsorted(self.owners, owner))
        if i < len(self.owners) and self.owners[i] == owner:
            return i
        return -1

    def get(self, owner: int) -> tuple[np.ndarray, np.ndarray] | None:
        i = self.row(owner)
        if i < 0:
            return None
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.pos[a:b], self.length[a:b]

    def lists(self, owner: int) -> tuple[list, list]:
        i = self.row(owner)
        if i < 0:
            return [], []
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.xs[a:b].tolist(), self.length[a:b].tolist()

    @property
    def num_connections(self) -> int:
        return len(self.pos)

    def max_size(self) -> int:
        return int(np.diff(self.indptr).max(initial=0))


def _slot_from_batch(owners: np.ndarray, batch: CoverBatch, positions: np.ndarray,
                     prefix: np.ndarray) -> SlotTable:
    pos = positions[batch.pos]
    return SlotTable(np.asarray(owners, dtype=np.int64), batch.indptr, pos, batch.length,
                     prefix[pos])


@dataclass
class BuildStats:
    nodes: int = 0
    depth: int = 0
    max_frame: int = 0
    connections: dict = field(default_factory=dict)
    max_set: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)

    @property
    def total_connections(self) -> int:
        return sum(self.connections.values())


@dataclass
class QueryStats:
    comparisons: int = 0
    probes: int = 0
    combinations: int = 0
    leaf_search: bool = False


@dataclass
class AuxiliaryLabelGraph:
    """Auxiliary graph of one node with label copies kept as explicit leaves.

    ``view`` holds the real material (region, reduced paths, connection
    edges); copy ``i`` is a separate vertex ``view.n + i`` joined only to
    ``copy_anchor[i]`` by an edge of length ``copy_length[i]``.
    """

    node: int
    view: GraphView
    copy_label: np.ndarray
    copy_anchor: np.ndarray
    copy_length: np.ndarray

    def with_copies(self) -> GraphView:
        c = len(self.copy_label)
        ids = np.arange(self.view.n, self.view.n + c, dtype=np.int64)
        return GraphView(np.concatenate([self.view.vertices, -1 - np.arange(c)]),
                         np.concatenate([self.view.eu, self.copy_anchor]),
                         np.concatenate([self.view.ev, ids]),
                         np.concatenate([self.view.ew, self.copy_length]),
                         np.concatenate([self.view.eid, np.full(c, -1, dtype=np.int64)]))

    def copies_adjacent(self) -> bool:
        """True iff some edge joins two label copies (must never happen)."""
        full = self.with_copies()
        is_copy = full.vertices < 0
        return bool(np.any(is_copy[full.eu] & is_copy[full.ev]))


class VertexLabelOracle:
    def __init__(self, graph: LabeledPlanarGraph, tree: DecompositionTree, eps: Fraction):
        self.graph = graph
        self.tree = tree
        self.eps = Fraction(eps)
        self.eps_c = self.eps / 3
        self.tables: list[dict[tuple[int, int, str], SlotTable]] = [dict() for _ in tree.nodes]
        self.stats = BuildStats()
        self._leaf_adj: dict[int, tuple[np.ndarray, list]] = {}

    # ------------------------------------------------------------ parameters
    def vertex_set_bound(self) -> int:
        eq, e1 = cover_params(self.eps_c)
        return thin_size_bound(2 * eq, e1)

    def label_set_bound(self) -> int:
        return thin_size_bound(0, self.eps_c)

    def slots_per_node_bound(self, frame_cap: int) -> int:
        return 2 * frame_cap + 2

    # ------------------------------------------------------------- structure
    def host_view(self, r: int) -> GraphView:
        """Region edges outside the frame, plus reduced frame and separator paths."""
        tree, g = self.tree, self.graph
        nd = tree.nodes[r]
        V = nd.vertices
        eu = [g.eu[nd.core_edges]]
        ev = [g.ev[nd.core_edges]]
        ew = [g.ew[nd.core_edges]]
        for p in nd.paths():
            q = tree.paths[p]
            pos = nd.frame[p] if p in nd.frame else np.arange(len(q))
            vs = q.vertices[pos]
            eu.append(vs[:-1])
            ev.append(vs[1:])
            ew.append(np.diff(q.prefix[pos]))
        eu_a, ev_a, ew_a = (np.concatenate(x).astype(np.int64) for x in (eu, ev, ew))
        eid = np.full(len(eu_a), -1, dtype=np.int64)
        eid[:len(nd.core_edges)] = nd.core_edges
        return GraphView(V, np.searchsorted(V, eu_a), np.searchsorted(V, ev_a), ew_a, eid)

    def path_positions(self, r: int, p: int) -> np.ndarray:
        nd = self.tree.nodes[r]
        if p in nd.frame:
            return nd.frame[p]
        return np.arange(len(self.tree.paths[p]), dtype=np.int64)

    def _store(self, r: int, key, slot: SlotTable):
        self.tables[r][key] = slot
        name = f"{'vertex' if key[2] == VERTEX else 'label'}-type{key[1]}"
        self.stats.connections[name] = self.stats.connections.get(name, 0) + slot.num_connections
        self.stats.max_set[name] = max(self.stats.max_set.get(name, 0), slot.max_size())

    # ---------------------------------------------------------------- type-0
    def build_type0(self, r: int):
        tree, g = self.tree, self.graph
        nd = tree.nodes[r]
        paths = nd.paths()
        if not paths:
            return
        view = self.host_view(r)
        V = nd.vertices
        pos_of = {p: self.path_positions(r, p) for p in paths}
        loc_of = {p: np.searchsorted(V, tree.paths[p].vertices[pos_of[p]]) for p in paths}
        src, inv = np.unique(np.concatenate([loc_of[p] for p in paths]), return_inverse=True)
        D = multi_source_distances(view, src)
        labs = g.labels[V]
        order = np.argsort(labs, kind="stable")
        starts = np.flatnonzero(np.r_[True, np.diff(labs[order]) != 0])
        at = 0
        for p in paths:
            k = len(loc_of[p])
            M = D[inv[at:at + k]]
            at += k
            prefix = tree.paths[p].prefix
            pre = prefix[pos_of[p]]
            vb = eps_cover_batch(M, pre, self.eps_c)
            self._store(r, (p, 0, VERTEX), _slot_from_batch(V, vb, pos_of[p], prefix))
            P = np.minimum.reduceat(M[:, order], starts, axis=1)
            lb = thin_batch(P, pre, self.eps_c)
            self._store(r, (p, 0, LABEL), _slot_from_batch(nd.labels_sorted, lb, pos_of[p], prefix))

    # ---------------------------------------------------------------- type-1
    def auxiliary_graph(self, r: int) -> AuxiliaryLabelGraph:
        tree = self.tree
        nd = tree.nodes[r]
        host = self.host_view(r)
        V = nd.vertices
        frame_vs = np.unique(np.concatenate(
            [tree.paths[p].vertices[nd.frame[p]] for p in sorted(nd.frame)]))
        eu, ev, ew = [V[host.eu]], [V[host.ev]], [host.ew]
        c_lab, c_anchor, c_len = [], [], []
        for a in tree.root_path(r)[:-1]:
            for p in tree.nodes[a].separator:
                q = tree.paths[p]
                vs = self.tables[a][(p, 0, VERTEX)]
                ls = self.tables[a][(p, 0, LABEL)]
                used = []
                rows = np.searchsorted(vs.owners, frame_vs)
                lo, hi = vs.indptr[rows], vs.indptr[rows + 1]
                cnt = hi - lo
                idx = _ranges(lo, cnt)
                eu.append(np.repeat(frame_vs, cnt))
                ev.append(q.vertices[vs.pos[idx]])
                ew.append(vs.length[idx])
                used.append(vs.pos[idx])
                lrows = np.searchsorted(ls.owners, nd.labels_sorted)
                llo, lcnt = ls.indptr[lrows], ls.indptr[lrows + 1] - ls.indptr[lrows]
                lidx = _ranges(llo, lcnt)
                c_lab.append(np.repeat(nd.labels_sorted, lcnt))
                c_anchor.append(q.vertices[ls.pos[lidx]])
                c_len.append(ls.length[lidx])
                used.append(ls.pos[lidx])
                u = np.unique(np.concatenate(used))
                if len(u) > 1:
                    eu.append(q.vertices[u[:-1]])
                    ev.append(q.vertices[u[1:]])
                    ew.append(np.diff(q.prefix[u]))
        eu_a, ev_a, ew_a = (np.concatenate(x).astype(np.int64) for x in (eu, ev, ew))
        anchors = np.concatenate(c_anchor) if c_anchor else np.zeros(0, dtype=np.int64)
        XV = np.unique(np.concatenate([V, eu_a, ev_a, anchors]))
        view = GraphView(XV, np.searchsorted(XV, eu_a), np.searchsorted(XV, ev_a), ew_a,
                         np.full(len(eu_a), -1, dtype=np.int64))
        if c_lab:
            lab = np.concatenate(c_lab)
            ln = np.concatenate(c_len)
        else:
            lab = ln = np.zeros(0, dtype=np.int64)
        return AuxiliaryLabelGraph(r, view, lab.astype(np.int64),
                                   np.searchsorted(XV, anchors).astype(np.int64),
                                   ln.astype(np.int64))

    def build_type1(self, r: int):
        tree = self.tree
        nd = tree.nodes[r]
        if not nd.frame:
            return
        aux = self.auxiliary_graph(r)
        X = aux.view
        V = nd.vertices
        vcols = np.searchsorted(X.vertices, V)
        fpaths = sorted(nd.frame)
        loc = {p: np.searchsorted(X.vertices, tree.paths[p].vertices[nd.frame[p]]) for p in fpaths}
        src, inv = np.unique(np.concatenate([loc[p] for p in fpaths]), return_inverse=True)
        D = multi_source_distances(X, src)
        order = np.argsort(aux.copy_label, kind="stable")
        lab_sorted = aux.copy_label[order]
        anchor = aux.copy_anchor[order]
        clen = aux.copy_length[order]
        # column group per label of this node (labels without copies stay INF)
        grp = np.searchsorted(lab_sorted, nd.labels_sorted)
        grp_end = np.searchsorted(lab_sorted, nd.labels_sorted, side="right")
        nonempty = grp_end > grp
        at = 0
        for p in fpaths:
            k = len(loc[p])
            rows = D[inv[at:at + k]]
            at += k
            prefix = tree.paths[p].prefix
            pos = nd.frame[p]
            pre = prefix[pos]
            vb = eps_cover_batch(rows[:, vcols], pre, self.eps_c)
            self._store(r, (p, 1, VERTEX), _slot_from_batch(V, vb, pos, prefix))
            P = np.full((k, len(nd.labels_sorted)), INF, dtype=np.int64)
            if len(anchor):
                via = np.minimum(rows[:, anchor] + clen[None, :], INF)
                red = np.minimum.reduceat(via, grp[nonempty], axis=1)
                P[:, nonempty] = red
            lb = thin_batch(P, pre, self.eps_c)
            self._store(r, (p, 1, LABEL), _slot_from_batch(nd.labels_sorted, lb, pos, prefix))

    # ----------------------------------------------------------------- query
    def _check_vertex(self, u: int):
        if not 0 <= u < self.graph.n:
            raise KeyError(f"unknown vertex {u}")

    def _combine(self, r: int, p: int, ta: int, ka: str, oa: int, tb: int, kb: str, ob: int,
                 counter: ComparisonCounter) -> int:
        tab = self.tables[r]
        xa, la = tab[(p, ta, ka)].lists(oa)
        xb, lb = tab[(p, tb, kb)].lists(ob)
        return combine_lists(xa, la, xb, lb, counter)

    def _estimate(self, r: int, u: int, other: int, kind: str, st: QueryStats) -> int:
        nd = self.tree.nodes[r]
        counter = ComparisonCounter()
        best = INF
        for p in nd.separator:
            best = min(best, self._combine(r, p, 0, VERTEX, u, 0, kind, other, counter))
            st.combinations += 1
        for p in sorted(nd.frame):
            best = min(best, self._combine(r, p, 0, VERTEX, u, 1, kind, other, counter))
            best = min(best, self._combine(r, p, 1, VERTEX, u, 0, kind, other, counter))
            st.combinations += 2
        st.comparisons += counter.count
        return best

    def _leaf_search(self, r: int, u: int, target) -> int:
        """Exact distance inside the leaf's core from ``u`` to the first vertex
        accepted by ``target``."""
        if r not in self._leaf_adj:
            nd = self.tree.nodes[r]
            V = nd.vertices
            adj: list[list[tuple[int, int]]] = [[] for _ in range(len(V))]
            g = self.graph
            for e in nd.core_edges.tolist():
                a = int(np.searchsorted(V, g.eu[e]))
                b = int(np.searchsorted(V, g.ev[e]))
                w = int(g.ew[e])
                adj[a].append((b, w))
                adj[b].append((a, w))
            self._leaf_adj[r] = (V, adj)
        V, adj = self._leaf_adj[r]
        s = int(np.searchsorted(V, u))
        if s >= len(V) or V[s] != u:
            return INF
        dist = {s: 0}
        heap = [(0, s)]
        while heap:
            d, x = heapq.heappop(heap)
            if d > dist[x]:
                continue
            if target(int(V[x])):
                return d
            for y, w in adj[x]:
                nd_ = d + w
                if nd_ < dist.get(y, INF):
                    dist[y] = nd_
                    heapq.heappush(heap, (nd_, y))
        return INF

    def query_vertex_label(self, u: int, lab: int, stats: QueryStats | None = None) -> int:
        self._check_vertex(u)
        st = stats if stats is not None else QueryStats()
        leaf = int(self.tree.leaf_of[u])
        pc = ProbeCounter()
        r = lowest_labeled_ancestor(self.tree, leaf, lab, pc)
        st.probes += pc.probes
        if r is None:
            return INF
        best = self._estimate(r, u, lab, LABEL, st)
        if self.tree.nodes[r].is_leaf:
            st.leaf_search = True
            labels = self.graph.labels
            best = min(best, self._leaf_search(r, u, lambda v: labels[v] == lab))
        return best

    def query_vertex_vertex(self, u: int, w: int, stats: QueryStats | None = None) -> int:
        self._check_vertex(u)
        self._check_vertex(w)
        if u == w:
            return 0
        st = stats if stats is not None else QueryStats()
        ru, rw = int(self.tree.leaf_of[u]), int(self.tree.leaf_of[w])
        r = self.tree.ancestors().lca(ru, rw)
        best = self._estimate(r, u, w, VERTEX, st)
        if ru == rw:
            st.leaf_search = True
            best = min(best, self._leaf_search(r, u, lambda v: v == w))
        return best

    def query_label_name(self, u: int, name: str, stats: QueryStats | None = None) -> int:
        """Like :meth:`query_vertex_label`; names absent from the graph give INF."""
        try:
            lab = self.graph.label_id(name)
        except KeyError:
            return INF
        return self.query_vertex_label(u, lab, stats)

    def total_connections(self) -> int:
        return sum(s.num_connections for t in self.tables for s in t.values())


def _ranges(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Concatenation of ``arange(s, s + c)`` for all pairs."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    off = np.repeat(np.cumsum(counts) - counts, counts)
    return np.repeat(np.asarray(starts, dtype=np.int64), counts) + np.arange(total) - off


def build_oracle(g: LabeledPlanarGraph, eps, leaf_size: int | None = None,
                 deterministic_labels: bool = False) -> VertexLabelOracle:
    """Decompose ``g`` and fill every node's tables top-down."""
    eps = Fraction(eps)
    if not 0 < eps <= Fraction(1, 2):
        raise ValueError("eps must lie in (0, 1/2]")
    t0 = time.perf_counter()
    tree = build_decomposition(g, leaf_size or default_leaf_size(eps), deterministic_labels)
    t1 = time.perf_counter()
    orc = VertexLabelOracle(g, tree, eps)
    for nd in tree.nodes:          # ids are assigned breadth first
        orc.build_type0(nd.id)
    t2 = time.perf_counter()
    for nd in tree.nodes:
        orc.build_type1(nd.id)
    t3 = time.perf_counter()
    st = orc.stats
    st.nodes = len(tree.nodes)
    st.depth = tree.depth
    st.max_frame = max(len(nd.frame) for nd in tree.nodes)
    st.seconds = {"decomposition": t1 - t0, "type0": t2 - t1, "type1": t3 - t2,
                  "total": t3 - t0}
    log.info("built oracle: %d nodes, depth %d, %d connections in %.2fs", st.nodes, st.depth,
             st.total_connections, st.seconds["total"])
    return orc
