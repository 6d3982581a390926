"""Recursive fundamental-cycle decomposition of a planar graph.

Each node ``r`` of the tree owns a region ``G_r`` (vertex set ``V_r``, edge
set ``E_r``), its frame (separator paths of strict ancestors that touch the
region, reduced to ``V_r``) and, for internal nodes, a separator of at most two
shortest paths. The core ``G_r°`` is the region minus frame edges.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph_core import (
    GraphView,
    LabeledPlanarGraph,
    SeparatorPath,
    SpanningTree,
    Triangulation,
    connected_components,
    shortest_path_tree,
    triangulate_for_separator,
)

log = logging.getLogger(__name__)

FRAME_PATH_CAP = 16
DEPTH_SHRINK = Fraction(5, 6)


class SeparatorError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# lowest common ancestors


class AncestorTable:
    """Binary-lifting LCA over a rooted forest given by ``parent`` (-1 = root)."""

    def __init__(self, parent: np.ndarray, depth: np.ndarray):
        parent = np.asarray(parent, dtype=np.int64)
        self.depth = np.asarray(depth, dtype=np.int64)
        n = len(parent)
        levels = max(1, int(self.depth.max(initial=0)).bit_length())
        up = np.empty((levels, n), dtype=np.int64)
        up[0] = np.where(parent < 0, np.arange(n), parent)
        for k in range(1, levels):
            up[k] = up[k - 1][up[k - 1]]
        self.up = up

    def lca_many(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64).copy()
        b = np.asarray(b, dtype=np.int64).copy()
        da, db = self.depth[a], self.depth[b]
        swap = da < db
        a[swap], b[swap] = b[swap], a[swap].copy()
        diff = np.abs(da - db)
        for k in range(len(self.up)):
            sel = (diff >> k) & 1 == 1
            a[sel] = self.up[k][a[sel]]
        for k in range(len(self.up) - 1, -1, -1):
            ua, ub = self.up[k][a], self.up[k][b]
            sel = ua != ub
            a[sel], b[sel] = ua[sel], ub[sel]
        same = a == b
        return np.where(same, a, self.up[0][a])

    def lca(self, a: int, b: int) -> int:
        return int(self.lca_many(np.array([a]), np.array([b]))[0])


# --------------------------------------------------------------------------
# fundamental cycle separator


@dataclass
class CycleSeparator:
    edge: int                  # edge index in the triangulation
    u1: int
    u2: int
    apex: int                  # tree LCA of u1 and u2
    inside: int                # weight strictly inside
    outside: int               # weight strictly outside
    total: int
    face_in: np.ndarray        # bool per triangle: enclosed by the cycle

    @property
    def balanced(self) -> bool:
        return 3 * max(self.inside, self.outside) <= 2 * self.total


def _cotree(tri: Triangulation, is_tree: np.ndarray):
    nf = len(tri.faces)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(nf)]
    for j in np.flatnonzero(~is_tree).tolist():
        f, g = int(tri.dart_face[2 * j]), int(tri.dart_face[2 * j + 1])
        adj[f].append((g, j))
        adj[g].append((f, j))
    parent = np.full(nf, -1, dtype=np.int64)
    parent_edge = np.full(nf, -1, dtype=np.int64)
    order = []
    seen = np.zeros(nf, dtype=bool)
    # iterative preorder DFS so subtrees are contiguous in ``order``
    stack = [0]
    seen[0] = True
    while stack:
        f = stack.pop()
        order.append(f)
        for g, j in reversed(adj[f]):
            if not seen[g]:
                seen[g] = True
                parent[g] = f
                parent_edge[g] = j
                stack.append(g)
    if len(order) != nf:
        raise SeparatorError("co-tree does not span the faces")
    return parent, parent_edge, np.array(order, dtype=np.int64)


def separator_candidates(tri: Triangulation, tree: SpanningTree, weight: np.ndarray):
    """All non-tree edges with their strictly inside/outside weights.

    Returns ``(edges, u1, u2, apex, inside, outside, total, child_face, tin, size)``.
    The enclosed side of edge ``j`` is the co-tree subtree of ``child_face[j]``.
    """
    m = len(tri.eu)
    weight = np.asarray(weight, dtype=np.int64)
    is_tree = np.zeros(m, dtype=bool)
    is_tree[tree.tree_edges()] = True
    fparent, fedge, order = _cotree(tri, is_tree)
    nf = len(tri.faces)
    faces = np.array(tri.faces, dtype=np.int64).reshape(nf, 3)
    fw = weight[faces >> 1].sum(axis=1)
    sub = fw.copy()
    size = np.ones(nf, dtype=np.int64)
    for f in order[::-1].tolist():
        p = fparent[f]
        if p >= 0:
            sub[p] += sub[f]
            size[p] += size[f]
    tin = np.empty(nf, dtype=np.int64)
    tin[order] = np.arange(nf)

    # weight of each vertex's root branch under ``weight``
    n = tree.parent.size
    wroot = np.zeros(n, dtype=np.int64)
    byd = np.argsort(tree.depth, kind="stable")
    for v in byd.tolist():
        p = tree.parent[v]
        if p >= 0:
            wroot[v] = wroot[p] + weight[tree.parent_edge[v]]
    anc = AncestorTable(tree.parent, tree.depth)

    child = np.flatnonzero(fparent >= 0)
    edges = fedge[child]
    u1, u2 = tri.eu[edges], tri.ev[edges]
    apex = anc.lca_many(u1, u2)
    cyc = wroot[u1] + wroot[u2] - 2 * wroot[apex] + weight[edges]
    inside = (sub[child] - cyc) // 2
    total = int(weight.sum())
    outside = total - inside - cyc
    return edges, u1, u2, apex, inside, outside, total, child, tin, size


def fundamental_cycle_separator(tri: Triangulation, tree: SpanningTree,
                                weight: np.ndarray, edge_key: np.ndarray | None = None) -> CycleSeparator:
    """Pick the non-tree edge whose fundamental cycle is best balanced.

    Ties go to the smallest ``edge_key`` (defaults to the edge index).
    """
    edges, u1, u2, apex, inside, outside, total, child, tin, size = separator_candidates(tri, tree, weight)
    if len(edges) == 0:
        raise SeparatorError("no non-tree edge")
    key = edges if edge_key is None else np.asarray(edge_key)[edges]
    worst = np.maximum(inside, outside)
    i = int(np.lexsort((key, worst))[0])
    c = child[i]
    face_in = (tin >= tin[c]) & (tin < tin[c] + size[c])
    return CycleSeparator(int(edges[i]), int(u1[i]), int(u2[i]), int(apex[i]),
                          int(inside[i]), int(outside[i]), total, face_in)


# --------------------------------------------------------------------------
# decomposition tree


@dataclass
class DecompositionNode:
    id: int
    parent: int
    depth: int
    vertices: np.ndarray                    # V_r, sorted global ids
    edges: np.ndarray                       # E_r, sorted global edge ids
    frame: dict[int, np.ndarray]            # path id -> retained positions
    separator: list[int] = field(default_factory=list)
    children: list[int] = field(default_factory=list)
    labels: frozenset = frozenset()
    labels_sorted: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    core_edges: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    criterion: str | None = None
    weight: int = 0
    child_weights: tuple[int, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def paths(self) -> list[int]:
        """Separator paths first, then frame paths (sorted)."""
        return list(self.separator) + sorted(self.frame)


@dataclass
class DecompositionTree:
    nodes: list[DecompositionNode]
    paths: list[SeparatorPath]
    path_edges: list[np.ndarray]
    leaf_of: np.ndarray
    leaf_size: int
    num_labels: int = 0
    root: int = 0
    _anc: AncestorTable | None = field(default=None, repr=False)
    _root_paths: dict = field(default_factory=dict, repr=False)
    deterministic_labels: bool = False

    @property
    def depth(self) -> int:
        return max(nd.depth for nd in self.nodes)

    def ancestors(self) -> AncestorTable:
        if self._anc is None:
            parent = np.array([nd.parent for nd in self.nodes], dtype=np.int64)
            depth = np.array([nd.depth for nd in self.nodes], dtype=np.int64)
            self._anc = AncestorTable(parent, depth)
        return self._anc

    def root_path(self, r: int) -> list[int]:
        """Nodes from the root down to ``r``."""
        out = self._root_paths.get(r)
        if out is None:
            out = []
            x = r
            while x >= 0:
                out.append(x)
                x = self.nodes[x].parent
            out.reverse()
            self._root_paths[r] = out
        return out

    def has_label(self, r: int, lab: int) -> bool:
        nd = self.nodes[r]
        if self.deterministic_labels:
            arr = nd.labels_sorted
            i = int(np.searchsorted(arr, lab))
            return i < len(arr) and arr[i] == lab
        return lab in nd.labels

    def dump(self) -> str:
        lines = []
        for nd in self.nodes:
            seps = ",".join(str(len(self.paths[p])) for p in nd.separator) or "-"
            lines.append(
                f"node {nd.id} depth {nd.depth} |V| {len(nd.vertices)} |E°| {len(nd.core_edges)} "
                f"sep {seps} frame {len(nd.frame)} labels {len(nd.labels)}"
            )
        return "\n".join(lines) + "\n"


def lca(tree: DecompositionTree, r1: int, r2: int) -> int:
    return tree.ancestors().lca(r1, r2)


@dataclass
class ProbeCounter:
    probes: int = 0


def lowest_labeled_ancestor(tree: DecompositionTree, leaf: int, lab: int,
                            counter: ProbeCounter | None = None) -> int | None:
    """Deepest node on the root path of ``leaf`` whose core carries ``lab``.

    Label sets shrink monotonically towards the leaves, so a binary search on
    the root path suffices. Whether the label exists at all is answered by the
    root's set and is not counted as a probe.
    """
    if not 0 <= lab < tree.num_labels:
        raise KeyError(f"unknown label id {lab}")
    path = tree.root_path(leaf)
    if not tree.has_label(path[0], lab):
        return None
    lo, hi = 0, len(path) - 1          # invariant: path[lo] carries the label
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if counter is not None:
            counter.probes += 1
        if tree.has_label(path[mid], lab):
            lo = mid
        else:
            hi = mid - 1
    return path[lo]


def default_leaf_size(eps: Fraction) -> int:
    return max(16, -(-eps.denominator // eps.numerator))


def _path_weight_edges(tree: DecompositionTree, frame: dict[int, np.ndarray],
                       edge_pos: np.ndarray) -> list[int]:
    """One local edge per frame path (its middle edge inside the region)."""
    out = []
    for p in sorted(frame):
        pe = tree.path_edges[p]
        loc = edge_pos[pe]
        loc = loc[loc >= 0]
        if len(loc):
            out.append(int(loc[len(loc) // 2]))
    return out


def build_decomposition(g: LabeledPlanarGraph, leaf_size: int = 16,
                        deterministic_labels: bool = False) -> DecompositionTree:
    """Recursive fundamental-cycle decomposition.

    Even depths separate by core edge count, odd depths by frame path count
    (falling back to edge count when that criterion is empty or unbalanced).
    """
    tree = DecompositionTree([], [], [], np.full(g.n, -1, dtype=np.int64), leaf_size,
                             num_labels=g.num_labels, deterministic_labels=deterministic_labels)
    frame_edge_mark = np.zeros(g.m, dtype=bool)
    edge_pos = np.full(g.m, -1, dtype=np.int64)

    def new_node(parent: int, depth: int, verts: np.ndarray, edges: np.ndarray,
                 frame: dict[int, np.ndarray]) -> int:
        nd = DecompositionNode(len(tree.nodes), parent, depth, verts, edges, frame)
        labs = np.unique(g.labels[verts])
        nd.labels = frozenset(labs.tolist())
        nd.labels_sorted = labs
        fe = [tree.path_edges[p] for p in frame]
        if fe:
            allf = np.unique(np.concatenate(fe))
            frame_edge_mark[allf] = True
            nd.core_edges = edges[~frame_edge_mark[edges]]
            frame_edge_mark[allf] = False
        else:
            nd.core_edges = edges
        tree.nodes.append(nd)
        return nd.id

    def restrict_frame(frame_ids, verts: np.ndarray, edges: np.ndarray | None = None,
                       covered: np.ndarray | None = None, keep=()) -> dict[int, np.ndarray]:
        out = {}
        for p in frame_ids:
            pv = tree.paths[p].vertices
            pos = np.flatnonzero(np.isin(pv, verts))
            if not len(pos):
                continue
            # a path meeting the region only in vertices of other frame paths,
            # and contributing no edge, is redundant
            if (covered is not None and p not in keep and np.isin(pv[pos], covered).all()
                    and not np.isin(tree.path_edges[p], edges).any()):
                continue
            out[p] = pos
        return out

    new_node(-1, 0, np.arange(g.n, dtype=np.int64), np.arange(g.m, dtype=np.int64), {})
    queue = deque([0])
    while queue:
        r = queue.popleft()
        nd = tree.nodes[r]
        if len(nd.core_edges) <= leaf_size:
            continue
        view = g.view(nd.edges, nd.vertices)
        comps = connected_components(view.n, view.eu, view.ev)
        if len(comps) > 1:
            _split_components(tree, nd, view, comps, new_node, restrict_frame, queue)
            continue
        edge_pos[nd.edges] = np.arange(len(nd.edges))
        rot = []
        for gv in nd.vertices.tolist():
            rot.append([int(edge_pos[e]) for e in g.rotation[gv] if edge_pos[e] >= 0])
        tri = triangulate_for_separator(view, rot)
        spt = shortest_path_tree(view, 0)
        m_all = len(tri.eu)
        core_w = np.zeros(m_all, dtype=np.int64)
        core_w[edge_pos[nd.core_edges]] = 1
        sep = None
        crit = "edges"
        if nd.depth % 2 == 1 and nd.frame:
            fw = np.zeros(m_all, dtype=np.int64)
            np.add.at(fw, _path_weight_edges(tree, nd.frame, edge_pos), 1)
            if fw.sum() > 0:
                cand = fundamental_cycle_separator(tri, spt, fw)
                if cand.balanced:
                    sep, crit = cand, "frame"
        if sep is None:
            sep = fundamental_cycle_separator(tri, spt, core_w)
            if not sep.balanced:
                log.warning("node %d: best separator unbalanced (%d/%d/%d)", r,
                            sep.inside, sep.outside, sep.total)
        edge_pos[nd.edges] = -1
        _apply_separator(g, tree, nd, view, tri, spt, sep, crit, new_node, restrict_frame, queue)

    for nd in tree.nodes:
        if nd.is_leaf:
            sel = tree.leaf_of[nd.vertices] < 0
            tree.leaf_of[nd.vertices[sel]] = nd.id
    return tree


def _split_components(tree, nd, view: GraphView, comps, new_node, restrict_frame, queue):
    groups: list[list[np.ndarray]] = [[], []]
    sizes = [0, 0]
    for c in sorted(comps, key=lambda c: (-len(c), int(c[0]))):
        i = 0 if sizes[0] <= sizes[1] else 1
        groups[i].append(c)
        sizes[i] += len(c)
    nd.criterion = "components"
    weights = []
    for grp in groups:
        local = np.sort(np.concatenate(grp))
        verts = view.vertices[local]
        mask = np.isin(view.eu, local)
        edges = view.eid[mask]
        frame = restrict_frame(nd.frame, verts)
        cid = new_node(nd.id, nd.depth + 1, verts, np.sort(edges), frame)
        nd.children.append(cid)
        weights.append(len(tree.nodes[cid].core_edges))
        queue.append(cid)
    nd.weight = len(nd.core_edges)
    nd.child_weights = tuple(weights)


def _apply_separator(g, tree, nd, view: GraphView, tri: Triangulation, spt: SpanningTree,
                     sep: CycleSeparator, crit: str, new_node, restrict_frame, queue):
    nd.criterion = crit
    nd.weight = sep.total
    nd.child_weights = (sep.inside, sep.outside)
    cycle_edges = set()
    new_paths = []
    for end in (sep.u1, sep.u2):
        branch = []
        x = end
        while x != sep.apex:
            branch.append(x)
            cycle_edges.add(int(spt.parent_edge[x]))
            x = int(spt.parent[x])
        branch.append(sep.apex)
        branch.reverse()
        if len(branch) < 2:
            continue
        verts = view.vertices[branch]
        prefix = spt.dist[branch] - spt.dist[sep.apex]
        pedges = view.eid[spt.parent_edge[branch[1:]]]
        pid = len(tree.paths)
        tree.paths.append(SeparatorPath(verts, prefix, origin=nd.id))
        tree.path_edges.append(np.asarray(pedges, dtype=np.int64))
        new_paths.append(pid)
    if not new_paths:
        # the cycle is a single artificial or real edge between u1 and u2
        # with apex == u1 or u2 handled above; both branches trivial means
        # u1 == u2, which cannot happen for a non-loop edge
        raise SeparatorError("degenerate separator")
    nd.separator = new_paths
    sep_verts = np.unique(np.concatenate([tree.paths[p].vertices for p in new_paths]))
    sep_edges = np.unique(np.concatenate([tree.path_edges[p] for p in new_paths]))

    real = np.arange(view.m)
    side_in = sep.face_in[tri.dart_face[2 * real]]
    other = sep.face_in[tri.dart_face[2 * real + 1]]
    on_cycle = np.zeros(view.m, dtype=bool)
    for j in cycle_edges:
        on_cycle[j] = True
    if sep.edge < view.m:
        on_cycle[sep.edge] = True
    if np.any((side_in != other) & ~on_cycle):
        raise SeparatorError("edge straddles the separator")
    frame_ids = sorted(set(nd.frame) | set(new_paths))
    for flag in (True, False):
        sel = (side_in == flag) & ~on_cycle
        edges = np.union1d(view.eid[sel], sep_edges)
        verts = np.union1d(view.vertices[np.concatenate([view.eu[sel], view.ev[sel]])], sep_verts)
        frame = restrict_frame(frame_ids, verts, np.setdiff1d(edges, sep_edges), sep_verts,
                               keep=new_paths)
        cid = new_node(nd.id, nd.depth + 1, verts, edges, frame)
        nd.children.append(cid)
        queue.append(cid)
