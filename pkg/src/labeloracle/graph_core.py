"""Embedded planar graphs, shortest paths, path reduction and triangulation.

Vertices are ``0..n-1``. Edge lengths are non-negative integers; every
distance handled by the package is an exact integer, with :data:`INF` as the
unreachable sentinel.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

INF = 1 << 62
# Sum of all edge lengths must stay below this so that no path length overflows.
LENGTH_BUDGET = 1 << 61


class GraphFormatError(ValueError):
    """Raised for malformed or invalid graph input."""


class NonPlanarError(GraphFormatError):
    pass


@dataclass
class GraphView:
    """A compact weighted graph over a subset of the vertices of a parent.

    ``vertices[i]`` is the parent id of local vertex ``i``; ``eid[j]`` is the
    parent edge id of local edge ``j`` (or -1 for edges that do not exist in
    the parent, such as reduced path edges).
    """

    vertices: np.ndarray
    eu: np.ndarray
    ev: np.ndarray
    ew: np.ndarray
    eid: np.ndarray
    _adj: list | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.eu)

    def adjacency(self) -> list[list[tuple[int, int, int]]]:
        """Per local vertex: ``(neighbor, length, local edge index)``."""
        if self._adj is None:
            adj: list[list[tuple[int, int, int]]] = [[] for _ in range(self.n)]
            for j, (u, v, w) in enumerate(zip(self.eu.tolist(), self.ev.tolist(), self.ew.tolist())):
                adj[u].append((v, w, j))
                adj[v].append((u, w, j))
            self._adj = adj
        return self._adj

    def local_index(self) -> dict[int, int]:
        return {int(g): i for i, g in enumerate(self.vertices.tolist())}


@dataclass
class LabeledPlanarGraph:
    """Embedded undirected planar graph with one label per vertex.

    ``rotation[v]`` lists the edge ids incident to ``v`` in clockwise order.
    """

    n: int
    eu: np.ndarray
    ev: np.ndarray
    ew: np.ndarray
    rotation: list[list[int]]
    labels: np.ndarray
    label_names: list[str]

    @property
    def m(self) -> int:
        return len(self.eu)

    @property
    def num_labels(self) -> int:
        return len(self.label_names)

    def label_id(self, name: str) -> int:
        try:
            return self.label_names.index(name)
        except ValueError:
            raise KeyError(f"unknown label {name!r}") from None

    def view(self, edge_ids: Sequence[int] | np.ndarray | None = None,
             vertices: Sequence[int] | np.ndarray | None = None) -> GraphView:
        """Local view on the given edges. ``vertices`` defaults to their endpoints."""
        if edge_ids is None:
            eids = np.arange(self.m, dtype=np.int64)
        else:
            eids = np.asarray(edge_ids, dtype=np.int64)
        if vertices is None:
            if edge_ids is None:
                verts = np.arange(self.n, dtype=np.int64)
            else:
                verts = np.unique(np.concatenate([self.eu[eids], self.ev[eids]]))
        else:
            verts = np.unique(np.asarray(vertices, dtype=np.int64))
        if edge_ids is None and vertices is None:
            return GraphView(verts, self.eu.copy(), self.ev.copy(), self.ew.copy(), eids)
        pos = np.searchsorted(verts, self.eu[eids])
        qos = np.searchsorted(verts, self.ev[eids])
        return GraphView(verts, pos.astype(np.int64), qos.astype(np.int64),
                         self.ew[eids].copy(), eids)

    def vertices_with_label(self, lab: int) -> np.ndarray:
        return np.flatnonzero(self.labels == lab)

    def faces(self) -> list[list[int]]:
        """Faces of the embedding as lists of darts (``2e`` = eu->ev, ``2e+1`` = ev->eu)."""
        return trace_faces(self.n, self.eu, self.ev, self.rotation)

    def components(self) -> list[np.ndarray]:
        return connected_components(self.n, self.eu, self.ev)


def connected_components(n: int, eu: np.ndarray, ev: np.ndarray) -> list[np.ndarray]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in zip(eu.tolist(), ev.tolist()):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    roots = np.array([find(x) for x in range(n)], dtype=np.int64)
    out = []
    for r in np.unique(roots):
        out.append(np.flatnonzero(roots == r))
    return out


def _out_darts(n: int, eu: np.ndarray, ev: np.ndarray, rotation: list[list[int]]):
    outs: list[list[int]] = []
    for v in range(n):
        row = []
        for e in rotation[v]:
            row.append(2 * e if eu[e] == v else 2 * e + 1)
        outs.append(row)
    return outs


def trace_faces(n: int, eu: np.ndarray, ev: np.ndarray, rotation: list[list[int]]) -> list[list[int]]:
    outs = _out_darts(n, eu, ev, rotation)
    slot = {}
    for v in range(n):
        for i, d in enumerate(outs[v]):
            slot[d] = (v, i)
    seen = set()
    faces = []
    for d0 in sorted(slot):
        if d0 in seen:
            continue
        face = []
        d = d0
        while d not in seen:
            seen.add(d)
            face.append(d)
            twin = d ^ 1
            v, i = slot[twin]
            d = outs[v][(i + 1) % len(outs[v])]
        faces.append(face)
    return faces


def euler_check(n: int, eu: np.ndarray, ev: np.ndarray, rotation: list[list[int]]) -> bool:
    """``V - E + F == 2`` on every connected component of the embedding."""
    faces = trace_faces(n, eu, ev, rotation)
    comp_of = np.empty(n, dtype=np.int64)
    comps = connected_components(n, eu, ev)
    for i, c in enumerate(comps):
        comp_of[c] = i
    nf = np.zeros(len(comps), dtype=np.int64)
    for f in faces:
        d = f[0]
        tail = eu[d >> 1] if d % 2 == 0 else ev[d >> 1]
        nf[comp_of[tail]] += 1
    for i, c in enumerate(comps):
        ne = int(np.count_nonzero(comp_of[eu] == i)) if len(eu) else 0
        f = nf[i] if len(c) > 1 or ne > 0 else 1
        if len(c) - ne + f != 2:
            return False
    return True


# --------------------------------------------------------------------------
# construction and parsing


def make_graph(n: int, edges: Iterable[tuple[int, int, int]],
               labels: Sequence[str] | None = None,
               rotation: Sequence[Sequence[int]] | None = None) -> LabeledPlanarGraph:
    """Validate and embed a labeled graph.

    ``rotation`` gives, per vertex, its neighbors in clockwise order. If it is
    omitted an embedding is computed.
    """
    best: dict[tuple[int, int], int] = {}
    for u, v, w in edges:
        u, v, w = int(u), int(v), int(w)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"edge ({u},{v}) out of range for n={n}")
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}")
        if w < 0:
            raise GraphFormatError(f"negative length {w} on edge ({u},{v})")
        key = (u, v) if u < v else (v, u)
        if key not in best or w < best[key]:
            best[key] = w
    keys = sorted(best)
    m = len(keys)
    if n >= 3 and m > 3 * n - 6:
        raise NonPlanarError(f"non-planar: {m} edges exceed 3n-6 = {3 * n - 6}")
    eu = np.array([k[0] for k in keys], dtype=np.int64)
    ev = np.array([k[1] for k in keys], dtype=np.int64)
    ew = np.array([best[k] for k in keys], dtype=np.int64)
    if int(ew.sum()) >= LENGTH_BUDGET:
        raise GraphFormatError("total edge length risks 64-bit overflow")

    if labels is None:
        labels = ["0"] * n
    if len(labels) != n:
        raise GraphFormatError(f"expected {n} labels, got {len(labels)}")
    names, lab = _label_ids(labels)

    edge_of = {k: i for i, k in enumerate(keys)}
    if rotation is None:
        rot = _compute_rotation(n, keys)
    else:
        rot = []
        for v in range(n):
            nbrs = [int(x) for x in rotation[v]]
            row = []
            for x in nbrs:
                key = (v, x) if v < x else (x, v)
                if key not in edge_of:
                    raise GraphFormatError(f"embedding lists non-edge ({v},{x})")
                row.append(edge_of[key])
            rot.append(row)
        incident: list[list[int]] = [[] for _ in range(n)]
        for i, (u, v) in enumerate(keys):
            incident[u].append(i)
            incident[v].append(i)
        for v in range(n):
            if sorted(rot[v]) != incident[v]:
                raise GraphFormatError(f"rotation at {v} is not a permutation of its edges")
    if not euler_check(n, eu, ev, rot):
        raise NonPlanarError("non-planar: embedding fails the Euler check")
    return LabeledPlanarGraph(n, eu, ev, ew, rot, lab, names)


def _label_ids(labels: Sequence[str]) -> tuple[list[str], np.ndarray]:
    names: list[str] = []
    index: dict[str, int] = {}
    lab = np.empty(len(labels), dtype=np.int64)
    for v, name in enumerate(labels):
        if name is None or name == "":
            raise GraphFormatError(f"vertex {v} has no label")
        if name not in index:
            index[name] = len(names)
            names.append(name)
        lab[v] = index[name]
    return names, lab


def with_labels(g: LabeledPlanarGraph, labels: Sequence[str]) -> LabeledPlanarGraph:
    """Same embedded graph with new vertex labels."""
    if len(labels) != g.n:
        raise GraphFormatError(f"expected {g.n} labels, got {len(labels)}")
    names, lab = _label_ids(labels)
    return LabeledPlanarGraph(g.n, g.eu, g.ev, g.ew, g.rotation, lab, names)


def _compute_rotation(n: int, keys: list[tuple[int, int]]) -> list[list[int]]:
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(keys)
    ok, emb = nx.check_planarity(g)
    if not ok:
        raise NonPlanarError("non-planar: no planar embedding exists")
    edge_of = {k: i for i, k in enumerate(keys)}
    rot = []
    for v in range(n):
        row = []
        if g.degree(v):
            for x in emb.neighbors_cw_order(v):
                row.append(edge_of[(v, x) if v < x else (x, v)])
        rot.append(row)
    return rot


def parse_edge_list(text: str) -> tuple[int, list[tuple[int, int, int]]]:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or len(lines[0]) != 2:
        raise GraphFormatError("edge list must start with a header line 'n m'")
    n, m = int(lines[0][0]), int(lines[0][1])
    body = lines[1:]
    if len(body) != m:
        raise GraphFormatError(f"header announces {m} edges, found {len(body)}")
    edges = []
    for parts in body:
        if len(parts) != 3:
            raise GraphFormatError(f"bad edge line {' '.join(parts)!r}")
        edges.append((int(parts[0]), int(parts[1]), int(parts[2])))
    return n, edges


def parse_labels(text: str, n: int) -> list[str]:
    out: list[str | None] = [None] * n
    for ln in text.splitlines():
        if not ln.strip():
            continue
        parts = ln.split(None, 1)
        if len(parts) != 2:
            raise GraphFormatError(f"bad label line {ln!r}")
        v = int(parts[0])
        if not 0 <= v < n:
            raise GraphFormatError(f"label for unknown vertex {v}")
        out[v] = parts[1].strip()
    missing = [v for v, x in enumerate(out) if x is None]
    if missing:
        raise GraphFormatError(f"label missing for vertex {missing[0]}")
    return out  # type: ignore[return-value]


def parse_embedding(text: str, n: int) -> list[list[int]]:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    rot: list[list[int]] = [[] for _ in range(n)]
    for parts in rows:
        v = int(parts[0].rstrip(":"))
        rot[v] = [int(x) for x in parts[1:]]
    return rot


def load_graph(edge_text: str, label_text: str | None = None,
               embedding_text: str | None = None) -> LabeledPlanarGraph:
    n, edges = parse_edge_list(edge_text)
    labels = parse_labels(label_text, n) if label_text is not None else None
    rotation = parse_embedding(embedding_text, n) if embedding_text is not None else None
    return make_graph(n, edges, labels, rotation)


def format_edge_list(g: LabeledPlanarGraph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v} {w}" for u, v, w in zip(g.eu.tolist(), g.ev.tolist(), g.ew.tolist())]
    return "\n".join(lines) + "\n"


def format_labels(g: LabeledPlanarGraph) -> str:
    return "".join(f"{v} {g.label_names[lab]}\n" for v, lab in enumerate(g.labels.tolist()))


def format_embedding(g: LabeledPlanarGraph) -> str:
    lines = []
    for v in range(g.n):
        nbrs = [int(g.ev[e] if g.eu[e] == v else g.eu[e]) for e in g.rotation[v]]
        lines.append(" ".join([f"{v}:"] + [str(x) for x in nbrs]))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# shortest paths


def sssp(view: GraphView, source: int) -> tuple[np.ndarray, np.ndarray]:
    """Dijkstra from local vertex ``source``.

    Returns ``(dist, parent)`` over local vertices; unreachable vertices get
    :data:`INF` and parent -1. Among equal-length alternatives the parent with
    the smaller id wins, so shortest-path trees are deterministic.
    """
    n = view.n
    adj = view.adjacency()
    dist = [INF] * n
    parent = [-1] * n
    done = [False] * n
    dist[source] = 0
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for v, w, _ in adj[u]:
            if done[v]:
                continue
            nd = d + w
            if nd < dist[v] or (nd == dist[v] and u < parent[v]):
                if nd < dist[v]:
                    heapq.heappush(heap, (nd, v))
                dist[v] = nd
                parent[v] = u
    return np.array(dist, dtype=np.int64), np.array(parent, dtype=np.int64)


_FLOAT_EXACT = 1 << 50


def multi_source_distances(view: GraphView, sources: Sequence[int] | np.ndarray) -> np.ndarray:
    """Exact distance matrix ``len(sources) x view.n`` (int64, INF unreachable).

    Backed by scipy's compiled Dijkstra.
    """
    from scipy.sparse.csgraph import dijkstra

    n = view.n
    src = np.asarray(sources, dtype=np.int64)
    if len(src) == 0:
        return np.empty((0, n), dtype=np.int64)
    if view.m == 0:
        out = np.full((len(src), n), INF, dtype=np.int64)
        out[np.arange(len(src)), src] = 0
        return out
    if int(view.ew.sum()) >= _FLOAT_EXACT:
        # float64 Dijkstra would round; fall back to the exact heap version
        return np.stack([sssp(view, int(s))[0] for s in src])
    w = view.ew.astype(np.float64)
    # Explicit zeros vanish from scipy sparse graphs; a zero edge is encoded
    # as a weight far below 1 so that rounding recovers the integer length.
    # Safe while paths have fewer than 2**20 edges.
    tiny = 2.0 ** -24
    w = np.where(w == 0, tiny, w)
    rows = np.concatenate([view.eu, view.ev])
    cols = np.concatenate([view.ev, view.eu])
    # scipy sums duplicate entries; parallel edges must keep their minimum
    mat = _min_duplicates(rows, cols, np.concatenate([w, w]), n)
    d = dijkstra(mat, directed=False, indices=src)
    out = np.full(d.shape, INF, dtype=np.int64)
    fin = np.isfinite(d)
    out[fin] = np.floor(d[fin] + 0.5).astype(np.int64)
    return out


def multi_source_min(view: GraphView, sources: Sequence[int] | np.ndarray) -> np.ndarray:
    """Distance from the nearest of ``sources`` to every vertex (all start at 0)."""
    from scipy.sparse.csgraph import dijkstra

    src = np.asarray(sources, dtype=np.int64)
    out = np.full(view.n, INF, dtype=np.int64)
    if len(src) == 0:
        return out
    if view.m == 0 or int(view.ew.sum()) >= _FLOAT_EXACT:
        return multi_source_distances(view, src).min(axis=0)
    w = np.where(view.ew == 0, 2.0 ** -24, view.ew.astype(np.float64))
    mat = _min_duplicates(np.concatenate([view.eu, view.ev]), np.concatenate([view.ev, view.eu]),
                          np.concatenate([w, w]), view.n)
    d = dijkstra(mat, directed=False, indices=src, min_only=True)
    fin = np.isfinite(d)
    out[fin] = np.floor(d[fin] + 0.5).astype(np.int64)
    return out


def _min_duplicates(rows: np.ndarray, cols: np.ndarray, data: np.ndarray, n: int):
    from scipy.sparse import csr_matrix

    key = rows * n + cols
    order = np.lexsort((data, key))
    key_s = key[order]
    first = np.ones(len(key_s), dtype=bool)
    first[1:] = key_s[1:] != key_s[:-1]
    sel = order[first]
    return csr_matrix((data[sel], (rows[sel], cols[sel])), shape=(n, n))


@dataclass
class SpanningTree:
    """Rooted spanning tree over the local vertices of a view.

    ``parent_edge[v]`` is a local edge index of the view (-1 at the root).
    """

    root: int
    parent: np.ndarray
    parent_edge: np.ndarray
    depth: np.ndarray
    dist: np.ndarray

    def branch(self, v: int) -> list[int]:
        """Root-to-``v`` tree path, root first."""
        out = [v]
        while self.parent[v] >= 0:
            v = int(self.parent[v])
            out.append(v)
        out.reverse()
        return out

    def tree_edges(self) -> np.ndarray:
        pe = self.parent_edge
        return pe[pe >= 0]


def shortest_path_tree(view: GraphView, root: int) -> SpanningTree:
    dist, parent = sssp(view, root)
    if view.n and np.any(dist >= INF):
        raise GraphFormatError("graph is disconnected; decompose by component first")
    adj = view.adjacency()
    n = view.n
    parent_edge = np.full(n, -1, dtype=np.int64)
    for v in range(n):
        p = parent[v]
        if p < 0:
            continue
        best = -1
        for x, w, j in adj[v]:
            if x == p and dist[p] + w == dist[v] and (best < 0 or j < best):
                best = j
        parent_edge[v] = best
    # depths by increasing distance order is not enough with zero lengths;
    # resolve by walking.
    depth = np.full(n, -1, dtype=np.int64)
    if n:
        depth[root] = 0
    for v in range(n):
        stack = []
        x = v
        while depth[x] < 0:
            stack.append(x)
            x = int(parent[x])
        d = depth[x]
        while stack:
            y = stack.pop()
            d += 1
            depth[y] = d
    return SpanningTree(root, parent, parent_edge, depth, dist)


# --------------------------------------------------------------------------
# paths


@dataclass
class SeparatorPath:
    """A shortest path with prefix distances from its first vertex."""

    vertices: np.ndarray
    prefix: np.ndarray
    origin: int = -1

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.int64)
        self.prefix = np.asarray(self.prefix, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.vertices)

    def along(self, i: int, j: int) -> int:
        return abs(int(self.prefix[j]) - int(self.prefix[i]))


@dataclass
class ReducedPath:
    """Subsequence of a :class:`SeparatorPath` keeping parent prefix distances."""

    parent: SeparatorPath
    positions: np.ndarray

    @property
    def vertices(self) -> np.ndarray:
        return self.parent.vertices[self.positions]

    @property
    def prefix(self) -> np.ndarray:
        return self.parent.prefix[self.positions]

    def __len__(self) -> int:
        return len(self.positions)

    def edges(self) -> list[tuple[int, int, int]]:
        """Consecutive retained vertices with their contracted lengths."""
        vs = self.vertices.tolist()
        ps = self.prefix.tolist()
        return [(vs[i], vs[i + 1], ps[i + 1] - ps[i]) for i in range(len(vs) - 1)]


def reduce_path(q: SeparatorPath, keep: Iterable[int]) -> ReducedPath:
    """Reduce ``q`` to the vertices in ``keep`` (vertex ids on the path).

    Contracting an edge adds its length to the neighbouring edge, so along-path
    distances between retained vertices are the prefix differences. With an
    empty keep-set the two endpoints survive.
    """
    keep = set(int(x) for x in keep)
    pos = [i for i, v in enumerate(q.vertices.tolist()) if v in keep]
    if not pos and len(q):
        pos = sorted({0, len(q) - 1})
    return ReducedPath(q, np.array(pos, dtype=np.int64))


# --------------------------------------------------------------------------
# triangulation


@dataclass
class Triangulation:
    """Triangulated embedding of a connected view.

    Darts ``2j`` / ``2j+1`` run ``eu[j]->ev[j]`` / ``ev[j]->eu[j]``. Edges with
    index ``>= view.m`` are artificial and never used for routing.
    """

    view: GraphView
    eu: np.ndarray
    ev: np.ndarray
    faces: list[tuple[int, int, int]]
    dart_face: np.ndarray

    @property
    def num_artificial(self) -> int:
        return len(self.eu) - self.view.m

    def routable(self, j: int) -> bool:
        return j < self.view.m


def triangulate_for_separator(view: GraphView, rotation: list[list[int]]) -> Triangulation:
    """Add artificial diagonals until every face is a triangle.

    ``rotation[i]`` lists local edge indices around local vertex ``i`` in
    clockwise order. The original edges are untouched.
    """
    n = view.n
    eu = view.eu.tolist()
    ev = view.ev.tolist()
    outs = []
    for v in range(n):
        outs.append([2 * e if eu[e] == v else 2 * e + 1 for e in rotation[v]])
    slot: dict[int, tuple[int, int]] = {}
    for v in range(n):
        for i, d in enumerate(outs[v]):
            slot[d] = (v, i)

    def head(d: int) -> int:
        return ev[d >> 1] if d % 2 == 0 else eu[d >> 1]

    def tail(d: int) -> int:
        return eu[d >> 1] if d % 2 == 0 else ev[d >> 1]

    seen: set[int] = set()
    raw_faces = []
    for d0 in sorted(slot):
        if d0 in seen:
            continue
        face = []
        d = d0
        while d not in seen:
            seen.add(d)
            face.append(d)
            v, i = slot[d ^ 1]
            d = outs[v][(i + 1) % len(outs[v])]
        raw_faces.append(face)

    faces: list[tuple[int, int, int]] = []
    for face in raw_faces:
        if len(face) < 3:
            if len(face) == 2 and n == 2:
                continue
            raise GraphFormatError("degenerate face in embedding")
        work = list(face)
        stalls = 0
        while len(work) > 3:
            b0, b1 = work[0], work[1]
            a, c = tail(b0), head(b1)
            if a != c:
                j = len(eu)
                eu.append(a)
                ev.append(c)
                # new edge a->c is dart 2j, c->a is 2j+1
                faces.append((b0, b1, 2 * j + 1))
                work = [2 * j] + work[2:]
                stalls = 0
            else:
                work = work[1:] + work[:1]
                stalls += 1
                if stalls > len(work):
                    raise GraphFormatError("cannot triangulate face")
        faces.append(tuple(work))
    dart_face = np.full(2 * len(eu), -1, dtype=np.int64)
    for f, tri in enumerate(faces):
        for d in tri:
            dart_face[d] = f
    return Triangulation(view, np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64),
                         faces, dart_face)
