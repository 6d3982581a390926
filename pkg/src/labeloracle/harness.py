"""Instance generators, a brute-force reference oracle, verification and benchmarking."""
from __future__ import annotations

import csv
import math
import random
import statistics
import time
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Iterable

import numpy as np

from .graph_core import (INF, LabeledPlanarGraph, make_graph, multi_source_min, sssp,
                         with_labels)
from .oracle import QueryStats, VertexLabelOracle, build_oracle


# ----------------------------------------------------------------- generators

def generate_grid(k: int, wmin: int = 1, wmax: int = 1000, seed: int = 0) -> LabeledPlanarGraph:
    if k < 2:
        raise ValueError("grid side must be at least 2")
    rnd = random.Random(seed)
    edges = []
    for i in range(k):
        for j in range(k):
            v = i * k + j
            if j + 1 < k:
                edges.append((v, v + 1, rnd.randint(wmin, wmax)))
            if i + 1 < k:
                edges.append((v, v + k, rnd.randint(wmin, wmax)))
    # the natural embedding: right, down, left, up is clockwise on screen
    rotation = []
    for i in range(k):
        for j in range(k):
            nbrs = []
            if j + 1 < k:
                nbrs.append(i * k + j + 1)
            if i + 1 < k:
                nbrs.append((i + 1) * k + j)
            if j > 0:
                nbrs.append(i * k + j - 1)
            if i > 0:
                nbrs.append((i - 1) * k + j)
            rotation.append(nbrs)
    return make_graph(k * k, edges, rotation=rotation)


def generate_random_planar(n: int, seed: int = 0, wmin: int = 1, wmax: int = 1000
                           ) -> LabeledPlanarGraph:
    """Random maximal planar graph grown by splitting a random face."""
    rnd = random.Random(seed)
    if n <= 0:
        raise ValueError("need at least one vertex")
    if n < 3:
        edges = [(0, 1, rnd.randint(wmin, wmax))] if n == 2 else []
        return make_graph(n, edges)
    edges = [(0, 1), (1, 2), (0, 2)]
    faces = [(0, 1, 2), (0, 2, 1)]
    for v in range(3, n):
        i = rnd.randrange(len(faces))
        a, b, c = faces[i]
        faces[i] = (a, b, v)
        faces.append((b, c, v))
        faces.append((c, a, v))
        edges += [(a, v), (b, v), (c, v)]
    # rotation from the oriented faces: around each vertex, walking the
    # faces gives the cyclic neighbour order
    succ: dict[tuple[int, int], int] = {}
    for a, b, c in faces:
        # face a->b->c; at vertex b the neighbour after a (one orientation) is c
        succ[(b, a)] = c
        succ[(c, b)] = a
        succ[(a, c)] = b
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for (x, y) in edges:
        nbrs[x].append(y)
        nbrs[y].append(x)
    rotation = []
    for v in range(n):
        start = nbrs[v][0]
        order = [start]
        x = succ[(v, start)]
        while x != start:
            order.append(x)
            x = succ[(v, x)]
        rotation.append(order)
    weighted = [(x, y, rnd.randint(wmin, wmax)) for x, y in edges]
    return make_graph(n, weighted, rotation=rotation)


def assign_labels(g: LabeledPlanarGraph, l: int, dist: str = "uniform", seed: int = 0
                  ) -> LabeledPlanarGraph:
    """Relabel ``g`` with labels ``L0..L{l-1}``, each used at least once."""
    if l < 1 or l > g.n:
        raise ValueError("need 1 <= l <= n labels")
    rnd = random.Random(seed)
    verts = list(range(g.n))
    rnd.shuffle(verts)
    lab = [-1] * g.n
    if dist == "uniform":
        for i, v in enumerate(verts):
            lab[v] = i if i < l else rnd.randrange(l)
    elif dist == "clustered":
        adj: list[list[int]] = [[] for _ in range(g.n)]
        for a, b in zip(g.eu.tolist(), g.ev.tolist()):
            adj[a].append(b)
            adj[b].append(a)
        queue = deque()
        for i, v in enumerate(verts[:l]):
            lab[v] = i
            queue.append(v)
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if lab[y] < 0:
                    lab[y] = lab[x]
                    queue.append(y)
        for v in range(g.n):
            if lab[v] < 0:
                lab[v] = rnd.randrange(l)
    else:
        raise ValueError(f"unknown label distribution {dist!r}")
    return with_labels(g, [f"L{x}" for x in lab])


EXHAUSTIVE_LIMIT = 10 ** 6
DEFAULT_BUDGET = 10_000


# ------------------------------------------------------------ reference oracle

class BruteForceOracle:
    """Exact answers by Dijkstra, cached per label and per source vertex."""

    def __init__(self, g: LabeledPlanarGraph):
        self.g = g
        self.view = g.view()
        self._label: dict[int, np.ndarray] = {}
        self._vertex: dict[int, np.ndarray] = {}

    def label_distances(self, lab: int) -> np.ndarray:
        d = self._label.get(lab)
        if d is None:
            d = multi_source_min(self.view, self.g.vertices_with_label(lab))
            self._label[lab] = d
        return d

    def vertex_label(self, u: int, lab: int) -> int:
        return int(self.label_distances(lab)[u])

    def vertex_distances(self, u: int) -> np.ndarray:
        d = self._vertex.get(u)
        if d is None:
            d = sssp(self.view, u)[0]
            self._vertex[u] = d
        return d

    def vertex_vertex(self, u: int, w: int) -> int:
        return int(self.vertex_distances(u)[w])


def within_stretch(est: int, exact: int, eps: Fraction) -> bool:
    """exact <= est <= (1+eps) exact, with INF only matching INF."""
    if exact >= INF:
        return est >= INF
    if est >= INF:
        return False
    return exact <= est and est * eps.denominator <= exact * (eps.numerator + eps.denominator)


@dataclass
class Violation:
    u: int
    target: int
    estimate: int
    exact: int
    kind: str = "label"


@dataclass
class VerifyReport:
    checked: int = 0
    exhaustive: bool = True
    violations: list[Violation] = field(default_factory=list)
    max_stretch: Fraction = Fraction(1)
    comparisons: list[int] = field(default_factory=list)
    probes: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        lines = [f"checked {self.checked} queries ({'exhaustive' if self.exhaustive else 'sampled'}),"
                 f" {len(self.violations)} violations, max stretch {float(self.max_stretch):.4f}"]
        for v in self.violations[:20]:
            lines.append(f"violation {v.kind} u={v.u} target={v.target} estimate={v.estimate} "
                         f"exact={v.exact}")
        return "\n".join(lines)


def _record(rep: VerifyReport, est: int, exact: int, eps: Fraction, u: int, t: int, kind: str,
            st: QueryStats):
    rep.checked += 1
    rep.comparisons.append(st.comparisons)
    rep.probes.append(st.probes)
    if not within_stretch(est, exact, eps):
        rep.violations.append(Violation(u, t, est, exact, kind))
    elif 0 < exact < INF:
        s = Fraction(est, exact)
        if s > rep.max_stretch:
            rep.max_stretch = s


def verify(orc: VertexLabelOracle, brute: BruteForceOracle | None = None,
           budget: int | None = None, seed: int = 0) -> VerifyReport:
    """Check vertex-label queries: all pairs when n*l is at most 10**6,
    otherwise ``budget`` random pairs."""
    g = orc.graph
    brute = brute or BruteForceOracle(g)
    total = g.n * g.num_labels
    rep = VerifyReport()
    if total <= EXHAUSTIVE_LIMIT:
        pairs: Iterable = ((u, lab) for lab in range(g.num_labels) for u in range(g.n))
    else:
        rep.exhaustive = False
        rnd = random.Random(seed)
        pairs = [(rnd.randrange(g.n), rnd.randrange(g.num_labels))
                 for _ in range(budget or DEFAULT_BUDGET)]
    for u, lab in pairs:
        st = QueryStats()
        est = orc.query_vertex_label(u, lab, st)
        _record(rep, est, brute.vertex_label(u, lab), orc.eps, u, lab, "label", st)
    return rep


def verify_vertex_pairs(orc: VertexLabelOracle, brute: BruteForceOracle | None = None
                        ) -> VerifyReport:
    """All unordered vertex pairs (plus the trivial diagonal)."""
    g = orc.graph
    brute = brute or BruteForceOracle(g)
    rep = VerifyReport()
    for u in range(g.n):
        d = brute.vertex_distances(u)
        for w in range(u, g.n):
            st = QueryStats()
            est = orc.query_vertex_vertex(u, w, st)
            _record(rep, est, int(d[w]), orc.eps, u, w, "vertex", st)
    return rep


# ---------------------------------------------------------------------- bench

@dataclass
class BenchRecord:
    instance: str
    n: int
    m: int
    l: int
    eps: str
    build_seconds: float
    connections: int
    depth: int
    cmp_min: int
    cmp_median: float
    cmp_max: int
    stretch_ok: bool
    space_ratio: float
    time_ratio: float


BENCH_COLUMNS = [f.name for f in fields(BenchRecord)]


def space_ratio(connections: int, n: int, eps: Fraction) -> float:
    return connections / (float(1 / eps) * n * max(1.0, math.log2(n)))


def time_ratio(seconds: float, n: int, eps: Fraction) -> float:
    return seconds / (float(1 / eps) ** 2 * n * max(1.0, math.log2(n)) ** 3)


def make_instance(spec: dict, seed: int) -> tuple[str, LabeledPlanarGraph]:
    kind = spec["kind"]
    if kind == "grid":
        k = int(spec["k"])
        g = generate_grid(k, int(spec.get("wmin", 1)), int(spec.get("wmax", 1000)), seed)
        return f"grid{k}-s{seed}", g
    if kind == "planar":
        n = int(spec["n"])
        g = generate_random_planar(n, seed, int(spec.get("wmin", 1)), int(spec.get("wmax", 1000)))
        return f"planar{n}-s{seed}", g
    raise ValueError(f"unknown instance kind {kind!r}")


def bench_cell(name: str, g: LabeledPlanarGraph, eps: Fraction, budget: int | None,
               seed: int = 0) -> BenchRecord:
    t = time.perf_counter()
    orc = build_oracle(g, eps)
    secs = time.perf_counter() - t
    rep = verify(orc, budget=budget, seed=seed)
    cmp = rep.comparisons or [0]
    conn = orc.total_connections()
    return BenchRecord(name, g.n, g.m, g.num_labels, f"{eps.numerator}/{eps.denominator}",
                       round(secs, 4), conn, orc.stats.depth, min(cmp),
                       statistics.median(cmp), max(cmp), rep.ok,
                       space_ratio(conn, g.n, eps), time_ratio(secs, g.n, eps))


def bench(suite: dict, out_path: str | None = None, log=None) -> list[BenchRecord]:
    """Run every (instance, seed, label count, eps) cell of ``suite``."""
    eps_list = [Fraction(e) for e in suite.get("eps", ["1/2", "1/4", "1/10"])]
    labels = suite.get("labels", [2, 8, 32])
    seeds = suite.get("seeds", [1, 2, 3])
    dist = suite.get("dist", "uniform")
    budget = suite.get("budget")
    records = []
    for spec in suite.get("instance", []):
        for seed in spec.get("seeds", seeds):
            name, g0 = make_instance(spec, seed)
            for l in spec.get("labels", labels):
                g = assign_labels(g0, min(l, g0.n), dist, seed)
                for eps in eps_list:
                    rec = bench_cell(f"{name}-l{l}", g, eps, budget, seed)
                    records.append(rec)
                    if log:
                        log(rec)
    if out_path:
        write_csv(records, out_path)
    return records


def write_csv(records: list[BenchRecord], path: str):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))


DEFAULT_SUITE = {
    "eps": ["1/2", "1/4", "1/10"],
    "labels": [2, 8, 32],
    "seeds": [1, 2, 3],
    "instance": [
        {"kind": "grid", "k": 10}, {"kind": "grid", "k": 20}, {"kind": "grid", "k": 30},
        {"kind": "planar", "n": 200}, {"kind": "planar", "n": 1000}, {"kind": "planar", "n": 5000},
    ],
}
