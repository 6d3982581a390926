"""Versioned binary container for a built oracle.

Layout: fixed header (magic, version, n, eps numerator and denominator, node
count, payload byte length), a payload of zigzag LEB128 varints, and a
trailing SHA-256 of everything before it.
"""
from __future__ import annotations

import hashlib
import struct
from fractions import Fraction
from typing import BinaryIO

import numpy as np

from .graph_core import LabeledPlanarGraph, SeparatorPath
from .oracle import LABEL, VERTEX, SlotTable, VertexLabelOracle
from .separator import DecompositionNode, DecompositionTree

MAGIC = b"LBLORCL\x00"
VERSION = 1
_HEADER = struct.Struct("<8sHHQQQQQ")
_DIGEST = 32
_CRITERIA = [None, "edges", "frame", "components"]


class SerializationError(ValueError):
    pass


class VersionMismatch(SerializationError):
    pass


class TruncatedInput(SerializationError):
    pass


class ChecksumError(SerializationError):
    pass


# --------------------------------------------------------------------- varint

def encode_varints(values: np.ndarray) -> bytes:
    v = np.asarray(values, dtype=np.int64)
    z = ((v << 1) ^ (v >> 63)).view(np.uint64)
    if len(z) == 0:
        return b""
    nbytes = np.ones(len(z), dtype=np.int64)
    t = z >> np.uint64(7)
    while t.any():
        nbytes += t > 0
        t >>= np.uint64(7)
    total = int(nbytes.sum())
    out = np.zeros(total, dtype=np.uint8)
    start = np.cumsum(nbytes) - nbytes
    for i in range(int(nbytes.max())):
        sel = nbytes > i
        chunk = (z[sel] >> np.uint64(7 * i)) & np.uint64(0x7F)
        more = (nbytes[sel] > i + 1).astype(np.uint8) << 7
        out[start[sel] + i] = chunk.astype(np.uint8) | more
    return out.tobytes()


def decode_varints(data: bytes) -> np.ndarray:
    b = np.frombuffer(data, dtype=np.uint8)
    if len(b) == 0:
        return np.zeros(0, dtype=np.int64)
    end = (b & 0x80) == 0
    if not end[-1]:
        raise TruncatedInput("payload ends inside a varint")
    ends = np.flatnonzero(end)
    starts = np.r_[0, ends[:-1] + 1]
    vid = np.repeat(np.arange(len(ends)), ends - starts + 1)
    shift = (np.arange(len(b)) - starts[vid]).astype(np.uint64) * np.uint64(7)
    if shift.max(initial=0) > 63:
        raise SerializationError("varint too long")
    parts = (b & 0x7F).astype(np.uint64) << shift
    z = np.bitwise_or.reduceat(parts, starts)
    return ((z >> np.uint64(1)).astype(np.int64) ^ -(z & np.uint64(1)).astype(np.int64))


class _Writer:
    def __init__(self):
        self.parts: list[np.ndarray] = []

    def int(self, x: int):
        self.parts.append(np.array([x], dtype=np.int64))

    def ints(self, arr):
        a = np.asarray(arr, dtype=np.int64).ravel()
        self.int(len(a))
        self.parts.append(a)

    def csr(self, rows):
        rows = [np.asarray(r, dtype=np.int64).ravel() for r in rows]
        self.ints([len(r) for r in rows])
        self.parts.append(np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64))

    def text(self, s: str):
        self.ints(np.frombuffer(s.encode("utf-8"), dtype=np.uint8))

    def payload(self) -> bytes:
        if not self.parts:
            return b""
        return encode_varints(np.concatenate(self.parts))


class _Reader:
    def __init__(self, values: np.ndarray):
        self.v = values
        self.at = 0

    def int(self) -> int:
        if self.at >= len(self.v):
            raise TruncatedInput("payload exhausted")
        x = int(self.v[self.at])
        self.at += 1
        return x

    def ints(self) -> np.ndarray:
        k = self.int()
        if k < 0 or self.at + k > len(self.v):
            raise TruncatedInput("payload exhausted")
        out = self.v[self.at:self.at + k].copy()
        self.at += k
        return out

    def csr(self) -> list[np.ndarray]:
        sizes = self.ints()
        total = int(sizes.sum())
        if self.at + total > len(self.v):
            raise TruncatedInput("payload exhausted")
        flat = self.v[self.at:self.at + total]
        self.at += total
        cuts = np.cumsum(sizes)[:-1]
        return [x.copy() for x in np.split(flat, cuts)] if len(sizes) else []

    def text(self) -> str:
        return bytes(self.ints().astype(np.uint8)).decode("utf-8")


# ------------------------------------------------------------------- encoding

def dumps(orc: VertexLabelOracle) -> bytes:
    g, tree = orc.graph, orc.tree
    w = _Writer()
    # graph
    w.int(g.n)
    w.ints(g.eu)
    w.ints(g.ev)
    w.ints(g.ew)
    w.csr(g.rotation)
    w.ints(g.labels)
    w.int(len(g.label_names))
    for name in g.label_names:
        w.text(name)
    # decomposition
    w.int(tree.leaf_size)
    w.int(int(tree.deterministic_labels))
    w.ints(tree.leaf_of)
    w.csr([p.vertices for p in tree.paths])
    w.csr([p.prefix for p in tree.paths])
    w.ints([p.origin for p in tree.paths])
    w.csr(tree.path_edges)
    nodes = tree.nodes
    w.ints([nd.parent for nd in nodes])
    w.ints([nd.depth for nd in nodes])
    w.ints([_CRITERIA.index(nd.criterion) for nd in nodes])
    w.ints([nd.weight for nd in nodes])
    w.csr([nd.child_weights for nd in nodes])
    w.csr([nd.vertices for nd in nodes])
    w.csr([nd.edges for nd in nodes])
    w.csr([nd.core_edges for nd in nodes])
    w.csr([nd.separator for nd in nodes])
    w.csr([nd.children for nd in nodes])
    w.csr([sorted(nd.frame) for nd in nodes])
    w.csr([nd.frame[p] for nd in nodes for p in sorted(nd.frame)])
    # connection tables
    meta, counts, owners, sizes, pos, length = [], [], [], [], [], []
    for r, tab in enumerate(orc.tables):
        for (p, t, kind), slot in tab.items():
            meta += [r, p, t, 0 if kind == VERTEX else 1]
            counts.append(len(slot.owners))
            owners.append(slot.owners)
            sizes.append(np.diff(slot.indptr))
            pos.append(slot.pos)
            length.append(slot.length)
    cat = (lambda xs: np.concatenate(xs) if xs else np.zeros(0, dtype=np.int64))
    w.ints(meta)
    w.ints(counts)
    w.ints(cat(owners))
    w.ints(cat(sizes))
    w.ints(cat(pos))
    w.ints(cat(length))
    payload = w.payload()
    head = _HEADER.pack(MAGIC, VERSION, 0, g.n, orc.eps.numerator, orc.eps.denominator,
                        len(nodes), len(payload))
    body = head + payload
    return body + hashlib.sha256(body).digest()


def serialize_oracle(orc: VertexLabelOracle, sink: BinaryIO | str):
    data = dumps(orc)
    if isinstance(sink, str):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def loads(data: bytes) -> VertexLabelOracle:
    if len(data) < _HEADER.size:
        raise TruncatedInput("shorter than the header")
    magic, version, _flags, n, num, den, num_nodes, plen = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SerializationError("not an oracle file")
    if version != VERSION:
        raise VersionMismatch(f"format version {version}, expected {VERSION}")
    if len(data) < _HEADER.size + plen + _DIGEST:
        raise TruncatedInput("input truncated")
    body = data[:_HEADER.size + plen]
    if hashlib.sha256(body).digest() != data[_HEADER.size + plen:_HEADER.size + plen + _DIGEST]:
        raise ChecksumError("checksum mismatch")
    rd = _Reader(decode_varints(body[_HEADER.size:]))

    gn = rd.int()
    eu, ev, ew = rd.ints(), rd.ints(), rd.ints()
    rotation = [r.tolist() for r in rd.csr()]
    labels = rd.ints()
    names = [rd.text() for _ in range(rd.int())]
    g = LabeledPlanarGraph(gn, eu, ev, ew, rotation, labels, names)

    leaf_size = rd.int()
    deterministic = bool(rd.int())
    leaf_of = rd.ints()
    pv, pp, porig = rd.csr(), rd.csr(), rd.ints()
    paths = [SeparatorPath(v, p, int(o)) for v, p, o in zip(pv, pp, porig)]
    path_edges = rd.csr()
    parent, depth, crit, weight = rd.ints(), rd.ints(), rd.ints(), rd.ints()
    cw = rd.csr()
    verts, edges, core, seps, children, fids = (rd.csr() for _ in range(6))
    fpos = rd.csr()
    tree = DecompositionTree([], paths, path_edges, leaf_of, leaf_size,
                             num_labels=len(names), deterministic_labels=deterministic)
    at = 0
    for r in range(len(parent)):
        frame = {}
        for p in fids[r].tolist():
            frame[p] = fpos[at]
            at += 1
        nd = DecompositionNode(r, int(parent[r]), int(depth[r]), verts[r], edges[r], frame,
                               separator=seps[r].tolist(), children=children[r].tolist())
        labs = np.unique(labels[verts[r]])
        nd.labels = frozenset(labs.tolist())
        nd.labels_sorted = labs
        nd.core_edges = core[r]
        nd.criterion = _CRITERIA[int(crit[r])]
        nd.weight = int(weight[r])
        nd.child_weights = tuple(cw[r].tolist())
        tree.nodes.append(nd)
    if len(tree.nodes) != num_nodes or gn != n:
        raise SerializationError("header disagrees with payload")

    orc = VertexLabelOracle(g, tree, Fraction(num, den))
    meta = rd.ints().reshape(-1, 4)
    counts, owners, sizes, pos, length = (rd.ints() for _ in range(5))
    if rd.at != len(rd.v):
        raise SerializationError("trailing data in payload")
    o_at = c_at = 0
    for (r, p, t, kind), cnt in zip(meta.tolist(), counts.tolist()):
        own = owners[o_at:o_at + cnt]
        sz = sizes[o_at:o_at + cnt]
        o_at += cnt
        indptr = np.zeros(cnt + 1, dtype=np.int64)
        np.cumsum(sz, out=indptr[1:])
        tot = int(indptr[-1])
        ps = pos[c_at:c_at + tot]
        slot = SlotTable(own, indptr, ps, length[c_at:c_at + tot], tree.paths[p].prefix[ps])
        c_at += tot
        orc._store(r, (p, t, VERTEX if kind == 0 else LABEL), slot)
    orc.stats.nodes = len(tree.nodes)
    orc.stats.depth = tree.depth
    orc.stats.max_frame = max(len(nd.frame) for nd in tree.nodes)
    return orc


def deserialize_oracle(source: BinaryIO | str | bytes) -> VertexLabelOracle:
    if isinstance(source, (bytes, bytearray)):
        return loads(bytes(source))
    if isinstance(source, str):
        with open(source, "rb") as fh:
            return loads(fh.read())
    return loads(source.read())
