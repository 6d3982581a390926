"""Connection sets over a shortest path and the operations on them.

Positions index a (reduced) path whose along-path coordinate is given by a
non-decreasing ``prefix`` array.  Rational accuracies are ``Fraction``s and all
inequalities are checked with integer cross-multiplication.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .graph_core import INF

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional
    njit = None

_I64_SAFE = (1 << 63) - 1


def _thin_kernel_py(LT, prefix, A, B, keep):
    N, k = LT.shape
    for o in range(N):
        best = -1
        bl = INF
        for i in range(k):
            if LT[o, i] < bl:
                bl = LT[o, i]
                best = i
        if best < 0:
            continue
        keep[o, best] = True
        last = best
        for i in range(best + 1, k):
            l = LT[o, i]
            if l >= INF:
                continue
            if B * (prefix[i] - prefix[last] + LT[o, last]) <= (A + B) * l:
                continue
            keep[o, i] = True
            last = i
        last = best
        for i in range(best - 1, -1, -1):
            l = LT[o, i]
            if l >= INF:
                continue
            if B * (prefix[last] - prefix[i] + LT[o, last]) <= (A + B) * l:
                continue
            keep[o, i] = True
            last = i
        _prune_kernel(LT[o], prefix, A, B, keep[o], best)


def _prune_kernel_py(l, prefix, A, B, keep, best):
    # drop kept connections whose targets all keep another semi-coverer
    k = len(l)
    cnt = np.zeros(k, dtype=np.int64)
    for s in range(k):
        if keep[s]:
            for j in range(k):
                if l[j] < INF and B * (abs(prefix[j] - prefix[s]) + l[s]) <= (A + B) * l[j]:
                    cnt[j] += 1
    for s in range(k):
        if not keep[s] or s == best:
            continue
        ok = True
        for j in range(k):
            if l[j] < INF and cnt[j] < 2 and \
                    B * (abs(prefix[j] - prefix[s]) + l[s]) <= (A + B) * l[j]:
                ok = False
                break
        if ok:
            keep[s] = False
            for j in range(k):
                if l[j] < INF and B * (abs(prefix[j] - prefix[s]) + l[s]) <= (A + B) * l[j]:
                    cnt[j] -= 1


if njit is not None:
    _prune_kernel = njit(cache=True)(_prune_kernel_py)
else:  # pragma: no cover
    _prune_kernel = _prune_kernel_py

_thin_kernel = njit(cache=True)(_thin_kernel_py) if njit is not None else None


class Connection(NamedTuple):
    pos: int
    length: int


@dataclass
class ConnectionSet:
    """Ordered connections of one owner (vertex or label) to one path."""

    owner: int
    path: int
    pos: np.ndarray
    length: np.ndarray
    kind: str = "type-0"

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=np.int64)
        self.length = np.asarray(self.length, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.pos)

    def __iter__(self) -> Iterator[Connection]:
        for p, l in zip(self.pos.tolist(), self.length.tolist()):
            yield Connection(p, l)

    def is_ordered(self) -> bool:
        return bool(np.all(np.diff(self.pos) > 0))

    def dump(self) -> str:
        return " ".join(f"{p}:{l}" for p, l in self)

    def without(self, i: int) -> "ConnectionSet":
        keep = np.arange(len(self)) != i
        return ConnectionSet(self.owner, self.path, self.pos[keep], self.length[keep], self.kind)


@dataclass
class Verdict:
    ok: bool
    witness: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def as_fraction(eps) -> Fraction:
    f = Fraction(eps)
    if f < 0:
        raise ValueError("accuracy must be non-negative")
    return f


def scaled_le(x, y, bx: int, cy: int) -> np.ndarray:
    """Elementwise ``bx * x <= cy * y`` evaluated exactly.

    Falls back to Python integers only when int64 could overflow.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    mx = int(np.abs(x).max(initial=0))
    my = int(np.abs(y).max(initial=0))
    if mx * bx < _I64_SAFE and my * cy < _I64_SAFE:
        return bx * x <= cy * y
    xo = x.astype(object)
    yo = y.astype(object)
    return np.asarray(bx * xo <= cy * yo, dtype=bool)


# ---------------------------------------------------------------- verification

def _as_pairs(C) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(C, ConnectionSet):
        return C.pos, C.length
    pos, length = C
    return np.asarray(pos, dtype=np.int64), np.asarray(length, dtype=np.int64)


def verify_eps_cover(C, exact, prefix, eps) -> Verdict:
    """Every reachable q needs some q* with l(q*) + d_Q(q*, q) <= (1+eps) d(q)."""
    eps = as_fraction(eps)
    pos, length = _as_pairs(C)
    exact = np.asarray(exact, dtype=np.int64)
    prefix = np.asarray(prefix, dtype=np.int64)
    reach = np.flatnonzero(exact < INF)
    if len(reach) == 0:
        return Verdict(True)
    if len(pos) == 0:
        return Verdict(False, int(reach[0]))
    best = (length[None, :] + np.abs(prefix[reach][:, None] - prefix[pos][None, :])).min(axis=1)
    ok = scaled_le(best, exact[reach], eps.denominator, eps.numerator + eps.denominator)
    if ok.all():
        return Verdict(True)
    return Verdict(False, int(reach[np.argmin(ok)]))


def verify_quasi_cover(C, exact, prefix, eps) -> Verdict:
    """Quasi variant: l(q*) + d_Q(q*, q) <= d(q) + eps * l(q*)."""
    eps = as_fraction(eps)
    pos, length = _as_pairs(C)
    exact = np.asarray(exact, dtype=np.int64)
    prefix = np.asarray(prefix, dtype=np.int64)
    reach = np.flatnonzero(exact < INF)
    if len(reach) == 0:
        return Verdict(True)
    if len(pos) == 0:
        return Verdict(False, int(reach[0]))
    detour = length[None, :] + np.abs(prefix[reach][:, None] - prefix[pos][None, :])
    slack = detour - exact[reach][:, None]
    lhs = slack.ravel()
    rhs = np.broadcast_to(length[None, :], slack.shape).ravel()
    ok = scaled_le(lhs, rhs, eps.denominator, eps.numerator).reshape(slack.shape).any(axis=1)
    if ok.all():
        return Verdict(True)
    return Verdict(False, int(reach[np.argmin(ok)]))


# ------------------------------------------------------------------ batch form

@dataclass
class CoverBatch:
    """Connection sets for many owners against one path, in CSR layout."""

    indptr: np.ndarray
    pos: np.ndarray
    length: np.ndarray

    @property
    def num_owners(self) -> int:
        return len(self.indptr) - 1

    def get(self, o: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.indptr[o], self.indptr[o + 1]
        return self.pos[a:b], self.length[a:b]

    def sizes(self) -> np.ndarray:
        return np.diff(self.indptr)

    def connection_set(self, o: int, owner: int | None = None, path: int = -1,
                       kind: str = "type-0") -> ConnectionSet:
        p, l = self.get(o)
        return ConnectionSet(o if owner is None else owner, path, p, l, kind)

    @classmethod
    def from_dense(cls, L: np.ndarray) -> "CoverBatch":
        """Owners are columns; entries below INF are connections."""
        keep = L.T < INF
        owner, pos = np.nonzero(keep)
        indptr = np.zeros(L.shape[1] + 1, dtype=np.int64)
        np.cumsum(np.bincount(owner, minlength=L.shape[1]), out=indptr[1:])
        return cls(indptr, pos.astype(np.int64), L.T[keep].astype(np.int64))


def quasi_cover_batch(M: np.ndarray, prefix: np.ndarray, eps, exhaustive: bool = False
                      ) -> np.ndarray:
    """Bisection selection of quasi-covers for every column owner of ``M``.

    ``M[i, o]`` is the exact distance from owner ``o`` to path position ``i``
    in a graph containing the path's edges.  Returns a boolean mask of the
    selected connections.  Both endpoints of every live interval are kept and
    an owner leaves an interval once one endpoint quasi-covers the other,
    which by the triangle inequality along the path covers the interior.
    """
    eps = as_fraction(eps)
    A, B = eps.numerator, eps.denominator
    k, N = M.shape
    prefix = np.asarray(prefix, dtype=np.int64)
    reach = M < INF
    sel = np.zeros((k, N), dtype=bool)
    if k == 0 or N == 0:
        return sel
    sel[0] = reach[0]
    sel[k - 1] = reach[k - 1]
    if k <= 2:
        return sel
    owner = np.flatnonzero(reach[0])
    lo = np.zeros(len(owner), dtype=np.int64)
    hi = np.full(len(owner), k - 1, dtype=np.int64)
    while len(owner):
        if not exhaustive:
            dl = M[lo, owner]
            dh = M[hi, owner]
            along = prefix[hi] - prefix[lo]
            # endpoint lo quasi-covers hi, or hi covers lo
            c1 = scaled_le(dl + along - dh, dl, B, A)
            c2 = scaled_le(dh + along - dl, dh, B, A)
            live = ~(c1 | c2)
            owner, lo, hi = owner[live], lo[live], hi[live]
        wide = hi - lo >= 2
        owner, lo, hi = owner[wide], lo[wide], hi[wide]
        if not len(owner):
            break
        mid = (lo + hi) // 2
        sel[mid, owner] = True
        owner = np.concatenate([owner, owner])
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    return sel & reach


def thin_batch(L: np.ndarray, prefix: np.ndarray, eps1) -> CoverBatch:
    """Thinning of many candidate sets at once.

    ``L`` is (positions x owners) with INF marking absent connections.
    Per owner: keep the minimum (smallest position on ties), then sweep
    outward in both directions, dropping a connection when the last kept one
    semi-covers it.
    """
    eps1 = as_fraction(eps1)
    A, B = eps1.numerator, eps1.denominator
    k, N = L.shape
    prefix = np.asarray(prefix, dtype=np.int64)
    keep = np.zeros((k, N), dtype=bool)
    if k == 0 or N == 0:
        return CoverBatch.from_dense(np.full((k, N), INF, dtype=np.int64))
    fin = L < INF
    lmax = int(L[fin].max(initial=0))
    fast = (lmax + int(prefix[-1] - prefix[0])) * (A + B) < _I64_SAFE
    if fast and _thin_kernel is not None:
        keepT = np.zeros((N, k), dtype=np.bool_)
        _thin_kernel(np.ascontiguousarray(L.T), prefix, A, B, keepT)
        return CoverBatch.from_dense(np.where(keepT.T, L, INF))
    has = fin.any(axis=0)
    am = np.argmin(L, axis=0)
    cols = np.arange(N)
    keep[am[has], cols[has]] = True
    live_rows = np.flatnonzero(fin.any(axis=1))
    for step in (1, -1):
        last_len = L[am, cols]
        last_pre = prefix[am]
        rows = live_rows if step == 1 else live_rows[::-1]
        for j in rows.tolist():
            row = L[j]
            act = fin[j] & ((j > am) if step == 1 else (j < am))
            if not act.any():
                continue
            lhs = np.abs(prefix[j] - last_pre) + last_len
            if fast:
                new = act & (B * lhs > (A + B) * row)
            else:
                new = act.copy()
                idx = np.flatnonzero(act)
                new[idx] = ~scaled_le(lhs[idx], row[idx], B, A + B)
            keep[j] |= new
            last_pre = np.where(new, prefix[j], last_pre)
            last_len = np.where(new, row, last_len)
    Lo, po = L.astype(object), prefix.astype(object)
    for o in np.flatnonzero(has).tolist():
        _prune_kernel_py(Lo[:, o], po, A, B, keep[:, o], int(am[o]))
    out = np.where(keep, L, INF)
    return CoverBatch.from_dense(out)


def eps_cover_batch(M: np.ndarray, prefix: np.ndarray, eps_c) -> CoverBatch:
    """Quasi-cover at eps_c/8, which is a (eps_c/4)-cover, then thin with eps_c/2."""
    eps_c = as_fraction(eps_c)
    eq, e1 = cover_params(eps_c)
    mask = quasi_cover_batch(M, prefix, eq)
    return thin_batch(np.where(mask, M, INF), prefix, e1)


def cover_params(eps_c) -> tuple[Fraction, Fraction]:
    """(quasi accuracy, thinning accuracy) giving an eps_c-cover overall."""
    eps_c = as_fraction(eps_c)
    return eps_c / 8, eps_c / 2


# ------------------------------------------------------------------ scalar API

def thin_cover(D, prefix, eps0, eps1, owner: int = -1, path: int = -1,
               kind: str = "type-0") -> ConnectionSet:
    """Greedy thinning of one ordered cover (reference implementation).

    After the outward sweeps, kept connections (other than the minimum) are
    dropped in position order while every input connection remains
    semi-covered by what is left, which makes the result clean.
    """
    eps1 = as_fraction(eps1)
    A, B = eps1.numerator, eps1.denominator
    pos, length = _as_pairs(D)
    if isinstance(D, ConnectionSet):
        owner, path, kind = D.owner, D.path, D.kind
    if len(pos) == 0:
        return ConnectionSet(owner, path, pos, length, kind)
    pre = [int(prefix[p]) for p in pos.tolist()]
    ln = length.tolist()
    best = min(range(len(ln)), key=lambda i: (ln[i], pos[i]))
    kept = [best]
    for rng in (range(best + 1, len(ln)), range(best - 1, -1, -1)):
        last = best
        for i in rng:
            if B * (abs(pre[i] - pre[last]) + ln[last]) <= (A + B) * ln[i]:
                continue
            kept.append(i)
            last = i
    mask = np.zeros(len(ln), dtype=bool)
    mask[kept] = True
    _prune_kernel_py(np.array(ln, dtype=object), np.array(pre, dtype=object), A, B, mask, best)
    return ConnectionSet(owner, path, pos[mask], length[mask], kind)


def thin_half_bound(eps0, eps1) -> int:
    """Largest number of connections one half of a thinned set may hold."""
    eps0, eps1 = as_fraction(eps0), as_fraction(eps1)
    v = 1 + (2 + eps0) / eps1
    return v.numerator // v.denominator


def thin_size_bound(eps0, eps1) -> int:
    return 2 * thin_half_bound(eps0, eps1)


def halves(C: ConnectionSet) -> tuple[int, int]:
    """Sizes of the two sweeps, both including the minimum connection."""
    if len(C) == 0:
        return 0, 0
    i = int(np.lexsort((C.pos, C.length))[0])
    return len(C) - i, i + 1


def build_quasi_covers(view, path_local: Sequence[int], prefix, eps,
                       exhaustive: bool = False) -> dict[int, ConnectionSet]:
    """Quasi-covers of a path (given by local vertex ids of ``view``) for all
    vertices of the view.  The path's edges must be present in ``view``."""
    from .graph_core import multi_source_distances
    M = multi_source_distances(view, np.asarray(path_local, dtype=np.int64))
    mask = quasi_cover_batch(M, prefix, eps, exhaustive=exhaustive)
    batch = CoverBatch.from_dense(np.where(mask, M, INF))
    return {v: batch.connection_set(v, v) for v in range(view.n)}


def build_eps_covers(view, path_local: Sequence[int], prefix, eps_c) -> dict[int, ConnectionSet]:
    from .graph_core import multi_source_distances
    M = multi_source_distances(view, np.asarray(path_local, dtype=np.int64))
    batch = eps_cover_batch(M, prefix, eps_c)
    return {v: batch.connection_set(v, v) for v in range(view.n)}


def merge_relax(sets: Iterable, prefix) -> tuple[np.ndarray, np.ndarray]:
    """Union of connection sets with lengths relaxed along the path both ways.

    Equals, at every merged position, the shortest detour from the closest
    owner through any of its connections.
    """
    prefix = np.asarray(prefix, dtype=np.int64)
    best: dict[int, int] = {}
    for C in sets:
        pos, length = _as_pairs(C)
        for p, l in zip(pos.tolist(), length.tolist()):
            if l < best.get(p, INF):
                best[p] = l
    if not best:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    pos = sorted(best)
    ln = [best[p] for p in pos]
    pre = [int(prefix[p]) for p in pos]
    for i in range(1, len(pos)):
        ln[i] = min(ln[i], ln[i - 1] + pre[i] - pre[i - 1])
    for i in range(len(pos) - 2, -1, -1):
        ln[i] = min(ln[i], ln[i + 1] + pre[i + 1] - pre[i])
    return np.asarray(pos, dtype=np.int64), np.asarray(ln, dtype=np.int64)


def extended_thinning(sets: Sequence, prefix, eps, owner: int = -1, path: int = -1,
                      kind: str = "type-0") -> ConnectionSet:
    """Single clean set for a group of owners, a 3*eps-cover of the distance
    to the nearest owner when each input is an eps-cover."""
    pos, ln = merge_relax(sets, prefix)
    return thin_cover((pos, ln), prefix, eps, eps, owner=owner, path=path, kind=kind)


class ComparisonCounter:
    def __init__(self):
        self.count = 0


def combine_via_path(ca, cb, prefix, counter: ComparisonCounter | None = None) -> int:
    """min over pairs of l_a + |pre_b - pre_a| + l_b, in one merged pass."""
    if isinstance(ca, ConnectionSet) and isinstance(cb, ConnectionSet) and ca.path != cb.path:
        raise ValueError("connection sets refer to different paths")
    pa, la = _as_pairs(ca)
    pb, lb = _as_pairs(cb)
    return combine_lists(prefix[pa].tolist(), la.tolist(), prefix[pb].tolist(), lb.tolist(),
                         counter)


def combine_lists(xa: list, la: list, xb: list, lb: list,
                  counter: ComparisonCounter | None = None) -> int:
    na, nb = len(xa), len(xb)
    if counter is not None:
        counter.count += na + nb
    if not na or not nb:
        return INF
    best = INF
    ma = mb = INF  # running minima of (l - pre) on each side
    i = j = 0
    while i < na or j < nb:
        if j >= nb or (i < na and xa[i] <= xb[j]):
            x, l = xa[i], la[i]
            i += 1
            if mb < INF and mb + x + l < best:
                best = mb + x + l
            if l - x < ma:
                ma = l - x
        else:
            x, l = xb[j], lb[j]
            j += 1
            if ma < INF and ma + x + l < best:
                best = ma + x + l
            if l - x < mb:
                mb = l - x
    return best
