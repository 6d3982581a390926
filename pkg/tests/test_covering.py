from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from labeloracle.covering import (ComparisonCounter, ConnectionSet, build_eps_covers,
                                  build_quasi_covers, combine_via_path, cover_params,
                                  eps_cover_batch, extended_thinning, halves, merge_relax,
                                  quasi_cover_batch, scaled_le, thin_batch, thin_cover,
                                  thin_half_bound, thin_size_bound, verify_eps_cover,
                                  verify_quasi_cover)
from labeloracle.graph_core import INF, make_graph, multi_source_distances, multi_source_min, sssp
from labeloracle.harness import generate_grid, generate_random_planar

from conftest import path_graph

EPS = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)]


def longest_shortest_path(g, source=0):
    view = g.view()
    dist, parent = sssp(view, source)
    t = int(np.argmax(np.where(dist < INF, dist, -1)))
    path = [t]
    while path[-1] != source:
        path.append(int(parent[path[-1]]))
    path = np.array(path[::-1])
    return view, path, dist[path]


def lipschitz_profile(draw_hubs, prefix):
    """Exact distances from an off-path vertex attached at a few hubs."""
    pos, ln = draw_hubs
    prefix = np.asarray(prefix)
    pos = np.asarray(pos) % len(prefix)
    return np.min(np.asarray(ln)[:, None] + np.abs(prefix[None, :] - prefix[pos][:, None]), axis=0)


@st.composite
def path_instance(draw, max_k=30):
    k = draw(st.integers(1, max_k))
    steps = draw(st.lists(st.integers(0, 40), min_size=k - 1, max_size=k - 1))
    prefix = np.r_[0, np.cumsum(steps)].astype(np.int64)
    h = draw(st.integers(1, 4))
    pos = draw(st.lists(st.integers(0, 10 ** 6), min_size=h, max_size=h))
    ln = draw(st.lists(st.integers(0, 500), min_size=h, max_size=h))
    return prefix, lipschitz_profile((pos, ln), prefix).astype(np.int64)


fractions = st.builds(Fraction, st.integers(1, 8), st.integers(4, 16)).filter(lambda f: f <= 1)


# ---------------------------------------------------------------- verification

def test_self_cover_at_zero_distance():
    prefix = np.array([0, 3, 5])
    exact = np.array([3, 0, 2])
    assert verify_eps_cover(ConnectionSet(0, 0, [1], [0]), exact, prefix, Fraction(0))


def test_all_exact_is_zero_cover():
    prefix = np.array([0, 2, 7, 8])
    exact = np.array([4, 3, 5, 6])
    assert verify_eps_cover((np.arange(4), exact), exact, prefix, 0)


def test_deleting_a_thinned_connection_gives_witness():
    g = generate_random_planar(20, 11)
    view, path, prefix = longest_shortest_path(g)
    M = multi_source_distances(view, path)
    checked = 0
    for v in range(g.n):
        exact = M[:, v]
        C = thin_cover((np.arange(len(path)), exact), prefix, 0, Fraction(1, 4))
        assert verify_eps_cover(C, exact, prefix, Fraction(1, 4))
        for i in range(len(C)):
            res = verify_eps_cover(C.without(i), exact, prefix, Fraction(1, 4))
            assert not res
            q = res.witness
            pos, ln = C.without(i).pos, C.without(i).length
            best = min((l + abs(int(prefix[q]) - int(prefix[p])) for p, l in zip(pos, ln)),
                       default=INF)
            assert 4 * best > 5 * exact[q]
            checked += 1
    assert checked > 0


def test_quasi_adversarial_threshold():
    prefix = np.array([0, 10])
    exact = np.array([10, 17])
    C = ConnectionSet(0, 0, [0], [10])
    tight = verify_quasi_cover(C, exact, prefix, Fraction(1, 10))
    loose = verify_quasi_cover(C, exact, prefix, Fraction(1, 2))
    assert not tight and tight.witness == 1
    assert loose and loose.witness is None


def test_scaled_le_survives_overflow():
    x = np.array([1 << 61, 5])
    y = np.array([(1 << 61) + 1, 4])
    assert scaled_le(x, y, 7, 7).tolist() == [True, False]


# -------------------------------------------------------------- quasi covers

def test_quasi_cover_on_bare_path():
    g = path_graph([3, 1, 4, 1, 5, 9, 2, 6])
    view = g.view()
    path = np.arange(g.n)
    prefix = np.r_[0, np.cumsum([3, 1, 4, 1, 5, 9, 2, 6])]
    covers = build_quasi_covers(view, path, prefix, Fraction(1, 4))
    M = multi_source_distances(view, path)
    for v, C in covers.items():
        assert C.is_ordered()
        assert verify_quasi_cover(C, M[:, v], prefix, Fraction(1, 4))


def test_quasi_cover_star_of_paths():
    # spine 0..9, with a pendant path of three edges hanging off every other vertex
    edges = [(i, i + 1, 2) for i in range(9)]
    nxt = 10
    for hub in range(0, 10, 2):
        prev = hub
        for w in (3, 1, 5):
            edges.append((prev, nxt, w))
            prev, nxt = nxt, nxt + 1
    g = make_graph(nxt, edges)
    view = g.view()
    path = np.arange(10)
    prefix = 2 * path
    M = multi_source_distances(view, path)
    for eps in EPS:
        for v, C in build_quasi_covers(view, path, prefix, eps).items():
            assert verify_quasi_cover(C, M[:, v], prefix, eps)


def test_quasi_cover_grid_row_size():
    g = generate_grid(3, 1, 1, 0)
    view = g.view()
    path = np.array([0, 1, 2])
    prefix = np.array([0, 1, 2])
    M = multi_source_distances(view, path)
    eps = Fraction(1, 4)
    for v, C in build_quasi_covers(view, path, prefix, eps).items():
        assert verify_quasi_cover(C, M[:, v], prefix, eps)
        assert len(C) <= 3


def test_quasi_cover_exhaustive_fallback_is_exact():
    g = generate_random_planar(40, 2)
    view, path, prefix = longest_shortest_path(g)
    M = multi_source_distances(view, path)
    mask = quasi_cover_batch(M, prefix, Fraction(1, 4), exhaustive=True)
    assert np.array_equal(mask, M < INF)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("eps", EPS)
def test_quasi_cover_is_double_eps_cover(seed, eps):
    g = generate_random_planar(120 + 40 * seed, seed)
    view, path, prefix = longest_shortest_path(g, source=seed)
    M = multi_source_distances(view, path)
    covers = build_quasi_covers(view, path, prefix, eps)
    k = len(path)
    size_cap = 2 * (int(2 / eps) + 2) * (int(np.ceil(np.log2(max(k, 2)))) + 1)
    for v, C in covers.items():
        assert verify_quasi_cover(C, M[:, v], prefix, eps)
        assert verify_eps_cover(C, M[:, v], prefix, 2 * eps)
        assert len(C) <= size_cap


# ------------------------------------------------------------------ thinning

def test_thin_singleton():
    C = thin_cover(([4], [7]), np.arange(6), 0, 1)
    assert C.pos.tolist() == [4] and C.length.tolist() == [7]


def test_thin_valley_example():
    prefix = np.arange(5)
    exact = np.array([10, 9, 8, 9, 10])
    C = thin_cover((np.arange(5), exact), prefix, 0, 1)
    # the minimum alone semi-covers every other position at eps1 = 1
    assert C.pos.tolist() == [2]
    assert verify_eps_cover(C, exact, prefix, 1)
    assert max(halves(C)) <= thin_half_bound(0, 1)


@given(st.lists(st.integers(0, 50), min_size=99, max_size=99),
       st.lists(st.tuples(st.integers(0, 99), st.integers(0, 2000)), min_size=1, max_size=6),
       st.lists(st.integers(0, 100), min_size=100, max_size=100))
def test_thin_size_hundred(steps, hubs, slack):
    prefix = np.r_[0, np.cumsum(steps)]
    exact = lipschitz_profile(tuple(zip(*hubs)), prefix)
    # an eps0 = 1 cover: lengths anywhere in [exact, 2 * exact]
    ln = exact + exact * np.array(slack) // 100
    C = thin_cover((np.arange(100), ln), prefix, 1, 1)
    assert len(C) <= 8
    assert thin_size_bound(1, 1) == 8


@given(path_instance(), fractions, st.integers(0, 4))
def test_thin_properties(inst, eps1, e0_quarters):
    prefix, exact = inst
    eps0 = Fraction(e0_quarters, 4)
    D = (np.arange(len(prefix)), exact)
    C = thin_cover(D, prefix, eps0, eps1)
    assert C.is_ordered()
    assert set(C.pos.tolist()) <= set(range(len(prefix)))
    assert np.array_equal(C.length, exact[C.pos])
    m = int(np.lexsort((np.arange(len(exact)), exact))[0])
    assert m in C.pos.tolist()
    hb = thin_half_bound(eps0, eps1)
    assert max(halves(C)) <= hb
    assert verify_eps_cover(C, exact, prefix, eps1)


@given(path_instance(30), fractions)
def test_thin_is_clean(inst, eps1):
    prefix, exact = inst
    C = thin_cover((np.arange(len(prefix)), exact), prefix, 0, eps1)
    assert verify_eps_cover(C, exact, prefix, eps1)
    for i in range(len(C)):
        assert not verify_eps_cover(C.without(i), exact, prefix, eps1)


@given(st.integers(1, 20), st.integers(1, 6), fractions, st.integers(0, 2 ** 32 - 1),
       st.booleans())
def test_thin_batch_matches_scalar(k, owners, eps1, seed, huge):
    r = np.random.default_rng(seed)
    prefix = np.r_[0, np.cumsum(r.integers(0, 30, k - 1))]
    L = r.integers(0, 500, (k, owners))
    if huge:
        L, prefix = L << 51, prefix << 50
    L = np.where(r.random((k, owners)) < 0.3, INF, L)
    batch = thin_batch(L, prefix, eps1)
    for o in range(owners):
        have = np.flatnonzero(L[:, o] < INF)
        ref = thin_cover((have, L[have, o]), prefix, 0, eps1)
        pos, ln = batch.get(o)
        assert pos.tolist() == ref.pos.tolist() and ln.tolist() == ref.length.tolist()


# ---------------------------------------------------------------- eps covers

@pytest.mark.parametrize("eps_c", [Fraction(1, 6), Fraction(1, 12), Fraction(1, 30)])
def test_eps_covers_random_planar(eps_c):
    g = generate_random_planar(300, 9)
    view, path, prefix = longest_shortest_path(g)
    M = multi_source_distances(view, path)
    cap = thin_size_bound(*[eps_c / 4, cover_params(eps_c)[1]])
    for v, C in build_eps_covers(view, path, prefix, eps_c).items():
        assert verify_eps_cover(C, M[:, v], prefix, eps_c)
        assert len(C) <= cap


def test_eps_covers_on_path_itself():
    g = path_graph([2, 2, 2, 2])
    covers = build_eps_covers(g.view(), np.arange(5), np.arange(0, 10, 2), Fraction(1, 4))
    for v, C in covers.items():
        assert C.pos.tolist() == [v] and C.length.tolist() == [0]


def test_eps_cover_batch_unreachable_owner():
    M = np.array([[0, INF], [1, INF]], dtype=np.int64)
    b = eps_cover_batch(M, np.array([0, 1]), Fraction(1, 4))
    assert b.sizes().tolist() == [1, 0]


# --------------------------------------------------------- extended thinning

@given(path_instance(), fractions)
def test_extended_single_owner(inst, eps):
    prefix, exact = inst
    C = thin_cover((np.arange(len(prefix)), exact), prefix, 0, eps)
    E = extended_thinning([C], prefix, eps)
    ref = thin_cover(merge_relax([C], prefix), prefix, eps, eps)
    assert E.pos.tolist() == ref.pos.tolist()
    ref1 = thin_cover(C, prefix, eps, eps)
    assert E.pos.tolist() == ref1.pos.tolist()


def test_merge_two_disjoint_halves():
    prefix = np.array([0, 3, 4, 9, 11, 12, 20])
    a = ConnectionSet(0, 0, [0, 2], [6, 4])
    b = ConnectionSet(1, 0, [4, 6], [1, 9])
    pos, ln = merge_relax([a, b], prefix)
    assert pos.tolist() == [0, 2, 4, 6]
    for p, l in zip(pos.tolist(), ln.tolist()):
        brute = min(c.length[i] + abs(prefix[p] - prefix[c.pos[i]])
                    for c in (a, b) for i in range(len(c)))
        assert l == brute


@pytest.mark.parametrize("seed", range(5))
def test_extended_three_owners(seed):
    g = generate_random_planar(150, 20 + seed)
    view, path, prefix = longest_shortest_path(g)
    path, prefix = path[:30], prefix[:30]
    eps = Fraction(1, 4)
    owners = np.random.default_rng(seed).choice(g.n, 3, replace=False)
    covers = build_eps_covers(view, path, prefix, eps)
    E = extended_thinning([covers[int(o)] for o in owners], prefix, eps)
    nearest = multi_source_min(view, owners)[path]
    assert verify_eps_cover(E, nearest, prefix, 3 * eps)
    assert np.all(E.length >= nearest[E.pos])
    assert np.all(4 * E.length <= 7 * nearest[E.pos])


def test_extended_empty():
    E = extended_thinning([], np.arange(3), Fraction(1, 4))
    assert len(E) == 0


# ----------------------------------------------------------------- combining

def test_combine_examples():
    prefix = np.array([0, 1, 2, 3])
    assert combine_via_path(ConnectionSet(0, 5, [0], [5]), ConnectionSet(1, 5, [3], [2]),
                            prefix) == 10
    assert combine_via_path(ConnectionSet(0, 5, [2], [0]), ConnectionSet(1, 5, [2], [0]),
                            prefix) == 0
    assert combine_via_path(ConnectionSet(0, 5, [], []), ConnectionSet(1, 5, [2], [0]),
                            prefix) == INF


def test_combine_rejects_other_path():
    with pytest.raises(ValueError):
        combine_via_path(ConnectionSet(0, 1, [0], [0]), ConnectionSet(1, 2, [0], [0]),
                         np.arange(2))


@given(st.lists(st.tuples(st.integers(0, 40), st.integers(0, 100)), min_size=1, max_size=8),
       st.lists(st.tuples(st.integers(0, 40), st.integers(0, 100)), min_size=1, max_size=8),
       st.lists(st.integers(0, 9), min_size=41, max_size=41))
def test_combine_matches_quadratic(a, b, steps):
    prefix = np.cumsum(steps)
    a = dict(a)
    b = dict(b)
    ca = ConnectionSet(0, 0, sorted(a), [a[p] for p in sorted(a)])
    cb = ConnectionSet(1, 0, sorted(b), [b[p] for p in sorted(b)])
    brute = min(la + abs(int(prefix[pa]) - int(prefix[pb])) + lb
                for pa, la in a.items() for pb, lb in b.items())
    cnt = ComparisonCounter()
    assert combine_via_path(ca, cb, prefix, cnt) == brute
    assert cnt.count == len(a) + len(b)
