import numpy as np
import pytest
from hypothesis import given, strategies as st

from labeloracle.graph_core import (INF, GraphFormatError, NonPlanarError, SeparatorPath,
                                    euler_check, load_graph, make_graph, multi_source_distances,
                                    multi_source_min, reduce_path, shortest_path_tree, sssp,
                                    triangulate_for_separator, with_labels)
from labeloracle.harness import generate_grid, generate_random_planar

from conftest import path_graph, unit_grid


def test_triangle_loads():
    g = load_graph("3 3\n0 1 1\n1 2 1\n0 2 1\n", "0 a\n1 a\n2 b\n")
    assert (g.n, g.m) == (3, 3)
    assert g.label_names == ["a", "b"]
    assert g.labels.tolist() == [0, 0, 1]


def test_k5_rejected():
    edges = "".join(f"{i} {j} 1\n" for i in range(5) for j in range(i + 1, 5))
    with pytest.raises(NonPlanarError, match="non-planar"):
        load_graph("5 10\n" + edges)


def test_k33_rejected_by_embedding():
    # K3,3 has 9 <= 3*6-6 edges, so only the embedding step can reject it
    edges = [(a, b, 1) for a in range(3) for b in range(3, 6)]
    with pytest.raises(NonPlanarError):
        make_graph(6, edges)


@pytest.mark.parametrize("text", ["2 1\n0 1 -3\n", "2 1\n0 0 1\n", "2 1\n0 5 1\n"])
def test_bad_edges(text):
    with pytest.raises(GraphFormatError):
        load_graph(text)


def test_missing_label():
    with pytest.raises(GraphFormatError):
        load_graph("2 1\n0 1 1\n", "0 a\n")


def test_overflow_guard():
    with pytest.raises(GraphFormatError):
        make_graph(3, [(0, 1, 1 << 60), (1, 2, 1 << 60)])


def test_parallel_edges_keep_minimum():
    g = make_graph(2, [(0, 1, 5), (1, 0, 2)])
    assert g.m == 1 and int(g.ew[0]) == 2


def test_generated_grid_is_valid():
    g = generate_grid(3, 1, 1, 0)
    assert (g.n, g.m) == (9, 12)
    assert euler_check(g.n, g.eu, g.ev, g.rotation)


def test_explicit_embedding_roundtrip():
    g = generate_random_planar(30, 2)
    from labeloracle.graph_core import format_edge_list, format_embedding, format_labels
    h = load_graph(format_edge_list(g), format_labels(g), format_embedding(g))
    assert h.rotation == g.rotation


def test_sssp_path():
    g = path_graph([2, 3])
    d, parent = sssp(g.view(), 0)
    assert d.tolist() == [0, 2, 5]
    assert parent.tolist()[1:] == [0, 1]


def test_sssp_unreachable():
    g = make_graph(3, [(0, 1, 4)])
    d, _ = sssp(g.view(), 0)
    assert d[2] == INF


def test_grid_corner_distance():
    g = unit_grid(3)
    d, _ = sssp(g.view(), 0)
    assert d[8] == 4
    t = shortest_path_tree(g.view(), 0)
    assert np.array_equal(t.dist, d)


def test_star_tree_is_graph():
    g = make_graph(5, [(0, i, i) for i in range(1, 5)])
    t = shortest_path_tree(g.view(), 0)
    assert t.parent.tolist()[1:] == [0, 0, 0, 0]


def test_single_vertex_tree():
    g = make_graph(1, [])
    t = shortest_path_tree(g.view(), 0)
    assert len(t.tree_edges()) == 0


def test_spt_rejects_disconnected():
    g = make_graph(3, [(0, 1, 1)])
    with pytest.raises(Exception):
        shortest_path_tree(g.view(), 0)


def test_matrix_and_heap_agree(planar60):
    view = planar60.view()
    M = multi_source_distances(view, np.arange(view.n))
    for s in range(0, view.n, 7):
        assert np.array_equal(M[s], sssp(view, s)[0])


def test_zero_lengths_exact():
    g = make_graph(4, [(0, 1, 0), (1, 2, 0), (2, 3, 5), (0, 3, 9)])
    M = multi_source_distances(g.view(), [0])
    assert M.tolist() == [[0, 0, 0, 5]]


def test_huge_lengths_stay_exact():
    big = (1 << 52) + 1
    g = make_graph(3, [(0, 1, big), (1, 2, 1), (0, 2, big + 2)])
    M = multi_source_distances(g.view(), [0])
    assert M[0].tolist() == [0, big, big + 1]


def test_multi_source_min_equals_min_of_rows(planar60):
    view = planar60.view()
    src = [3, 17, 40]
    assert np.array_equal(multi_source_min(view, src),
                          multi_source_distances(view, src).min(axis=0))


def test_reduce_path_examples():
    q = SeparatorPath([10, 11, 12, 13], [0, 1, 3, 6])
    r = reduce_path(q, {10, 12})
    assert r.prefix.tolist() == [0, 3]
    assert reduce_path(q, q.vertices).positions.tolist() == [0, 1, 2, 3]
    e = reduce_path(q, set())
    assert len(e) <= 2 and e.prefix[-1] - e.prefix[0] == 6


@given(st.lists(st.integers(0, 20), min_size=1, max_size=49), st.data())
def test_reduce_path_preserves_distances(lengths, data):
    prefix = np.concatenate([[0], np.cumsum(lengths)])
    q = SeparatorPath(np.arange(len(prefix)), prefix)
    keep = data.draw(st.sets(st.integers(0, len(prefix) - 1)))
    r = reduce_path(q, keep)
    if keep:
        assert set(r.vertices.tolist()) == keep
    for i, a in enumerate(r.positions.tolist()):
        for b in r.positions.tolist()[i:]:
            assert r.parent.along(a, b) == prefix[b] - prefix[a]
    # contracted edges add up
    assert sum(w for _, _, w in r.edges()) == r.prefix[-1] - r.prefix[0]


def test_triangulation_counts():
    tri_g = make_graph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    t = triangulate_for_separator(tri_g.view(), tri_g.rotation)
    assert t.num_artificial == 0
    sq = make_graph(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)])
    t = triangulate_for_separator(sq.view(), sq.rotation)
    assert t.num_artificial == 2  # one diagonal per side of the 4-cycle
    g = unit_grid(3)
    t = triangulate_for_separator(g.view(), g.rotation)
    m2 = len(t.eu)
    assert len(t.faces) == 2 * m2 // 3 == 2 - g.n + m2
    assert all(len(f) == 3 for f in t.faces)


def test_triangulation_keeps_distances(planar60):
    view = planar60.view()
    t = triangulate_for_separator(view, planar60.rotation)
    assert all(t.routable(j) for j in range(view.m))
    assert not any(t.routable(j) for j in range(view.m, len(t.eu)))


def test_with_labels():
    g = unit_grid(3)
    h = with_labels(g, ["x"] * 8 + ["y"])
    assert h.num_labels == 2 and h.vertices_with_label(1).tolist() == [8]
