"""Tests for the graph data model, splits, generators, and file formats."""

import math

import numpy as np
import pytest

from privgraph.graphdata import (
    CapacityError,
    FormatError,
    Graph,
    SbmSpec,
    canonical_edges,
    edge_key_set,
    gen_sbm,
    load_graph,
    make_citation_benchmark,
    normalized_adjacency,
    save_graph,
    split_links,
    split_nodes,
)
from privgraph.numkit import Rng, densify


def _toy_graph(num_nodes=30, num_edges=60, num_classes=3, seed=0):
    rng = Rng(seed)
    pairs = np.stack([rng.integers(4 * num_edges, num_nodes),
                      rng.integers(4 * num_edges, num_nodes)], axis=1)
    edges = canonical_edges(pairs, num_nodes)[:num_edges]
    return Graph(num_nodes=num_nodes, edges=edges,
                 features=rng.random((num_nodes, 5)),
                 labels=rng.integers(num_nodes, num_classes),
                 num_classes=num_classes)


# ---------------------------------------------------------------------------
# graph type


def test_canonical_edges_symmetrizes_and_dedups():
    e = canonical_edges([[0, 1], [1, 0], [2, 1], [1, 1]], 3)
    assert np.array_equal(e, [[0, 1], [1, 2]])


def test_graph_rejects_out_of_range_edge():
    with pytest.raises(IndexError):
        Graph(num_nodes=2, edges=[[0, 5]], features=np.zeros((2, 1)),
              labels=[0, 1], num_classes=2)


def test_graph_rejects_bad_labels():
    with pytest.raises(ValueError):
        Graph(num_nodes=2, edges=np.zeros((0, 2)), features=np.zeros((2, 1)),
              labels=[0, 2], num_classes=2)


def test_graph_rejects_duplicate_edges():
    with pytest.raises(ValueError):
        Graph(num_nodes=3, edges=[[0, 1], [0, 1]], features=np.zeros((3, 1)),
              labels=[0, 1, 0], num_classes=2)


# ---------------------------------------------------------------------------
# normalized adjacency


def test_normalized_adjacency_single_node():
    g = Graph(num_nodes=1, edges=np.zeros((0, 2)), features=np.zeros((1, 1)),
              labels=[0], num_classes=2)
    assert np.array_equal(densify(normalized_adjacency(g)), [[1.0]])


def test_normalized_adjacency_single_edge_all_half():
    g = Graph(num_nodes=2, edges=[[0, 1]], features=np.zeros((2, 1)),
              labels=[0, 1], num_classes=2)
    assert np.allclose(densify(normalized_adjacency(g)), 0.5)


def test_normalized_adjacency_matches_dense_oracle():
    g = _toy_graph(num_nodes=20, num_edges=40, seed=3)
    ahat = densify(normalized_adjacency(g))
    a = np.zeros((20, 20))
    for u, v in g.edges:
        a[u, v] = a[v, u] = 1.0
    a_tilde = a + np.eye(20)
    dinv = np.diag(1.0 / np.sqrt(a_tilde.sum(axis=1)))
    oracle = dinv @ a_tilde @ dinv
    assert np.max(np.abs(ahat - oracle)) <= 1e-12
    assert np.max(np.abs(ahat - ahat.T)) <= 1e-12
    nz = ahat[ahat != 0.0]
    assert np.all((nz > 0.0) & (nz <= 1.0))


def test_normalized_adjacency_isolated_node_keeps_self_term():
    g = Graph(num_nodes=3, edges=[[0, 1]], features=np.zeros((3, 1)),
              labels=[0, 1, 0], num_classes=2)
    row = densify(normalized_adjacency(g))[2]
    assert np.array_equal(row, [0.0, 0.0, 1.0])


def test_normalized_adjacency_edge_subset():
    g = _toy_graph(seed=4)
    sub = g.edges[:10]
    ahat = densify(normalized_adjacency(g, edges=sub))
    for u, v in g.edges[10:]:
        assert ahat[u, v] == 0.0


# ---------------------------------------------------------------------------
# node split


def test_split_nodes_counts_and_stratification():
    g = _toy_graph(num_nodes=60, num_edges=80, num_classes=4, seed=5)
    s = split_nodes(g, per_class=3, n_val=10, n_test=15, rng=Rng(1))
    assert s.train.size == 12 and s.val.size == 10 and s.test.size == 15
    for c in range(4):
        assert np.sum(g.labels[s.train] == c) == 3
    all_idx = np.concatenate([s.train, s.val, s.test])
    assert np.unique(all_idx).size == all_idx.size


def test_split_nodes_short_class_takes_all_members():
    labels = np.array([0] * 2 + [1] * 28)
    g = Graph(num_nodes=30, edges=np.zeros((0, 2)), features=np.zeros((30, 2)),
              labels=labels, num_classes=2)
    s = split_nodes(g, per_class=5, n_val=4, n_test=4, rng=Rng(0))
    assert np.sum(labels[s.train] == 0) == 2
    assert np.sum(labels[s.train] == 1) == 5


def test_split_nodes_empty_train_when_per_class_zero():
    g = _toy_graph(seed=6)
    s = split_nodes(g, per_class=0, n_val=5, n_test=5, rng=Rng(2))
    assert s.train.size == 0 and s.val.size == 5


def test_split_nodes_deterministic():
    g = _toy_graph(seed=7)
    a = split_nodes(g, 2, 5, 5, Rng(9))
    b = split_nodes(g, 2, 5, 5, Rng(9))
    assert np.array_equal(a.train, b.train)
    assert np.array_equal(a.val, b.val)
    assert np.array_equal(a.test, b.test)


def test_split_nodes_capacity_error():
    g = _toy_graph(num_nodes=20, num_edges=30, seed=8)
    with pytest.raises(CapacityError):
        split_nodes(g, per_class=5, n_val=10, n_test=10, rng=Rng(0))


# ---------------------------------------------------------------------------
# link split


def test_split_links_floor_rule():
    g = _toy_graph(num_nodes=60, num_edges=97, seed=9)
    assert g.num_edges == 97
    s = split_links(g, 0.85, 0.05, Rng(3))
    assert s.train_pos.shape[0] == 82  # floor(82.45)
    assert s.val_pos.shape[0] == 4     # floor(4.85)
    assert s.test_pos.shape[0] == 11   # remainder


def test_split_links_negative_sets_are_disjoint_non_edges():
    g = _toy_graph(num_nodes=50, num_edges=80, seed=10)
    s = split_links(g, rng=Rng(4))
    edge_keys = edge_key_set(g.num_nodes, g.edges)
    neg = np.concatenate([s.train_neg, s.val_neg, s.test_neg])
    keys = [int(u) * g.num_nodes + int(v) for u, v in neg]
    assert len(set(keys)) == len(keys)
    assert not set(keys) & edge_keys
    assert np.all(neg[:, 0] < neg[:, 1])
    assert s.train_neg.shape == s.train_pos.shape
    assert s.val_neg.shape == s.val_pos.shape
    assert s.test_neg.shape == s.test_pos.shape


def test_split_links_positives_partition_edges():
    g = _toy_graph(num_nodes=40, num_edges=50, seed=11)
    s = split_links(g, rng=Rng(5))
    pos = np.concatenate([s.train_pos, s.val_pos, s.test_pos])
    assert np.array_equal(np.unique(pos, axis=0), g.edges)


def test_split_links_deterministic():
    g = _toy_graph(seed=12)
    a = split_links(g, rng=Rng(6))
    b = split_links(g, rng=Rng(6))
    for fa, fb in [(a.train_pos, b.train_pos), (a.train_neg, b.train_neg),
                   (a.test_neg, b.test_neg)]:
        assert np.array_equal(fa, fb)


def test_split_links_complete_graph_capacity_error():
    pairs = [[u, v] for u in range(6) for v in range(u + 1, 6)]
    g = Graph(num_nodes=6, edges=pairs, features=np.zeros((6, 2)),
              labels=[0, 1] * 3, num_classes=2)
    with pytest.raises(CapacityError):
        split_links(g, rng=Rng(7))


def test_split_links_dense_graph_uses_enumeration():
    rng = Rng(13)
    pairs = [[u, v] for u in range(12) for v in range(u + 1, 12)]
    keep = Rng(14).permutation(len(pairs))[:20]
    g = Graph(num_nodes=12, edges=canonical_edges(np.array(pairs)[keep], 12),
              features=np.zeros((12, 2)), labels=[0, 1] * 6, num_classes=2)
    s = split_links(g, rng=rng)
    edge_keys = edge_key_set(12, g.edges)
    for u, v in np.concatenate([s.train_neg, s.val_neg, s.test_neg]):
        assert int(u) * 12 + int(v) not in edge_keys


def test_split_links_too_few_edges():
    g = _toy_graph(num_nodes=20, num_edges=5, seed=15)
    with pytest.raises(CapacityError):
        split_links(g, rng=Rng(0))


# ---------------------------------------------------------------------------
# generators


def test_gen_sbm_deterministic_limits():
    g = gen_sbm(SbmSpec(blocks=2, nodes_per_block=3, p_in=1.0, p_out=0.0), Rng(0))
    expect = [[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5]]
    assert np.array_equal(g.edges, expect)
    g0 = gen_sbm(SbmSpec(blocks=2, nodes_per_block=3, p_in=0.0, p_out=0.0), Rng(0))
    assert g0.num_edges == 0


def test_gen_sbm_edge_counts_within_5_sigma():
    g = gen_sbm(SbmSpec(blocks=2, nodes_per_block=100, p_in=0.1, p_out=0.01), Rng(1))
    same = g.labels[g.edges[:, 0]] == g.labels[g.edges[:, 1]]
    intra, inter = int(np.sum(same)), int(np.sum(~same))
    n_intra_pairs = 2 * math.comb(100, 2)
    n_inter_pairs = 100 * 100
    assert abs(intra - 0.1 * n_intra_pairs) <= 5 * math.sqrt(n_intra_pairs * 0.1 * 0.9)
    assert abs(inter - 0.01 * n_inter_pairs) <= 5 * math.sqrt(n_inter_pairs * 0.01 * 0.99)


def test_gen_sbm_features_and_labels():
    spec = SbmSpec(blocks=3, nodes_per_block=4, p_in=0.5, p_out=0.1, noise=0.05)
    g = gen_sbm(spec, Rng(2))
    assert g.feature_dim == 3 and g.num_classes == 3
    assert np.array_equal(g.labels, np.repeat([0, 1, 2], 4))
    onehot = np.eye(3)[g.labels]
    assert np.all((g.features - onehot >= 0.0) & (g.features - onehot < 0.05))


def test_sbm_spec_validation():
    with pytest.raises(ValueError):
        SbmSpec(blocks=2, nodes_per_block=3, p_in=0.1, p_out=0.5)
    with pytest.raises(ValueError):
        SbmSpec(blocks=1, nodes_per_block=3, p_in=0.5, p_out=0.1)


def test_citation_benchmark_is_deterministic():
    a = make_citation_benchmark(Rng(3), num_nodes=200, num_edges=400, num_venues=5)
    b = make_citation_benchmark(Rng(3), num_nodes=200, num_edges=400, num_venues=5)
    assert np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)


def test_citation_benchmark_default_shape_statistics():
    g = make_citation_benchmark(Rng(4))
    assert g.num_nodes == 2708
    assert g.num_edges == 5429
    assert g.feature_dim == 1433
    assert g.num_classes == 7
    same = g.labels[g.edges[:, 0]] == g.labels[g.edges[:, 1]]
    homophily = float(np.mean(same))
    assert 0.75 <= homophily <= 0.90
    per_row = g.features.sum(axis=1)
    assert np.all((per_row >= 3) & (per_row <= 27))


# ---------------------------------------------------------------------------
# file formats


def test_save_load_round_trip(tmp_path):
    g = _toy_graph(seed=16)
    save_graph(g, tmp_path / "toy")
    h = load_graph(tmp_path / "toy")
    assert h.num_nodes == g.num_nodes and h.num_classes == g.num_classes
    assert np.array_equal(h.edges, g.edges)
    assert np.array_equal(h.labels, g.labels)
    assert np.array_equal(h.features, g.features)  # 17 significant digits


def test_load_two_node_single_edge(tmp_path):
    d = tmp_path / "tiny"
    d.mkdir()
    (d / "edges.tsv").write_text("0\t1\n")
    (d / "features.csv").write_text("2,2\n1.0,0.0\n0.0,1.0\n")
    (d / "labels.csv").write_text("2,2\n0\n1\n")
    g = load_graph(d)
    assert g.num_edges == 1 and np.array_equal(g.edges, [[0, 1]])


def test_load_merges_reversed_duplicates_and_comments(tmp_path):
    d = tmp_path / "dup"
    d.mkdir()
    (d / "edges.tsv").write_text("# comment\n0\t1\n1\t0\n\n")
    (d / "features.csv").write_text("2,1\n0.5\n0.25\n")
    (d / "labels.csv").write_text("2,2\n0\n1\n")
    assert load_graph(d).num_edges == 1


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_graph(tmp_path / "nowhere")


def test_load_malformed_feature_row_names_line(tmp_path):
    d = tmp_path / "bad"
    d.mkdir()
    (d / "edges.tsv").write_text("0\t1\n")
    (d / "features.csv").write_text("2,2\n1.0,2.0\n1.0,oops\n")
    (d / "labels.csv").write_text("2,2\n0\n1\n")
    with pytest.raises(FormatError, match="features.csv:3"):
        load_graph(d)


def test_load_label_out_of_range_names_line(tmp_path):
    d = tmp_path / "bad2"
    d.mkdir()
    (d / "edges.tsv").write_text("0\t1\n")
    (d / "features.csv").write_text("2,1\n0.0\n1.0\n")
    (d / "labels.csv").write_text("2,2\n0\n7\n")
    with pytest.raises(FormatError, match="labels.csv:3"):
        load_graph(d)


def test_load_edge_endpoint_out_of_range(tmp_path):
    d = tmp_path / "bad3"
    d.mkdir()
    (d / "edges.tsv").write_text("0\t9\n")
    (d / "features.csv").write_text("2,1\n0.0\n1.0\n")
    (d / "labels.csv").write_text("2,2\n0\n1\n")
    with pytest.raises(IndexError, match="edges.tsv:1"):
        load_graph(d)
