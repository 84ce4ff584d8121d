"""Dataset loading, synthesis, degree fitting, neighborhood queries."""

import numpy as np
import pytest

from stegosim.errors import FitError, ParseError, ValidationError
from stegosim.graph import (
    SocialDataset,
    UploadModelParams,
    component_sizes,
    fit_power_law,
    fit_power_law_degrees,
    generate_scale_free,
    load_dataset,
    neighbors_within,
    write_dataset,
)


def _write(tmp_path, edges_text, uploads_text):
    e = tmp_path / "edges.txt"
    u = tmp_path / "uploads.csv"
    e.write_text(edges_text)
    u.write_text(uploads_text)
    return e, u


def test_load_smallest_wellformed(tmp_path):
    e, u = _write(tmp_path, "0 1\n1 2\n", "node,m1\n0,5\n1,0\n2,3\n")
    ds = load_dataset(e, u)
    assert ds.node_count == 3
    assert ds.edges == ((0, 1), (1, 2))
    assert ds.months == 1
    assert ds.uploads[:, 0].tolist() == [5, 0, 3]


def test_load_self_loop_rejected(tmp_path):
    e, u = _write(tmp_path, "3 3\n", "node,m1\n3,1\n")
    with pytest.raises(ValidationError):
        load_dataset(e, u)


def test_load_duplicate_edge_rejected():
    with pytest.raises(ValidationError):
        SocialDataset(node_count=3, edges=((0, 1), (1, 0)),
                      uploads=np.zeros((3, 1)), months=1)


def test_load_negative_upload_rejected(tmp_path):
    e, u = _write(tmp_path, "0 1\n", "node,m1\n0,-2\n1,1\n")
    with pytest.raises(ValidationError):
        load_dataset(e, u)


def test_load_malformed_line_reports_lineno(tmp_path):
    e, u = _write(tmp_path, "0 1\nbogus line here\n", "node,m1\n0,1\n1,1\n")
    with pytest.raises(ParseError) as err:
        load_dataset(e, u)
    assert err.value.line == 2


def test_load_isolated_upload_only_nodes(tmp_path):
    e, u = _write(tmp_path, "0 1\n", "node,m1,m2\n0,1,1\n1,0,0\n5,2,2\n")
    ds = load_dataset(e, u)
    assert ds.node_count == 3  # node 5 densified to id 2, isolated
    assert ds.degrees().tolist() == [1, 1, 0]
    assert ds.uploads[2].tolist() == [2, 2]


def test_comments_and_blank_lines(tmp_path):
    e, u = _write(tmp_path, "# graph\n0 1\n\n1 2  # inline\n",
                  "node,m1\n0,1\n1,1\n2,1\n")
    assert load_dataset(e, u).edges == ((0, 1), (1, 2))


def test_round_trip_generated_dataset(tmp_path):
    ds = generate_scale_free(200, 2.3, months=6, rng_seed=5)
    write_dataset(ds, tmp_path / "e.txt", tmp_path / "u.csv")
    back = load_dataset(tmp_path / "e.txt", tmp_path / "u.csv")
    assert back.node_count == ds.node_count
    assert back.edges == ds.edges
    assert back.months == ds.months
    assert np.array_equal(back.uploads, ds.uploads)


def test_generator_deterministic():
    a = generate_scale_free(150, 2.5, months=4, rng_seed=9)
    b = generate_scale_free(150, 2.5, months=4, rng_seed=9)
    assert a.edges == b.edges
    assert np.array_equal(a.uploads, b.uploads)
    c = generate_scale_free(150, 2.5, months=4, rng_seed=10)
    assert a.edges != c.edges or not np.array_equal(a.uploads, c.uploads)


def test_generator_small_n_valid():
    ds = generate_scale_free(10, 2.3, months=2, rng_seed=0)
    assert ds.node_count == 10
    for u, v in ds.edges:
        assert u != v


def test_generator_param_validation():
    with pytest.raises(ValidationError):
        generate_scale_free(9, 2.3, months=1, rng_seed=0)
    with pytest.raises(ValidationError):
        generate_scale_free(100, 1.5, months=1, rng_seed=0)


def test_generator_never_globally_silent():
    ds = generate_scale_free(50, 2.3, months=24, rng_seed=3,
                             upload_model=UploadModelParams(base_rate=1.0,
                                                            churn_prob=0.3))
    assert np.all(ds.uploads.sum(axis=0) > 0)


def test_fit_recovers_synthetic_exponent():
    # Degree multiset with counts n(d) proportional to d^-2.3; the CCDF
    # slope fit must recover the construction exponent.
    dmax = 300
    counts = np.rint(2e5 * np.arange(1, dmax + 1, dtype=float) ** -2.3)
    degrees = np.repeat(np.arange(1, dmax + 1), counts.astype(int))
    fit = fit_power_law_degrees(degrees)
    assert 2.2 <= fit.gamma <= 2.4
    assert fit.r_squared > 0.99


def test_fit_star_graph_degenerate():
    degrees = np.array([50] + [1] * 50)
    with pytest.raises(FitError):
        fit_power_law_degrees(degrees)


def test_generator_fitter_consistency_loop():
    ds = generate_scale_free(7200, 2.3, months=1, rng_seed=11)
    fit = fit_power_law(ds)
    assert abs(fit.gamma - 2.3) <= 0.3


def test_neighbors_within_examples():
    path = SocialDataset(node_count=4, edges=((0, 1), (1, 2), (2, 3)),
                         uploads=np.zeros((4, 1)), months=1)
    assert neighbors_within(path, 0, 0) == set()
    assert neighbors_within(path, 0, 2) == {1, 2}
    assert neighbors_within(path, 0, 9) == {1, 2, 3}
    with pytest.raises(ValidationError):
        neighbors_within(path, 4, 1)


def test_neighbors_within_monotone_in_hops():
    ds = generate_scale_free(60, 2.3, months=1, rng_seed=2, edges_per_node=2)
    for node in (0, 10, 59):
        for h in range(4):
            assert neighbors_within(ds, node, h) <= neighbors_within(ds, node, h + 1)


def test_neighbors_within_matches_floyd_warshall():
    from scipy.sparse import lil_matrix
    from scipy.sparse.csgraph import floyd_warshall

    rng = np.random.default_rng(13)
    n = 50
    edges = set()
    while len(edges) < 80:
        u, v = map(int, rng.integers(0, n, 2))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    ds = SocialDataset(node_count=n, edges=tuple(edges),
                       uploads=np.zeros((n, 1)), months=1)
    adj = lil_matrix((n, n))
    for u, v in edges:
        adj[u, v] = 1
        adj[v, u] = 1
    dist = floyd_warshall(adj.tocsr(), unweighted=True, directed=False)
    for node in range(0, n, 7):
        expected = {v for v in range(n) if v != node and dist[node, v] <= 3}
        assert neighbors_within(ds, node, 3) == expected


def test_component_sizes():
    ds = SocialDataset(node_count=5, edges=((0, 1), (1, 2)),
                       uploads=np.zeros((5, 1)), months=1)
    assert component_sizes(ds) == [3, 1, 1]
