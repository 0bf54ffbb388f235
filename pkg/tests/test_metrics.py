import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.cluster.hierarchy import linkage

from aeronet.errors import (
    DegenerateNull,
    IncompleteVectors,
    InsufficientDegrees,
    NoEdges,
    NoTriplets,
    TooFewEdges,
    TooFewNodes,
    ZeroVariance,
)
from aeronet.geometry import Partition, Region
from aeronet.metrics import (
    IndexVector,
    bearing_histogram,
    degree_correlation,
    density,
    distance_by_category,
    distance_matrix,
    edge_quantile_categories,
    fit_power_law,
    five_number_summary,
    hclust_complete,
    index_vector,
    read_indices,
    scale_free_alpha,
    shortest_paths,
    small_worldness,
    transitivity,
    write_indices,
)
from aeronet.network import NetworkSequence, WindowedAdjacency
from oracles import brute_complete_linkage, brute_shortest_paths, brute_transitivity, haversine

TRIANGLE = np.ones((3, 3)) - np.eye(3)


def random_weights(rng, n, p=0.5, values=None):
    m = np.where(rng.random((n, n)) < p, rng.uniform(0.1, 5.0, (n, n)) if values is None
                 else rng.choice(values, (n, n)), 0.0)
    np.fill_diagonal(m, 0.0)
    return m


# -- density and shortest paths ---------------------------------------------------

def test_density_examples():
    assert density(TRIANGLE) == 1.0
    assert density(np.zeros((4, 4))) == 0.0
    m = np.zeros((3, 3))
    m[0, 1] = 0.6
    assert density(m) == pytest.approx(0.1, rel=1e-15)
    with pytest.raises(TooFewNodes):
        density(np.zeros((1, 1)))


def test_shortest_path_examples():
    sp = shortest_paths([[0, 2.0], [0, 0]])
    assert (sp.mean, sp.diameter, sp.sd, sp.unreachable) == (0.5, 0.5, 0.0, 1)
    cycle = np.array([[0, 1.0, 0], [0, 0, 1.0], [1.0, 0, 0]])
    for mode in ("reciprocal", "direct"):
        d = distance_matrix(cycle, mode)
        assert set(d[~np.eye(3, dtype=bool)].tolist()) == {1.0, 2.0}
        assert shortest_paths(cycle, mode).diameter == 2.0
    with pytest.raises(NoEdges):
        shortest_paths(np.zeros((3, 3)))


def test_three_node_fixture_by_hand():
    # a->b 0.5, b->a 0.5, b->c 0.25, c->a 1.0 (transport direction)
    m = np.array([[0, 0.5, 0], [0.5, 0, 0.25], [1.0, 0, 0]])
    sp = shortest_paths(m)
    assert sp.mean == pytest.approx(3.0)
    assert sp.sd == pytest.approx(math.sqrt(8 / 3))
    assert sp.diameter == pytest.approx(6.0)
    assert sp.unreachable == 0
    assert density(m) == pytest.approx(0.375)
    assert transitivity(m) == pytest.approx(1.0)
    assert degree_correlation(m) == pytest.approx(-5 / math.sqrt(28))


def test_shortest_paths_match_enumeration(rng):
    for _ in range(300):
        n = int(rng.integers(2, 6))
        m = random_weights(rng, n, rng.uniform(0.2, 0.9), values=[0.5, 1.0, 2.0])
        if not (m > 0).any():
            continue
        for mode in ("reciprocal", "direct"):
            ref = brute_shortest_paths(m.tolist(), mode)
            d = distance_matrix(m, mode)
            for i in range(n):
                for j in range(n):
                    if i != j:
                        assert d[i, j] == pytest.approx(ref.get((i, j), math.inf), rel=1e-12)


# -- transitivity --------------------------------------------------------------------

def test_transitivity_examples():
    assert transitivity(TRIANGLE) == 1.0
    path = np.zeros((3, 3))
    path[0, 1] = path[1, 2] = 1.0
    assert transitivity(path) == 0.0
    # triangle a,b,c with unit weights plus pendant c-d of weight 2:
    # closed value 3 (one per triangle corner), open value 1.5 + 1.5 at c
    m = np.zeros((4, 4))
    m[0, 1] = m[1, 2] = m[2, 0] = 1.0
    m[2, 3] = 2.0
    assert transitivity(m) == pytest.approx(0.5)
    assert brute_transitivity(m.tolist()) == pytest.approx(0.5)
    single = np.zeros((3, 3))
    single[0, 1] = 1.0
    with pytest.raises(NoTriplets):
        transitivity(single)


def test_transitivity_matches_triplet_enumeration(rng):
    for _ in range(100):
        m = random_weights(rng, 8, rng.uniform(0.1, 0.8))
        ref = brute_transitivity(m.tolist())
        if ref is None:
            with pytest.raises(NoTriplets):
                transitivity(m)
        else:
            assert transitivity(m) == pytest.approx(ref, rel=1e-12)


# -- small-worldness -------------------------------------------------------------------

def _ring(n=20, shortcuts=((0, 10), (5, 15))):
    m = np.zeros((n, n))
    for i in range(n):
        for k in (1, 2):
            m[i, (i + k) % n] = m[(i + k) % n, i] = 1.0
    for a, b in shortcuts:
        m[a, b] = m[b, a] = 1.0
    return m


def test_small_worldness_examples():
    m = _ring()
    assert small_worldness(m, null_graphs=[m]) == pytest.approx(1.0)
    assert small_worldness(m, n_null=20, seed=0) > 1.0
    assert small_worldness(m, seed=3) == small_worldness(m, seed=3)
    with pytest.raises(NoTriplets):
        small_worldness(np.zeros((5, 5)))
    with pytest.raises(DegenerateNull):
        small_worldness(TRIANGLE)


# -- scale-free and degree correlation -------------------------------------------------

def test_power_law_recovery():
    u = np.random.default_rng(11).random(10_000)
    x = (1.0 - u) ** (-1.0 / 1.5)
    fit = fit_power_law(x)
    assert fit.alpha == pytest.approx(2.5, abs=0.1)
    with pytest.raises(InsufficientDegrees):
        scale_free_alpha(np.ones((12, 12)) - np.eye(12))
    with pytest.raises(InsufficientDegrees):
        scale_free_alpha(TRIANGLE)


def test_scale_free_alpha_is_scale_invariant(rng):
    m = random_weights(rng, 50, 0.3) ** 3
    a = scale_free_alpha(m)
    b = scale_free_alpha(7.5 * m)
    assert b.alpha == pytest.approx(a.alpha, rel=1e-9)
    assert b.k_min == pytest.approx(7.5 * a.k_min, rel=1e-12)


def test_degree_correlation_examples():
    sym = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], dtype=float)
    assert degree_correlation(sym) == 1.0
    bip = np.zeros((4, 4))
    bip[0, 2], bip[0, 3], bip[1, 2], bip[1, 3] = 1, 2, 3, 1
    # in = (0, 0, 4, 3), out = (3, 4, 0, 0): r = -12.25 / 12.75
    assert degree_correlation(bip) == pytest.approx(-49 / 51, rel=1e-14)
    flat_in = np.zeros((3, 3))
    flat_in[0, 1] = flat_in[0, 2] = flat_in[1, 0] = 1.0
    with pytest.raises(ZeroVariance):
        degree_correlation(flat_in)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_scaling_invariants(seed, c):
    rng = np.random.default_rng(seed)
    m = random_weights(rng, 6, 0.6)
    assert density(c * m) == pytest.approx(c * density(m), rel=1e-12)
    try:
        t = transitivity(m)
    except NoTriplets:
        t = None
    if t is not None:
        assert transitivity(c * m) == pytest.approx(t, rel=1e-9, abs=1e-12)
    try:
        r = degree_correlation(m)
    except ZeroVariance:
        r = None
    if r is not None:
        assert degree_correlation(c * m) == pytest.approx(r, rel=1e-9, abs=1e-12)
    if (m > 0).any():
        d = distance_matrix(m, "reciprocal")
        assert np.allclose(distance_matrix(c * m, "reciprocal"), d / c, rtol=1e-12)
        d = distance_matrix(m, "direct")
        assert np.allclose(distance_matrix(c * m, "direct"), d * c, rtol=1e-12)


# -- index vectors ----------------------------------------------------------------------

def test_index_vector_complete_triangle():
    iv = index_vector(TRIANGLE, window_id="t")
    assert (iv.dens, iv.trans, iv.sp_mean, iv.sp_sd, iv.diam, iv.dc) == (1.0, 1.0, 1.0, 0.0, 1.0, 1.0)
    assert iv.sw is None and "sw" in iv.errors
    assert iv.sf_alpha is None and "sf_alpha" in iv.errors


def test_index_vector_empty_window():
    iv = index_vector(np.zeros((4, 4)))
    assert iv.dens == 0.0
    assert all(getattr(iv, f) is None for f in ("diam", "trans", "sp_mean", "sp_sd", "sw", "sf_alpha", "dc"))
    assert set(iv.errors) == {"sp", "trans", "sw", "sf_alpha", "dc"}


def test_indices_round_trip(tmp_path):
    vs = [index_vector(_ring(), window_id="01", seed=4), index_vector(np.zeros((4, 4)), window_id="02")]
    p = tmp_path / "i.csv"
    write_indices(vs, p, {"config": "abc"})
    assert p.read_text().splitlines()[1] == (
        "window_id,diam,dens,trans,sp_mean,sp_sd,sw,sf_alpha,dc,cost_mode,null_seed,n_null,unreachable_pairs")
    back = read_indices(p)
    assert [b.values() for b in back] == [v.values() for v in vs]
    assert back[0].null_seed == 4


# -- clustering -----------------------------------------------------------------------

def test_hclust_examples():
    d = hclust_complete([[0.0], [1.0], [10.0]], standardize=False)
    assert d.merges == ((0, 1, 1.0, 2), (3, 2, 10.0, 3))
    d = hclust_complete([[0.0, 0.0], [3.0, 4.0]], standardize=False)
    assert d.merges == ((0, 1, 5.0, 2),)
    d = hclust_complete([[1.0, 2.0], [1.0, 2.0], [5.0, 5.0]], standardize=False)
    assert d.merges[0][2] == 0.0
    with pytest.raises(IncompleteVectors):
        hclust_complete([[1.0]])


def test_hclust_matches_brute_force(rng):
    for _ in range(20):
        x = rng.normal(size=(int(rng.integers(2, 12)), 8))
        d = hclust_complete(x, standardize=False)
        ref = brute_complete_linkage(x)
        for k, (a, b, h, size) in enumerate(d.merges):
            ra, rb, rh = ref[k]
            assert {frozenset(d.members(a)), frozenset(d.members(b))} == {ra, rb}
            assert h == pytest.approx(rh, rel=1e-12)
            assert size == len(ra) + len(rb)
        assert np.all(np.diff(d.heights) >= 0)
        assert np.allclose(d.heights, linkage(x, "complete")[:, 2], rtol=1e-12)


def test_hclust_standardizes_and_handles_absent_fields():
    vs = [IndexVector(f"w{k}", diam=k, dens=2.0 * k, trans=0.5, sp_mean=k ** 2, sp_sd=1.0, sw=None,
                      sf_alpha=2.0 + k, dc=0.1 * k) for k in range(4)]
    with pytest.warns(UserWarning, match="sw"):
        d = hclust_complete(vs)
    assert "sw" not in d.dims and len(d.dims) == 7
    assert d.labels == ("w0", "w1", "w2", "w3")
    with pytest.raises(IncompleteVectors):
        hclust_complete(vs, on_absent="error")
    # z-scoring removes the unit of each dimension
    x = np.array([[0.0, 0.0], [1.0, 100.0], [3.0, 300.0]])
    a = hclust_complete(x, standardize=True)
    b = hclust_complete(x * [1.0, 0.01], standardize=True)
    assert np.allclose(a.heights, b.heights)


def test_dendrogram_outputs():
    d = hclust_complete([[0.0], [1.0], [10.0]], standardize=False, labels=["a", "b", "c"])
    assert d.to_newick() == "((a:1.0,b:1.0):9.0,c:10.0);"
    assert d.cut(2) == {"a": 1, "b": 1, "c": 2}
    assert d.cut(1) == {"a": 1, "b": 1, "c": 1}


# -- edge categories ---------------------------------------------------------------------

def _window(weights, ids=None, wid="whole"):
    weights = np.asarray(weights, dtype=float)
    ids = ids or tuple(f"n{k}" for k in range(len(weights)))
    return WindowedAdjacency(wid, tuple(ids), weights)


def _chain_weights(vals, n):
    m = np.zeros((n, n))
    slots = [(i, j) for i in range(n) for j in range(n) if i != j]
    for (i, j), v in zip(slots, vals):
        m[i, j] = v
    return m


def test_quantile_examples(rng):
    w = _window(_chain_weights(np.arange(1, 11) / 10, 4))
    cats = edge_quantile_categories(w)
    counts = np.bincount(list(cats.categories.values()), minlength=6)[1:]
    assert counts.tolist() == [2, 2, 2, 2, 2]
    with pytest.warns(UserWarning):
        deg = edge_quantile_categories(_window(_chain_weights(np.ones(8), 4)))
    assert deg.degenerate and set(deg.categories.values()) == {1}
    # sd of a sample quantile of 100 uniforms is about 0.04, so a single draw
    # misses 0.05 often: check the mean over replicates
    edges = np.array([edge_quantile_categories(_window(_chain_weights(rng.random(100), 11))).bin_edges
                      for _ in range(200)])
    assert np.allclose(edges.mean(axis=0), [0.2, 0.4, 0.6, 0.8], atol=0.05)
    with pytest.raises(TooFewEdges):
        edge_quantile_categories(_window(_chain_weights([1.0, 2.0], 3)))


def test_quantile_ties_go_to_lower_bin():
    # the 0.2 quantile of (1,1,1,2,3) is 1: every 1 falls in bin 1
    cats = edge_quantile_categories(_window(_chain_weights([1, 1, 1, 2, 3], 3)))
    assert sorted(cats.categories.values()) == [1, 1, 1, 4, 5]


@given(st.lists(st.floats(0.001, 1000.0), min_size=5, max_size=30), st.integers(1, 5))
def test_quantile_partition_property(vals, n_bins):
    seq = NetworkSequence((_window(_chain_weights(vals, 6), wid="a"),), tuple(f"n{k}" for k in range(6)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cats = edge_quantile_categories(seq, n_bins)
    assert len(cats.categories) == len(vals)
    assert all(1 <= c <= cats.n_bins for c in cats.categories.values())
    # ordering of weights is respected
    w = seq["a"]
    pairs = sorted((w.weights[w.node_ids.index(s), w.node_ids.index(d)], c) for (_, s, d), c in cats.categories.items())
    assert [c for _, c in pairs] == sorted(c for _, c in pairs)


def _equator_partition(lons):
    return Partition([Region(f"n{k}", [(x - 0.2, -0.2), (x + 0.2, -0.2), (x + 0.2, 0.2), (x - 0.2, 0.2)])
                      for k, x in enumerate(lons)])


def test_distance_by_category_examples():
    p = _equator_partition([0.0, 1.0])
    w = _window([[0, 1.0], [0, 0]])
    with pytest.warns(UserWarning):
        cats = edge_quantile_categories(w, n_bins=1)
    d = distance_by_category(cats, p)
    assert len(d[1]) == 1
    assert d[1][0] == pytest.approx(haversine(0.0, 0.0, 1.0, 0.0), rel=1e-9)
    p = _equator_partition([0.0, 1.0, 2.0])
    w = _window(_chain_weights([1, 2, 3, 4, 5, 6], 3))
    d = distance_by_category(edge_quantile_categories(w, n_bins=6), p)
    assert all(len(v) == 1 for v in d.values())
    assert five_number_summary([]) is None
    assert five_number_summary([1, 2, 3, 4, 5]) == (1, 2, 3, 4, 5)


def test_empty_category_is_empty_sample():
    p = _equator_partition([0.0, 1.0, 2.0])
    with pytest.warns(UserWarning):
        cats = edge_quantile_categories(_window(_chain_weights(np.ones(6), 3)), n_bins=3)
    d = distance_by_category(cats, p)
    assert len(d[1]) == 6


def test_bearing_examples():
    p = _equator_partition([0.0, 1.0, 2.0, 3.0])
    m = np.zeros((4, 4))
    m[0, 1], m[1, 2], m[2, 3], m[0, 2], m[1, 3] = 1, 2, 3, 4, 5
    w = _window(m)
    cats = edge_quantile_categories(w, n_bins=1)
    h = bearing_histogram(cats, p)
    assert h[1][4] == 5 and h[1].sum() == 5  # sector [90, 112.5)
    rev = edge_quantile_categories(w.as_direction("sampling"), n_bins=1)
    hr = bearing_histogram(rev, p)
    assert hr[1][12] == 5  # sector [270, 292.5)


def test_reversal_rotates_histogram_by_half_turn(rng):
    lon = rng.uniform(4, 8, 10)
    lat = rng.uniform(42, 45, 10)
    p = Partition([Region(f"n{k}", [(x - 0.05, y - 0.05), (x + 0.05, y - 0.05), (x + 0.05, y + 0.05),
                                     (x - 0.05, y + 0.05)]) for k, (x, y) in enumerate(zip(lon, lat))])
    w = _window(random_weights(rng, 10, 0.5))
    h = bearing_histogram(edge_quantile_categories(w, n_bins=1), p)[1]
    hr = bearing_histogram(edge_quantile_categories(w.as_direction("sampling"), n_bins=1), p)[1]
    # each reversed bearing lands within one sector of the half-turn image
    rolled = np.roll(h, 8)
    assert h.sum() == hr.sum()
    assert np.abs(np.cumsum(rolled - hr)).max() <= max(1, int(0.1 * h.sum()))
