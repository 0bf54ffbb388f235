import numpy as np
import pytest
from hypothesis import given, strategies as st

from aeronet.connectivity import EstimatorConfig, PointwiseMeasure, estimate_integrated
from aeronet.errors import FormatVersionMismatch, UnresolvedReceptor, ValidationError
from aeronet.flowsim import Uniform, generate_corpus
from aeronet.geometry import Partition, Region, grid_partition
from aeronet.network import (
    NetworkSequence,
    WindowedAdjacency,
    build_networks,
    build_window,
    read_edges,
    resolve_receptor,
    write_dense,
    write_edges,
)
from aeronet.trajectory import TrajectoryCorpus, TrajectorySegment

DAY = 86400.0
T0 = 1293840000.0  # 2011-01-01


def _box(rid, x0):
    return Region(rid, [(x0, 0), (x0 + 1, 0), (x0 + 1, 1), (x0, 1)])


LINE = Partition([_box("W", 0.0), _box("M", 2.0), _box("E", 4.0)])


def _eastward_corpus(n_days=3):
    # air moves east at 1e-4 deg/s; 48 h backward paths reach ~17 degrees upwind
    pts = [[0.5, 0.5], [2.5, 0.5], [4.5, 0.5]]
    return generate_corpus(Uniform(1e-4, 0.0), pts, T0 + DAY * np.arange(n_days), -2 * DAY, 600.0, 3600.0,
                           receptors=["W", "M", "E"])


def _walk_visits(seg, partition):
    """Brute-force: regions holding any densely resampled point of the path."""
    t = np.linspace(seg.times[0], seg.times[-1], 20001)
    lon = np.interp(t, seg.times, seg.lon)
    lat = np.interp(t, seg.times, seg.lat)
    out = set()
    for r in partition.regions:
        x0, y0, x1, y1 = r.bbox
        if np.any((lon >= x0) & (lon <= x1) & (lat >= y0) & (lat <= y1)):
            out.add(r.id)
    return out


def test_collinear_regions_in_uniform_wind():
    corpus = _eastward_corpus()
    seq = build_networks(corpus, LINE, PointwiseMeasure())
    w = seq["whole"]
    assert w.direction == "transport"
    edges = {(a, b) for a, b, x in w.edges() if x > 0}
    assert edges == {("W", "M"), ("W", "E"), ("M", "E")}
    # brute-force walk agrees with every estimated weight
    idx = {r: k for k, r in enumerate(LINE.ids)}
    for s in corpus:
        visits = _walk_visits(s, LINE) - {s.receptor_region}
        for v in visits:
            assert w.weights[idx[v], idx[s.receptor_region]] == 1.0
    samp = seq.as_direction("sampling")["whole"]
    assert np.array_equal(samp.weights, w.weights.T)


def test_single_region_has_no_edges(tmp_path):
    p = Partition([_box("only", 0.0)])
    corpus = TrajectoryCorpus.from_segments([_seg("a", [0.5, 0.9], [0.5, 0.5])])
    seq = build_networks(corpus, p, PointwiseMeasure())
    assert seq["whole"].edges() == []
    path = tmp_path / "e.csv"
    write_edges(seq, path)
    body = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert body == ["window_id,src,dst,weight"]
    assert read_edges(path).equals(seq)


def _seg(tid, lon, lat, receptor=None, t_end=T0):
    n = len(lon)
    t = t_end - 3600.0 * np.arange(n)[::-1]
    return TrajectorySegment(tid, t_end, t, lon, lat, np.full(n, 100.0), receptor_region=receptor)


def test_identical_windows_give_identical_matrices():
    a = _eastward_corpus(1)
    b = [TrajectorySegment(s.traj_id + "-y2", s.sample_time + 365 * DAY, s.times + 365 * DAY, s.lon, s.lat, s.alt,
                           s.receptor_region) for s in a]
    corpus = TrajectoryCorpus.from_segments(list(a) + b)
    seq = build_networks(corpus, LINE, PointwiseMeasure(), context="yearly")
    assert [w.window_id for w in seq] == ["2011", "2012"]
    assert np.array_equal(seq["2011"].weights, seq["2012"].weights)
    assert np.array_equal(seq["2011"].present, seq["2012"].present)


def _random_corpus(rng, n):
    segs = []
    for k in range(n):
        x = rng.uniform(0.1, 4.9, 6)
        y = rng.uniform(-0.5, 1.5, 6)
        rec = str(rng.choice(["W", "M", "E"]))
        segs.append(_seg(f"s{k:03d}", x, y, receptor=rec, t_end=T0 + DAY * k))
    return segs


def test_order_and_thread_invariance(rng):
    segs = _random_corpus(rng, 120)
    m = PointwiseMeasure("duration")
    ref = build_networks(TrajectoryCorpus.from_segments(segs), LINE, m)
    shuffled = [segs[k] for k in rng.permutation(len(segs))]
    other = build_networks(TrajectoryCorpus.from_segments(shuffled), LINE, m, threads=4)
    assert ref.equals(other)


def test_matches_pairwise_estimator(rng):
    segs = _random_corpus(rng, 60)
    m = PointwiseMeasure("length")
    cfg = EstimatorConfig(b_area="km2")
    w = build_networks(TrajectoryCorpus.from_segments(segs), LINE, m, cfg, direction="sampling")["whole"]
    for i, B in enumerate(LINE.regions):
        for j, A in enumerate(LINE.regions):
            if i != j:
                assert w.weights[i, j] == pytest.approx(estimate_integrated(segs, B, A, m, cfg), rel=1e-12)


def test_halves_average_to_full_window(rng):
    segs = _random_corpus(rng, 90)
    # equal receptor counts in both halves
    by_rec = {}
    for s in segs:
        by_rec.setdefault(s.receptor_region, []).append(s)
    first, second = [], []
    for group in by_rec.values():
        group = group[: len(group) // 2 * 2]
        first += group[::2]
        second += group[1::2]
    m = PointwiseMeasure("duration")
    rec = lambda ss: [LINE.index_of(s.receptor_region) for s in ss]
    full = build_window(first + second, rec(first + second), LINE, m, EstimatorConfig(), "w")
    h1 = build_window(first, rec(first), LINE, m, EstimatorConfig(), "w")
    h2 = build_window(second, rec(second), LINE, m, EstimatorConfig(), "w")
    assert np.allclose(full.weights, 0.5 * (h1.weights + h2.weights), rtol=1e-12, atol=0)


def test_unresolved_receptor():
    with pytest.raises(UnresolvedReceptor) as ei:
        build_networks(TrajectoryCorpus.from_segments([_seg("lost", [0.5, 10.0], [0.5, 10.0])]), LINE,
                       PointwiseMeasure())
    assert ei.value.traj_id == "lost"
    with pytest.raises(UnresolvedReceptor):
        resolve_receptor(_seg("x", [0.5, 0.5], [0.5, 0.5], receptor="nowhere"), LINE)


def test_shared_boundary_resolves_to_lowest_id(caplog):
    grid = grid_partition(0.0, 0.0, 0.2, 0.1, 10.0)
    assert {"r0c0", "r0c1"} <= set(grid.ids)
    x = grid["r0c0"].bbox[2]
    seg = _seg("b", [0.05, x], [0.05, 0.05])
    with caplog.at_level("INFO", logger="aeronet.network"):
        assert resolve_receptor(seg, grid) == "r0c0"
    assert "shared boundary" in caplog.text


def test_origin_lookup_without_receptor_field():
    assert resolve_receptor(_seg("o", [0.5, 4.5], [0.5, 0.5]), LINE) == "E"


def test_unsampled_receptor_rows_are_absent():
    segs = [_seg("a", [0.5, 2.5, 4.5], [0.5, 3.0, 0.5], receptor="E")]
    w = build_networks(TrajectoryCorpus.from_segments(segs), LINE, PointwiseMeasure(), direction="sampling")["whole"]
    e = LINE.index_of("E")
    assert w.present[e].tolist() == [True, True, False]
    assert not w.present[LINE.index_of("W")].any()
    assert w.edges() == [("E", "W", 1.0), ("E", "M", 0.0)]


# -- adjacency invariants and I/O -------------------------------------------------

def test_adjacency_validation():
    with pytest.raises(ValidationError):
        WindowedAdjacency("w", ("a", "b"), [[1.0, 0], [0, 0]])
    with pytest.raises(ValidationError):
        WindowedAdjacency("w", ("a", "b"), [[0, -1.0], [0, 0]])
    with pytest.raises(ValidationError):
        WindowedAdjacency("w", ("a", "b"), [[0, np.nan], [0, 0]])
    w = WindowedAdjacency("w", ("a", "b"), [[0, 1.0], [0, 0]])
    with pytest.raises(ValidationError):
        NetworkSequence((w, w), ("a", "b"))


def _random_sequence(rng, n, n_windows=2, density=0.02):
    nodes = tuple(f"n{k:03d}" for k in range(n))
    wins = []
    for k in range(n_windows):
        p = rng.random((n, n)) < density
        np.fill_diagonal(p, False)
        w = np.where(p, rng.random((n, n)) ** 3 * 10.0 ** rng.integers(-8, 4, (n, n)), 0.0)
        p &= rng.random((n, n)) < 0.95  # some zero weights stay present
        p |= w > 0
        wins.append(WindowedAdjacency(f"{k + 1:02d}", nodes, w, p))
    return NetworkSequence(tuple(wins), nodes, measure="contact", meta={"context": "monthly"})


def test_round_trip_604_nodes(tmp_path, rng):
    seq = _random_sequence(rng, 604)
    path = tmp_path / "edges.csv"
    write_edges(seq, path, extra={"context": "monthly"})
    back = read_edges(path)
    assert back.equals(seq)
    assert back.meta["context"] == "monthly"


@given(st.integers(1, 12), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_round_trip_property(tmp_path_factory, n, n_windows, seed):
    seq = _random_sequence(np.random.default_rng(seed), n, n_windows, density=0.5)
    path = tmp_path_factory.mktemp("rt") / "e.csv"
    write_edges(seq, path)
    assert read_edges(path).equals(seq)


def test_corrupted_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("# something else\nwindow_id,src,dst,weight\n")
    with pytest.raises(FormatVersionMismatch):
        read_edges(p)
    p.write_text("# aeronet-edges v2; measure=contact; direction=transport; b_area=unit\nwindow_id,src,dst,weight\n")
    with pytest.raises(FormatVersionMismatch):
        read_edges(p)


def test_dense_export(tmp_path):
    w = WindowedAdjacency("whole", ("a", "b"), [[0, 0.5], [0, 0]], [[False, True], [True, False]])
    paths = write_dense(NetworkSequence((w,), ("a", "b")), tmp_path / "dense")
    assert paths[0].read_text() == "node,a,b\na,,0.5\nb,0.0,\n"
