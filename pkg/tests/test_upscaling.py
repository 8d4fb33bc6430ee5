import numpy as np
import pytest
from scipy import stats

from gknn.upscaling import (
    BAND_SIZE,
    BandIndex,
    MonthlyQueryRecord,
    MonthlyTrainingRecord,
    upscale,
    upscale_bootstrap,
    upscale_knn,
    upscale_modified_bootstrap,
    upscale_nn,
)


def coombes_table():
    # (label, avg_temp, rain_days, rain_depth, yield)
    rows = [
        (1, 25.0, 5.0, 60.0, 4000.0),
        (1, 22.0, 9.0, 110.0, 5200.0),
        (2, 24.0, 4.0, 40.0, 3100.0),
    ]
    return [MonthlyTrainingRecord(r[0], r[1:4], r[4]) for r in rows]


def rain_table(n, seed=0, labels=True):
    rng = np.random.default_rng(seed)
    rain = rng.gamma(2.0, 30.0, n)
    y = 1000 + 30 * rain + rng.normal(0, 50, n).clip(-900, 900)
    return [MonthlyTrainingRecord((i % 12) + 1 if labels else None, (r,), yy) for i, (r, yy) in enumerate(zip(rain, y))]


def test_nn_hand_fixture():
    tr = coombes_table()
    q = [
        MonthlyQueryRecord(1, (24.0, 6.0, 70.0)),   # d = 1+1+10=12 vs 2+3+40=45 -> rec 0
        MonthlyQueryRecord(1, (21.0, 8.0, 100.0)),  # d = 4+3+40=47 vs 1+1+10=12 -> rec 1
        MonthlyQueryRecord(2, (30.0, 9.0, 300.0)),  # only record with label 2
    ]
    assert upscale_nn(q, tr).tolist() == [4000.0, 5200.0, 3100.0]


def test_nn_exact_match_and_tie():
    tr = coombes_table()
    assert upscale_nn([MonthlyQueryRecord(1, (22.0, 9.0, 110.0))], tr).tolist() == [5200.0]
    tie = [MonthlyTrainingRecord(3, (20.0, 5.0, 50.0), 1.0), MonthlyTrainingRecord(3, (20.0, 5.0, 70.0), 2.0)]
    assert upscale_nn([MonthlyQueryRecord(3, (20.0, 5.0, 60.0))], tie).tolist() == [1.0]


def test_nn_weights_and_missing_label():
    tr = coombes_table()
    q = [MonthlyQueryRecord(1, (22.0, 5.0, 60.0))]
    # default weights: d0 = 3, d1 = 4 + 50 = 54
    assert upscale_nn(q, tr).tolist() == [4000.0]
    # rainfall ignored, temperature weighted: d0 = 3, d1 = 0 + 4
    assert upscale_nn(q, tr, weights=(1.0, 1.0, 0.0)).tolist() == [4000.0]
    assert upscale_nn(q, tr, weights=(10.0, 0.0, 0.0)).tolist() == [5200.0]
    with pytest.raises(ValueError, match="month label"):
        upscale_nn([MonthlyQueryRecord(7, (22.0, 5.0, 60.0))], tr)


def test_nn_deterministic_across_runs():
    tr = rain_table(120)
    q = [MonthlyQueryRecord((i % 12) + 1, (40.0 + i,)) for i in range(36)]
    y = upscale("nn", q, tr, runs=3, seed=5)
    assert y[0].tobytes() == y[1].tobytes() == y[2].tobytes()
    assert upscale_nn(q, tr).tobytes() == upscale_nn(q, tr).tobytes()


def test_knn_frequencies_harmonic():
    tr = [MonthlyTrainingRecord(6, (float(r),), float(r)) for r in (10, 12, 15, 40, 80)]
    q = [MonthlyQueryRecord(6, (11.0,))]
    y = upscale("knn", q, tr, k=3, seed=3, runs=10**5)[:, 0]
    # rain 11: distances 1, 1, 4 -> ranks 10, 12 (tie, lower index), 15
    counts = np.array([np.sum(y == v) for v in (10.0, 12.0, 15.0)])
    assert counts.sum() == 10**5
    assert stats.chisquare(counts, np.array([6, 3, 2]) / 11 * 1e5).pvalue > 0.001


def test_knn_k1_deterministic_and_constant_column():
    tr = [MonthlyTrainingRecord(m, (50.0,), float(m)) for m in range(1, 13)]
    q = [MonthlyQueryRecord(m, (50.0,)) for m in (3, 9)]
    a = upscale_knn(q, tr, k=1, seed=1)
    b = upscale_knn(q, tr, k=1, seed=2, run_index=7)
    assert a.tolist() == b.tolist() == [3.0, 9.0]


def test_bootstrap_single_band_is_uniform():
    tr = rain_table(BAND_SIZE, labels=False)
    q = [MonthlyQueryRecord(None, (r,)) for r in (0.0, 55.0, 1e4)]
    y = upscale("bootstrap", q, tr, seed=2, runs=50000)
    yields = sorted(r.yield_l for r in tr)
    for t in range(3):
        counts = np.array([np.sum(y[:, t] == v) for v in yields])
        assert stats.chisquare(counts).pvalue > 0.001


def test_band_construction():
    tr = rain_table(175, seed=4)
    rain = np.array([r.climatic_variables[0] for r in tr])
    bands = BandIndex(rain)
    assert [len(b) for b in bands.members] == [50, 50, 50, 25]
    assert np.array_equal(np.sort(np.concatenate(bands.members)), np.arange(175))
    for lo_band, hi_band in zip(bands.members, bands.members[1:]):
        assert rain[lo_band].max() <= rain[hi_band].min()
    for (lo, hi), mem in zip(bands.ranges, bands.members):
        assert np.all((rain[mem] >= lo) & (rain[mem] < hi))
    assert bands.locate([-5.0, 1e6]).tolist() == [0, 3]
    with pytest.raises(ValueError):
        BandIndex(rain[:49])


def test_bootstrap_band_membership_uniform():
    tr = rain_table(300, seed=6, labels=False)
    rain = np.array([r.climatic_variables[0] for r in tr])
    bands = BandIndex(rain)
    q = float(np.sort(rain)[125])  # inside band 2
    y = upscale("bootstrap", [MonthlyQueryRecord(None, (q,))], tr, seed=8, runs=10**5)[:, 0]
    members = bands.members[bands.locate(q)]
    idx_of = {tr[i].yield_l: i for i in members}
    assert set(y.tolist()) <= set(idx_of)
    counts = np.array([np.sum(y == tr[i].yield_l) for i in members])
    p = 1 / BAND_SIZE
    se = np.sqrt(p * (1 - p) / 1e5)
    assert np.all(np.abs(counts / 1e5 - p) < 4 * se)
    assert stats.chisquare(counts).pvalue > 0.001


def test_bootstrap_clamps_low_query():
    tr = rain_table(200, seed=1, labels=False)
    bands = BandIndex([r.climatic_variables[0] for r in tr])
    first = {tr[i].yield_l for i in bands.members[0]}
    y = upscale("bootstrap", [MonthlyQueryRecord(None, (-1.0,))], tr, seed=0, runs=500)[:, 0]
    assert set(y.tolist()) <= first


def brute_force_50(rain, q):
    return sorted(range(len(rain)), key=lambda i: (abs(rain[i] - q), i))[:50]


def test_modified_bootstrap_is_50_nearest():
    tr = rain_table(400, seed=9)
    rain = [r.climatic_variables[0] for r in tr]
    rng = np.random.default_rng(1)
    from gknn.upscaling import method_plan
    from gknn.core import rank_prefixes

    ts, m, rd, _ = method_plan("modified-bootstrap", tr)
    queries = rng.uniform(min(rain), max(rain), 100)
    pref = rank_prefixes(queries[:, None], ts, m, rd.support_size)
    srt = np.argsort(rain, kind="stable")
    pos = np.empty(len(rain), int)
    pos[srt] = np.arange(len(rain))
    for qv, p in zip(queries, pref):
        assert sorted(p.tolist()) == sorted(brute_force_50(rain, qv))
        # contiguous run of the rainfall-sorted order
        ps = np.sort(pos[p])
        assert ps[-1] - ps[0] == 49


def test_modified_bootstrap_draws_from_set():
    tr = rain_table(120, seed=2)
    rain = [r.climatic_variables[0] for r in tr]
    q = [MonthlyQueryRecord(1, (float(np.median(rain)),))]
    y = upscale("modified-bootstrap", q, tr, seed=4, runs=3000)[:, 0]
    allowed = {tr[i].yield_l for i in brute_force_50(rain, q[0].climatic_variables[0])}
    assert set(y.tolist()) <= allowed
    assert upscale_modified_bootstrap(q, tr, seed=4, run_index=1)[0] == y[0]


def test_n50_methods_share_selection_set():
    tr = rain_table(50, seed=3)
    q = [MonthlyQueryRecord(1, (37.0,))]
    a = set(upscale("bootstrap", q, tr, seed=1, runs=20000)[:, 0].tolist())
    b = set(upscale("modified-bootstrap", q, tr, seed=1, runs=20000)[:, 0].tolist())
    assert a == b == {r.yield_l for r in tr}


def test_boundary_bias_property():
    tr = rain_table(500, seed=12)
    rain = np.array([r.climatic_variables[0] for r in tr])
    bands = BandIndex(rain)
    for edge in bands.edges:
        band = bands.members[bands.locate(edge)]
        band_max = np.max(np.abs(rain[band] - edge))
        mod_max = np.max(np.abs(rain[brute_force_50(rain, edge)] - edge))
        assert mod_max <= band_max


def test_minimum_size_and_schema_errors():
    tr = rain_table(40)
    with pytest.raises(ValueError):
        upscale_bootstrap([MonthlyQueryRecord(1, (3.0,))], tr)
    with pytest.raises(ValueError):
        upscale_modified_bootstrap([MonthlyQueryRecord(1, (3.0,))], tr)
    with pytest.raises(ValueError, match="schema"):
        upscale_knn([MonthlyQueryRecord(1, (3.0, 4.0))], tr, k=2)
    with pytest.raises(ValueError):
        MonthlyQueryRecord(13, (1.0,))


def test_all_methods_emit_training_yields():
    tr = rain_table(150, seed=5)
    pool = {r.yield_l for r in tr}
    q = [MonthlyQueryRecord((i % 12) + 1, (float(10 * i),)) for i in range(30)]
    for method in ("nn", "knn", "bootstrap", "modified-bootstrap"):
        y = upscale(method, q, tr, k=4, seed=11, runs=5)
        assert set(y.ravel().tolist()) <= pool
