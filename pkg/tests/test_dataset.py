import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netanomaly import dataset as D
from netanomaly.classifiers import LDA
from netanomaly.evaluation import auc

SCHEMA_TEXT = """\
# name,kind,keep|drop
stime,timestamp,drop
srcip,ip,drop
sport,port,keep
dstip,ip,drop
dsport,port,keep
proto,nominal,keep
sbytes,numeric,keep
label,label,drop
"""
HEADER = "stime,srcip,sport,dstip,dsport,proto,sbytes,label"


def write(tmp_path, text, name="flows.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.fixture
def schema():
    return D.Schema.from_text(SCHEMA_TEXT)


def flows_text(rows):
    return HEADER + "\n" + "\n".join(rows) + "\n"


# --- schema and parsing ------------------------------------------------------


def test_schema_round_trip(schema):
    again = D.Schema.from_text(schema.to_text())
    assert again.columns == schema.columns
    assert [c.name for c in schema.feature_columns] == ["sport", "dsport", "proto", "sbytes"]


def test_schema_rejects_unknown_kind():
    with pytest.raises(D.SchemaError):
        D.Schema.from_text("a,bogus,keep\n")


def test_load_three_rows(tmp_path, schema):
    path = write(tmp_path, flows_text([
        "1.0,10.0.0.1,1234,10.0.0.2,80,tcp,100,0",
        "2.0,10.0.0.1,1235,10.0.0.3,53,udp,60,1",
        "3.5,10.0.0.4,0x50,10.0.0.2,80,tcp,70,0",
    ]))
    recs = D.load_flow_csv(path, schema)
    assert len(recs) == 3
    assert recs[1].src_ip == "10.0.0.1" and recs[1].dst_port == 53.0 and recs[1].label == 1
    assert recs[2].src_port == 80.0  # hex port
    assert recs[2].timestamp == 3.5
    assert recs[0].protocol == "tcp"


def test_out_of_range_port_parses_but_is_cleaned(tmp_path, schema):
    path = write(tmp_path, flows_text([
        "1,a,80,b,80,tcp,100,0",
        "2,a,99999999,b,80,tcp,100,1",
    ]))
    recs = D.load_flow_csv(path, schema)
    assert recs[1].src_port == 99999999.0 and not recs[1].issues
    kept, dropped = D.clean(recs)
    assert [r.src_port for r in kept] == [80.0]
    assert dropped == 1


def test_negative_bytes_and_unparseable_cells_dropped(tmp_path, schema):
    path = write(tmp_path, flows_text([
        "1,a,80,b,80,tcp,-5,0",
        "2,a,80,b,80,tcp,lots,0",
        "3,a,80,b,80,tcp,5,0",
    ]))
    recs = D.load_flow_csv(path, schema)
    assert recs[1].issues  # reported, not silently dropped
    kept, dropped = D.clean(recs)
    assert dropped == 2 and len(kept) == 1


def test_header_mismatch(tmp_path, schema):
    path = write(tmp_path, "stime,srcip,sport,dstip,dsport,proto,label\n1,a,80,b,80,tcp,0\n")
    with pytest.raises(D.SchemaError, match="header mismatch"):
        D.load_flow_csv(path, schema)


def test_wrong_column_count_names_line(tmp_path, schema):
    path = write(tmp_path, flows_text(["1,a,80,b,80,tcp,1,0", "2,a,80,b,80,tcp,0"]))
    with pytest.raises(D.SchemaError, match=r":3: expected 8 columns"):
        D.load_flow_csv(path, schema)


def test_missing_file(tmp_path, schema):
    with pytest.raises(FileNotFoundError):
        D.load_flow_csv(tmp_path / "nope.csv", schema)


def test_write_then_load_flows(tmp_path):
    schema, recs = D.synth_flows(200, seed=1)
    D.write_flow_csv(tmp_path / "f.csv", recs, schema)
    back = D.load_flow_csv(tmp_path / "f.csv", schema)
    assert [r.numeric for r in back] == [r.numeric for r in recs]
    assert [r.nominal for r in back] == [r.nominal for r in recs]
    assert [r.label for r in back] == [r.label for r in recs]


def test_synth_flows_invalid_rows_are_dropped():
    schema, recs = D.synth_flows(1000, n_invalid=7, seed=2)
    kept, dropped = D.clean(recs, [c.name for c in schema.of_kind("port")])
    assert dropped == 7 and len(kept) == 993
    stamps = [r.timestamp for r in recs]
    assert stamps == sorted(stamps)


@given(st.integers(0, 2**31 - 1))
def test_clean_is_idempotent(seed):
    _, recs = D.synth_flows(60, n_invalid=10, seed=seed)
    once, _ = D.clean(recs)
    twice, dropped = D.clean(once)
    assert twice == once and dropped == 0


# --- encoding ----------------------------------------------------------------


def _records(tokens, labels=None):
    labels = labels or [0] * len(tokens)
    return [D.FlowRecord(numeric={"x": float(i)}, nominal={"proto": t}, label=y)
            for i, (t, y) in enumerate(zip(tokens, labels))]


def test_frequency_order():
    ds = D.encode_nominal(_records(["udp", "tcp", "tcp", "udp", "tcp"] * 2))
    assert ds.nominal_maps["proto"] == {"tcp": 0, "udp": 1}
    assert ds.features[:5, ds.feature_names.index("proto")].tolist() == [1, 0, 0, 1, 0]


def test_frequency_ties_lexicographic():
    assert D.build_nominal_map(["b", "a", "c", "c", "b", "a"]) == {"a": 0, "b": 1, "c": 2}


def test_reencode_with_stored_map_is_identical():
    recs = _records(["icmp", "tcp", "udp", "tcp"])
    first = D.encode_nominal(recs)
    again = D.encode_nominal(recs, nominal_maps=first.nominal_maps)
    np.testing.assert_array_equal(first.features, again.features)
    # a different token mix encoded with the stored map keeps old codes
    other = D.encode_nominal(_records(["udp", "udp", "udp", "gre"]), nominal_maps=first.nominal_maps)
    assert other.nominal_maps["proto"]["udp"] == first.nominal_maps["proto"]["udp"]
    assert other.nominal_maps["proto"]["gre"] == 3


def test_encode_with_schema_drops_columns():
    schema, recs = D.synth_flows(300, n_invalid=0, seed=4)
    ds = D.encode_nominal(recs, schema)
    assert "srcip" not in ds.feature_names and "ct_srv_src" not in ds.feature_names
    assert ds.n_samples == 300
    assert set(ds.nominal_maps) == {"proto", "state", "service"}


# --- feature scores ----------------------------------------------------------


def test_chi2_hand_values():
    y = np.array([0, 0, 0, 1, 1, 1])
    X = np.column_stack([
        y.astype(float),                        # equal to the label
        [0, 1, 0, 1, 0, 1],                     # weakly related
        np.full(6, 7.0),                        # constant
        [1, 2, 3, 1, 2, 3],                     # identical per class
    ])
    # label column: observed (0, 3), expected (1.5, 1.5) -> 2 * 1.5**2 / 1.5 = 3
    # alternating column: observed (1, 2), expected (1.5, 1.5) -> 2 * 0.25 / 1.5 = 1/3
    np.testing.assert_allclose(D.chi2_scores(X, y), [3.0, 1 / 3, 0.0, 0.0], atol=1e-12)


def test_chi2_matches_sklearn_on_minmax_scaled_data(rng):
    from sklearn.feature_selection import chi2

    X = rng.gamma(2.0, size=(300, 5))
    y = (X[:, 0] + rng.normal(size=300) > 2).astype(int)
    Xs = (X - X.min(0)) / (X.max(0) - X.min(0))
    np.testing.assert_allclose(D.chi2_scores(X, y), chi2(Xs, y)[0], rtol=1e-10)


def test_mutual_info_of_label_is_ln2():
    y = np.tile([0, 1], 5000)
    assert D.mutual_info_scores(y[:, None].astype(float), y)[0] == pytest.approx(math.log(2), abs=1e-12)


def test_mutual_info_independent_and_constant(rng):
    y = rng.integers(0, 2, 10_000)
    X = np.column_stack([rng.random(10_000), np.full(10_000, 3.0)])
    mi = D.mutual_info_scores(X, y)
    assert mi[0] < 0.02
    assert mi[1] == 0.0


def test_discrete_mutual_info_matches_sklearn(rng):
    from sklearn.metrics import mutual_info_score

    a = rng.integers(0, 5, 500)
    b = (a + rng.integers(0, 2, 500)) % 3
    assert D.discrete_mutual_info(a, b) == pytest.approx(mutual_info_score(a, b), abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_scores_invariant_to_row_permutation(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(80, 3))
    X[:, 2] = np.round(X[:, 2])
    y = r.integers(0, 2, 80)
    y[:2] = [0, 1]
    p = r.permutation(80)
    np.testing.assert_allclose(D.chi2_scores(X[p], y[p]), D.chi2_scores(X, y), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(D.mutual_info_scores(X[p], y[p]), D.mutual_info_scores(X, y), rtol=1e-12, atol=1e-15)


def test_correlation_filter_examples(rng):
    a = rng.normal(size=500)
    b = rng.normal(size=500)
    assert D.correlation_filter(np.column_stack([a, 2 * a])) == [0]
    assert D.correlation_filter(np.column_stack([a, b])) == [0, 1]
    assert D.correlation_filter(np.column_stack([a, 2 * a, -a]), threshold=1.01) == [0, 1, 2]
    # negative correlation counts through |r|
    assert D.correlation_filter(np.column_stack([a, -a + 1e-3 * b])) == [0]
    # constant columns correlate 0 with everything
    assert D.correlation_filter(np.column_stack([np.ones(500), a])) == [0, 1]


@given(st.integers(0, 2**31 - 1), st.floats(0.1, 0.95))
def test_correlation_filter_leaves_no_correlated_pair(seed, thr):
    r = np.random.default_rng(seed)
    base = r.normal(size=(60, 3))
    X = np.column_stack([base, base @ r.normal(size=(3, 4)) + 0.3 * r.normal(size=(60, 4))])
    kept = D.correlation_filter(X, thr)
    if len(kept) > 1:
        C = np.corrcoef(X[:, kept], rowvar=False)
        np.fill_diagonal(C, 0)
        assert np.abs(C).max() <= thr + 1e-12


def test_select_features_identity(small_synth):
    out, report = D.select_features(small_synth, small_synth.n_features, 1.01)
    np.testing.assert_array_equal(out.features, small_synth.features)
    assert out.feature_names == small_synth.feature_names
    assert report["n_after"] == report["n_before"]


def test_select_features_removes_duplicate(small_synth):
    X = np.column_stack([small_synth.features, small_synth.features[:, 1]])
    ds = D.Dataset(X, small_synth.labels, small_synth.feature_names + ["dup"])
    out, report = D.select_features(ds, ds.n_features, 0.85)
    assert "dup" not in out.feature_names
    assert {"dropped": "dup", "kept": "f1", "r": pytest.approx(1.0)} in report["correlation_drops"]


def test_select_features_top_k_bounds(small_synth):
    with pytest.raises(ValueError):
        D.select_features(small_synth, small_synth.n_features + 1)


def test_encode_then_identity_selection_preserves_rows():
    schema, recs = D.synth_flows(400, seed=9)
    kept, _ = D.clean(recs)
    ds = D.encode_nominal(kept, schema)
    out, _ = D.select_features(ds, ds.n_features, 1.01)
    assert out.n_samples == len(kept)


# --- standardize and split ---------------------------------------------------


def test_standardize_contract(rng):
    X = np.column_stack([rng.normal(10, 2, 200), np.full(200, 4.0), rng.exponential(3, 200)])
    train = D.Dataset(X, rng.integers(0, 2, 200), ["a", "b", "c"])
    test = D.Dataset(np.array([[14.0, 9.0, 1.0]]), [0], ["a", "b", "c"])
    tr, (te,), stats = D.standardize(train, [test])
    live = ~stats.constant_mask
    np.testing.assert_allclose(tr.features[:, live].mean(0), 0, atol=1e-9)
    np.testing.assert_allclose(tr.features[:, live].std(0), 1, atol=1e-9)
    assert stats.constant_mask.tolist() == [False, True, False]
    np.testing.assert_array_equal(tr.features[:, 1], X[:, 1])
    assert te.features[0, 1] == 9.0
    assert te.features[0, 0] == pytest.approx((14.0 - X[:, 0].mean()) / X[:, 0].std())
    np.testing.assert_allclose(stats.inverse_transform(tr.features), X, rtol=1e-9)


def test_standardize_analytic_value():
    train = D.Dataset(np.array([[8.0], [12.0]]), [0, 1], ["a"])  # mean 10, population std 2
    test = D.Dataset(np.array([[14.0]]), [0], ["a"])
    _, (te,), _ = D.standardize(train, [test])
    assert te.features[0, 0] == 2.0


def test_standardize_name_mismatch():
    a = D.Dataset(np.zeros((2, 1)), [0, 1], ["a"])
    b = D.Dataset(np.zeros((2, 1)), [0, 1], ["b"])
    with pytest.raises(ValueError):
        D.standardize(a, [b])


@given(st.integers(0, 2**31 - 1))
def test_standardize_round_trip(seed):
    r = np.random.default_rng(seed)
    X = r.normal(r.uniform(-100, 100, 4), r.uniform(0.01, 50, 4), size=(30, 4))
    stats = D.fit_stats(X)
    np.testing.assert_allclose(stats.inverse_transform(stats.transform(X)), X, rtol=1e-9, atol=1e-12)


def test_split_sizes_and_determinism(rng):
    ds = D.Dataset(rng.normal(size=(100, 2)), np.r_[np.zeros(50), np.ones(50)], ["a", "b"])
    tr, te = D.train_test_split(ds, 0.25, seed=7, stratified=False)
    assert (tr.n_samples, te.n_samples) == (75, 25)
    rows = {tuple(r) for r in tr.features} | {tuple(r) for r in te.features}
    assert len(rows) == 100
    tr2, te2 = D.train_test_split(ds, 0.25, seed=7, stratified=False)
    np.testing.assert_array_equal(te.features, te2.features)


def test_stratified_split_preserves_mix(rng):
    y = np.r_[np.zeros(900), np.ones(100)]
    ds = D.Dataset(rng.normal(size=(1000, 1)), y, ["a"])
    _, te = D.train_test_split(ds, 0.2, seed=1)
    assert abs(int((te.labels == 0).sum()) - 180) <= 1
    assert abs(int((te.labels == 1).sum()) - 20) <= 1


def test_stratified_split_needs_both_classes():
    ds = D.Dataset(np.zeros((10, 1)), np.zeros(10), ["a"])
    with pytest.raises(ValueError):
        D.train_test_split(ds, 0.2)


def test_split_fraction_bounds(small_synth):
    for f in (0.0, 1.0):
        with pytest.raises(ValueError):
            D.train_test_split(small_synth, f)


def test_dataset_invariants():
    with pytest.raises(ValueError):
        D.Dataset(np.zeros((3, 2)), [0, 1], ["a", "b"])
    with pytest.raises(ValueError):
        D.Dataset(np.zeros((2, 2)), [0, 1], ["a", "a"])
    with pytest.raises(ValueError):
        D.Dataset(np.zeros((2, 1)), [0, 1], ["a"], {"a": {"x": 0, "y": 0}})


def test_save_load_round_trip(tmp_path, small_synth):
    csv_path, sidecar = D.save_dataset(small_synth, tmp_path / "d.csv")
    assert sidecar.name == "d.csv.json"
    back = D.load_dataset(csv_path)
    np.testing.assert_array_equal(back.features, small_synth.features)
    np.testing.assert_array_equal(back.labels, small_synth.labels)
    assert back.feature_names == small_synth.feature_names
    assert back.nominal_maps == small_synth.nominal_maps


# --- synthetic data ----------------------------------------------------------


def test_synth_small():
    ds = D.synth_generate(5, 5, m=3, seed=0)
    assert ds.n_samples == 10 and ds.labels.sum() == 5
    assert ds.feature_names == ["f0", "f1", "f2", "proto"]


def _holdout_auc(ds):
    tr, te = D.train_test_split(ds, 0.5, seed=0)
    model = LDA().fit(tr.features, tr.labels)
    return auc(te.labels, model.predict_proba(te.features)[:, 1])


def test_synth_separation_zero_is_indistinguishable():
    ds = D.synth_generate(5000, 5000, m=5, separation=0.0, seed=11)
    assert abs(_holdout_auc(ds) - 0.5) <= 0.03


def test_synth_separation_six_is_linearly_separable():
    ds = D.synth_generate(5000, 5000, m=5, separation=6.0, seed=11)
    assert _holdout_auc(ds) > 0.99


def test_synth_is_deterministic():
    a = D.synth_generate(50, 20, seed=5)
    b = D.synth_generate(50, 20, seed=5)
    np.testing.assert_array_equal(a.features, b.features)
