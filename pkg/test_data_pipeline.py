import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from data_pipeline import (
    RawSeries, Scaler, SplitSpec, compute_stats, fit_scaler, horizon_metrics, ingest_csv, make_windows,
    masked_metrics, split_windows, summary_row, synth_traffic, zscore_fit_transform, zscore_inverse,
)
from errors import DimensionError, InputError, MetricError


def ramp_series(steps=100, nodes=3, channels=1):
    values = np.arange(steps * nodes * channels, dtype=np.float64).reshape(steps, nodes, channels) + 1.0
    return RawSeries(values, [f"n{i}" for i in range(nodes)], channels=[f"c{i}" for i in range(channels)])


# ----- windows -----

def test_window_count_for_a_full_year_of_five_minute_data():
    windows = make_windows(np.zeros((34272, 1, 1)), p=12, q=12)
    assert len(windows) == 34249


@given(steps=st.integers(2, 60), p=st.integers(1, 12), q=st.integers(1, 12))
def test_window_count_formula(steps, p, q):
    series = np.zeros((steps, 2, 1))
    if steps < p + q:
        with pytest.raises(InputError):
            make_windows(series, p, q)
    else:
        assert len(make_windows(series, p, q)) == steps - p - q + 1


def test_window_contents_and_batching():
    series = np.arange(20, dtype=np.float64).reshape(10, 2, 1)
    windows = make_windows(series, p=3, q=2)
    sample = windows[4]
    np.testing.assert_array_equal(sample.input, series[4:7])
    np.testing.assert_array_equal(sample.target, series[7:9])
    assert sample.start == 4
    x, y = windows.batch([0, 4])
    assert x.shape == (2, 3, 2, 1) and y.shape == (2, 2, 2, 1)
    np.testing.assert_array_equal(x[1], sample.input)
    np.testing.assert_array_equal(y[1], sample.target)
    assert windows[-1].start == len(windows) - 1
    with pytest.raises(IndexError):
        windows[len(windows)]


# ----- splits and scaling -----

def test_split_presets_and_boundaries():
    assert SplitSpec.for_task("speed") == SplitSpec(0.7, 0.1, 0.2)
    assert SplitSpec.for_task("flow") == SplitSpec(0.6, 0.2, 0.2)
    assert SplitSpec(0.7, 0.1, 0.2).boundaries(100) == (70, 80)
    with pytest.raises(InputError):
        SplitSpec.for_task("weather")
    with pytest.raises(InputError):
        SplitSpec(0.7, 0.2, 0.2)
    with pytest.raises(InputError):
        SplitSpec(1.0, 0.0, 0.0)


def test_scaler_fits_training_portion_only():
    rs = ramp_series(steps=100, channels=2)
    split = SplitSpec(0.7, 0.1, 0.2)
    scaler, scaled = zscore_fit_transform(rs, split)
    train = scaled[:70].reshape(-1, 2)
    assert np.all(np.abs(train.mean(axis=0)) <= 1e-9)
    assert np.all(np.abs(train.std(axis=0) - 1.0) <= 1e-9)
    assert np.all(np.abs(zscore_inverse(scaler, scaled) - rs.values) < 1e-9)
    # later values are transformed with the training statistics, not refitted
    assert scaled[99].mean() > 1.0


def test_scaler_rejects_constant_channel():
    values = np.ones((50, 2, 1))
    with pytest.raises(InputError, match="zero variance"):
        fit_scaler(values, SplitSpec(), channels=["speed"])


def test_scaler_dict_round_trip():
    scaler = Scaler(np.array([1.5]), np.array([0.25]))
    restored = Scaler.from_dict(json.loads(json.dumps(scaler.to_dict())))
    np.testing.assert_array_equal(restored.mean, scaler.mean)
    np.testing.assert_array_equal(restored.std, scaler.std)


def test_split_windows_are_chronological():
    rs = ramp_series(steps=100)
    split = SplitSpec(0.7, 0.1, 0.2)
    scaler = fit_scaler(rs.values, split)
    data = split_windows(rs, split, scaler, p=3, q=2)
    assert (data.train.offset, data.val.offset, data.test.offset) == (0, 70, 80)
    assert len(data.train) == 70 - 5 + 1
    assert len(data.val) == 10 - 5 + 1
    # targets stay in original units, inputs are scaled
    np.testing.assert_array_equal(data.test.targets, rs.values[80:])
    np.testing.assert_allclose(data.test.inputs, scaler.transform(rs.values[80:]))
    assert data.get("val") is data.val
    with pytest.raises(InputError):
        data.get("holdout")


def test_split_windows_rejects_short_segment():
    rs = ramp_series(steps=40)
    split = SplitSpec(0.7, 0.1, 0.2)
    with pytest.raises(InputError, match="val split"):
        split_windows(rs, split, fit_scaler(rs.values, split), p=3, q=3)


# ----- metrics -----

def test_masked_metrics_hand_example():
    mae, rmse, mape = masked_metrics(np.array([2.0, 0.0, 4.0]), np.array([1.0, 5.0, 6.0]))
    assert mae == 1.5
    assert rmse == math.sqrt(2.5)
    assert mape == 50.0


def test_perfect_predictions_score_zero(rng):
    y = rng.uniform(1.0, 5.0, size=(4, 3, 2, 1))
    assert masked_metrics(y, y.copy()) == (0.0, 0.0, 0.0)


def test_masked_metrics_errors():
    with pytest.raises(MetricError):
        masked_metrics(np.zeros(4), np.ones(4))
    with pytest.raises(DimensionError):
        masked_metrics(np.ones(3), np.ones(4))


@given(seed=st.integers(0, 2 ** 16), junk=st.floats(-1e6, 1e6))
def test_masked_entries_are_inert(seed, junk):
    r = np.random.default_rng(seed)
    y = r.uniform(1.0, 10.0, size=(5, 4))
    y[r.uniform(size=y.shape) < 0.3] = 0.0
    y[0, 0] = 3.0
    y_hat = r.normal(5.0, 2.0, size=y.shape)
    before = masked_metrics(y, y_hat)
    y_hat[y == 0.0] = junk
    assert masked_metrics(y, y_hat) == before


def test_horizon_table_and_summary(rng):
    y = rng.uniform(1.0, 5.0, size=(6, 12, 3, 1))
    y_hat = y + 0.5
    table = horizon_metrics(y, y_hat)
    assert list(table.index) == [str(h) for h in range(1, 13)] + ["average"]
    assert list(table.columns) == ["mae", "rmse", "mape"]
    assert np.allclose(table["mae"], 0.5)
    row = summary_row(table)
    assert set(row) == {f"{m}@{h}" for m in ("mae", "rmse", "mape") for h in ("3", "6", "12", "avg")}


def test_horizon_average_pools_entries():
    y = np.ones((1, 2, 2, 1))
    y[0, 1, 1, 0] = 0.0
    y_hat = np.zeros_like(y)
    y_hat[0, 0] = 3.0
    table = horizon_metrics(y, y_hat)
    # horizon 1 has two unmasked errors of 2, horizon 2 one error of 1
    assert table.loc["1", "mae"] == 2.0
    assert table.loc["2", "mae"] == 1.0
    assert table.loc["average", "mae"] == pytest.approx(5.0 / 3.0)


# ----- ingestion -----

def test_ingest_single_channel(tmp_path):
    (tmp_path / "speed.csv").write_text("717,718\n60.5,61\n0,59.5\n")
    rs = ingest_csv(tmp_path / "speed.csv")
    assert rs.values.shape == (2, 2, 1)
    assert rs.node_ids == ["717", "718"]
    assert rs.values[1, 0, 0] == 0.0
    stats = compute_stats(rs)
    assert stats.missing_ratio == 0.25
    assert stats.nodes == 2 and stats.steps == 2


def test_ingest_reports_bad_cell_line(tmp_path):
    (tmp_path / "speed.csv").write_text("a,b\n1,2\n3,fast\n")
    with pytest.raises(InputError, match=r"speed.csv:3: non-numeric cell 'fast'"):
        ingest_csv(tmp_path / "speed.csv")


def test_ingest_missing_and_empty_files(tmp_path):
    with pytest.raises(InputError, match="file not found"):
        ingest_csv(tmp_path / "absent.csv")
    (tmp_path / "header.csv").write_text("a,b\n")
    with pytest.raises(InputError, match="no data rows"):
        ingest_csv(tmp_path / "header.csv")


def test_ingest_multichannel_with_metadata(tmp_path):
    (tmp_path / "speed.csv").write_text("a,b\n1,2\n3,4\n")
    (tmp_path / "flow.csv").write_text("a,b\n10,20\n30,40\n")
    meta = {"nodes": ["a", "b"], "interval_minutes": 15, "channels": ["speed", "flow"],
            "files": {"speed": "speed.csv", "flow": "flow.csv"}, "start_slot": 4}
    (tmp_path / "meta.json").write_text(json.dumps(meta))
    rs = ingest_csv(tmp_path / "speed.csv", tmp_path / "meta.json")
    assert rs.values.shape == (2, 2, 2)
    assert rs.values[1, 1].tolist() == [4.0, 40.0]
    assert rs.slots_per_day == 96
    assert rs.start_slot == 4
    assert rs.channel_index("flow") == 1


def test_ingest_rejects_header_mismatch(tmp_path):
    (tmp_path / "speed.csv").write_text("a,c\n1,2\n")
    (tmp_path / "meta.json").write_text(json.dumps({"nodes": ["a", "b"]}))
    with pytest.raises(InputError, match="header"):
        ingest_csv(tmp_path / "speed.csv", tmp_path / "meta.json")


def test_raw_series_validation():
    with pytest.raises(InputError):
        RawSeries(np.full((3, 2, 1), np.nan), ["a", "b"])
    with pytest.raises(InputError):
        RawSeries(np.ones((3, 2, 1)), ["a"])
    with pytest.raises(DimensionError):
        RawSeries(np.ones((3, 2)), ["a", "b"])
    with pytest.raises(InputError):
        ramp_series().channel_index("flow")
    assert RawSeries(np.ones((3, 2, 1)), ["a", "b"], interval_minutes=7).slots_per_day is None


# ----- synthetic data -----

def test_synthetic_data_is_seed_deterministic():
    a = synth_traffic(5, 288, seed=9)
    b = synth_traffic(5, 288, seed=9)
    np.testing.assert_array_equal(a.series.values, b.series.values)
    np.testing.assert_array_equal(a.graph.weights, b.graph.weights)
    assert not np.array_equal(a.series.values, synth_traffic(5, 288, seed=10).series.values)


def test_synthetic_data_shape_and_missing_fraction():
    data = synth_traffic(6, 576, seed=1, missing_fraction=0.2)
    assert data.series.values.shape == (576, 6, 1)
    assert data.graph.n == 6 and not data.graph.directed
    assert abs(np.mean(data.series.values == 0.0) - 0.2) < 0.03
    assert np.all(data.series.values[data.series.values != 0.0] >= 1.0)


def test_synthetic_data_argument_errors():
    with pytest.raises(InputError):
        synth_traffic(1, 288, seed=0)
    with pytest.raises(InputError):
        synth_traffic(3, 100, seed=0)
    with pytest.raises(InputError):
        synth_traffic(3, 288, seed=0, missing_fraction=1.0)


def test_synthetic_series_repeats_daily():
    values = synth_traffic(6, 4 * 288, seed=3).series.values[:, :, 0]
    for node in range(values.shape[1]):
        today, tomorrow = values[:-288, node], values[288:, node]
        assert np.corrcoef(today, tomorrow)[0, 1] > 0.5


def test_synthetic_neighbors_correlate_more_than_distant_pairs():
    data = synth_traffic(20, 2 * 288, seed=0)
    corr = np.corrcoef(data.series.values[:, :, 0].T)
    off_diagonal = ~np.eye(20, dtype=bool)
    linked = (data.graph.weights > 0.0) & off_diagonal
    distant = (data.graph.weights == 0.0) & off_diagonal
    assert linked.any() and distant.any()
    assert corr[linked].mean() > corr[distant].mean()
