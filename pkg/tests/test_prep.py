from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from allclear_tsf.data import BinaryLabel, Dataset, FlareClass, TimeSeriesInstance
from allclear_tsf.errors import ConfigError, DataError
from allclear_tsf.prep import (
    FlareEvent,
    RegionSeries,
    SyntheticConfig,
    WindowConfig,
    class_ratio,
    generate_synthetic,
    load_flares,
    load_regions,
    slice_sliding_windows,
    undersample_negatives,
)

T0 = datetime(2012, 3, 6, 0, 0)


def region(hours=36.0, rid="AR1"):
    n = int(hours * 5)
    return RegionSeries(rid, {"R_VALUE": np.arange(n, dtype=float), "USFLUX": np.ones(n)}, T0, 12)


class TestWindows:
    def test_window_count(self):
        # 36 h at 12 min = 180 steps; 60-step windows every 5 steps
        wins = slice_sliding_windows(region(), [])
        expected = [s for s in range(0, 180) if s + 60 <= 180 and s % 5 == 0]
        assert len(wins) == len(expected) == 25
        assert all(w.length == 60 for w in wins)
        assert [w.id for w in wins[:2]] == ["AR1_t0", "AR1_t1"]
        assert wins[3].values["R_VALUE"][0] == 15.0

    def test_all_quiet(self):
        wins = slice_sliding_windows(region(), [])
        assert {w.flare_class for w in wins} == {FlareClass.FQ}

    def test_most_intense_flare_wins(self):
        # window 0 ends at 12:00; horizon (12:00, 36:00]
        flares = [FlareEvent("AR1", T0 + timedelta(hours=20), "C"),
                  FlareEvent("AR1", T0 + timedelta(hours=30), "M")]
        assert slice_sliding_windows(region(), flares)[0].flare_class is FlareClass.M

    def test_horizon_bounds(self):
        end0 = T0 + timedelta(hours=12)
        at_end = [FlareEvent("AR1", end0, "X")]
        assert slice_sliding_windows(region(), at_end)[0].flare_class is FlareClass.FQ
        at_horizon = [FlareEvent("AR1", end0 + timedelta(hours=24), "X")]
        assert slice_sliding_windows(region(), at_horizon)[0].flare_class is FlareClass.X

    @settings(max_examples=40, deadline=None)
    @given(minute=st.integers(0, 36 * 60))
    def test_x_flare_labels_exactly_covering_windows(self, minute):
        peak = T0 + timedelta(minutes=minute)
        wins = slice_sliding_windows(region(), [FlareEvent("AR1", peak, "X")])
        for k, w in enumerate(wins):
            end = T0 + timedelta(minutes=(5 * k + 60) * 12)
            covered = end < peak <= end + timedelta(hours=24)
            assert (w.flare_class is FlareClass.X) == covered

    def test_short_region(self):
        with pytest.raises(DataError):
            slice_sliding_windows(region(hours=11.0), [])

    def test_fractional_step_rejected(self):
        with pytest.raises(ConfigError):
            slice_sliding_windows(region(), [], WindowConfig(step_hours=0.1))

    def test_fq_event_rejected(self):
        with pytest.raises(DataError):
            FlareEvent("AR1", T0, "FQ")

    def test_file_loaders(self, tmp_path):
        (tmp_path / "v.csv").write_text("region_id,step,R_VALUE\n" + "".join(f"7,{s},{s}\n" for s in range(70)))
        (tmp_path / "m.json").write_text('{"region_id": "7", "start_time": "2012-03-06T00:00:00Z"}')
        (tmp_path / "f.csv").write_text("region_id,peak_time,flare_class\n7,2012-03-06T13:00:00Z,M\n")
        (reg,) = load_regions(tmp_path / "v.csv", tmp_path / "m.json")
        wins = slice_sliding_windows(reg, load_flares(tmp_path / "f.csv"))
        assert len(wins) == 3
        assert wins[0].label is BinaryLabel.XM


def toy(n_xm, n_cbn, partition=1, start=0):
    flares = ["M"] * n_xm + ["C"] * n_cbn
    return [TimeSeriesInstance(f"i{start + j}", partition, fc, {"R_VALUE": [float(j)]}) for j, fc in enumerate(flares)]


class TestUndersample:
    def test_example_ratio(self):
        ds = Dataset(("R_VALUE",), toy(10, 500))
        out = undersample_negatives(ds, 6.4, seed=1)
        assert out.class_counts() == {"XM": 10, "CBN": 64}

    def test_never_adds(self):
        ds = Dataset(("R_VALUE",), toy(10, 5))
        out = undersample_negatives(ds, 6.4, seed=1)
        assert len(out) == 15

    def test_per_partition_and_deterministic(self):
        ds = Dataset(("R_VALUE",), toy(4, 100, 1) + toy(2, 100, 2, start=1000))
        a = undersample_negatives(ds, 3.0, seed=9)
        b = undersample_negatives(ds, 3.0, seed=9)
        assert a.ids == b.ids
        assert a.select([1]).class_counts() == {"XM": 4, "CBN": 12}
        assert a.select([2]).class_counts() == {"XM": 2, "CBN": 6}
        assert undersample_negatives(ds, 3.0, seed=10).ids != a.ids

    def test_order_preserved(self):
        ds = Dataset(("R_VALUE",), toy(3, 40))
        out = undersample_negatives(ds, 2.0, seed=0)
        pos = [ds.ids.index(i) for i in out.ids]
        assert pos == sorted(pos)

    @pytest.mark.parametrize("ratio", [0.0, -1.0, float("nan")])
    def test_bad_ratio(self, ratio):
        with pytest.raises(ConfigError):
            undersample_negatives(Dataset(("R_VALUE",), toy(1, 3)), ratio, seed=0)


class TestSynthetic:
    def test_counts_and_partitions(self, separable):
        assert len(separable) == 500
        assert separable.class_counts() == {"XM": 71, "CBN": 429}
        assert list(separable.partitions) == [1, 2, 3, 4, 5]
        assert separable.length == 60
        assert abs(class_ratio(separable) - 429 / 71) < 1e-12

    def test_deterministic(self):
        cfg = SyntheticConfig(n_instances=50, n_positive=10, length=12, seed=4)
        assert generate_synthetic(cfg) == generate_synthetic(cfg)
        assert generate_synthetic(cfg) != generate_synthetic(SyntheticConfig(n_instances=50, n_positive=10, length=12, seed=5))

    def test_positives_shifted(self, separable):
        cube = separable.array()
        late = cube[:, :, -1]
        assert late[separable.is_xm].mean() > 8.0
        assert abs(late[~separable.is_xm].mean()) < 0.5

    def test_zero_separation_is_pure_noise(self):
        ds = generate_synthetic(SyntheticConfig(n_instances=400, n_positive=100, length=20, class_separation=0.0, seed=1))
        cube = ds.array()
        assert abs(cube[ds.is_xm].mean() - cube[~ds.is_xm].mean()) < 0.1

    def test_config_round_trip(self):
        cfg = SyntheticConfig(parameters=("A1",), seed=3)
        assert SyntheticConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ConfigError):
            SyntheticConfig.from_dict({"bogus": 1})
