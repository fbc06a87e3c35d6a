import numpy as np
import pytest

from commrec.measurements import (
    MeasurementBlock,
    ObservationMask,
    read_mask,
    read_measurements,
    write_mask,
    write_measurements,
)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    blk = MeasurementBlock(["a", "b"], rng.normal(size=(5, 2)), [f"t{i}" for i in range(5)])
    write_measurements(tmp_path / "m.csv", blk, fmt="%.17g")
    back = read_measurements(tmp_path / "m.csv")
    assert back.sensors == ["a", "b"]
    assert back.timestamps == blk.timestamps
    np.testing.assert_array_equal(back.values, blk.values)
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "timestamp,a,b"


def test_blank_cells_read_as_missing(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("timestamp,a,b\n0,1.0,\n1,2.0,3.0\n")
    blk = read_measurements(p)
    assert np.isnan(blk.values[0, 1])


def test_header_must_start_with_timestamp(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("time,a\n0,1\n")
    with pytest.raises(ValueError):
        read_measurements(p)


def test_mask_round_trip(tmp_path):
    m = ObservationMask(["a", "b"], np.array([[True, False], [False, True]]))
    write_mask(tmp_path / "k.csv", m, ["t0", "t1"])
    assert (tmp_path / "k.csv").read_text().splitlines()[1] == "t0,1,0"
    back = read_mask(tmp_path / "k.csv")
    np.testing.assert_array_equal(back.delivered, m.delivered)


def test_duplicate_sensor_rejected():
    with pytest.raises(ValueError):
        MeasurementBlock(["a", "a"], np.zeros((2, 2)))


def test_select_reorders():
    blk = MeasurementBlock(["a", "b", "c"], np.arange(6.0).reshape(2, 3))
    sub = blk.select(["c", "a"])
    np.testing.assert_array_equal(sub.values, [[2, 0], [5, 3]])
    np.testing.assert_array_equal(blk.column("b"), [1, 4])
