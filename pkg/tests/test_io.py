import json

import numpy as np
import pytest

from electrogp import inference, io
from electrogp.exceptions import DataIntegrityError


def test_csv_round_trip(tmp_path, rng):
    a = rng.standard_normal((7, 3)) * 1e5
    io.write_csv(tmp_path / "a.csv", ["p", "q", "r"], a)
    header, b = io.read_csv(tmp_path / "a.csv")
    assert header == ["p", "q", "r"]
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize(
    "text, row, col",
    [
        ("a,b\n1,2\n3,x\n", 3, 2),
        ("a,b\n1,2\n3\n", 3, None),
        ("a,b\n1,\n", 2, 2),
        ("a,b\n1,inf\n", 2, 2),
    ],
)
def test_csv_errors_name_location(tmp_path, text, row, col):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(io.CsvFormatError) as info:
        io.read_csv(p)
    assert info.value.row == row and info.value.column == col
    assert f"row {row}" in str(info.value)


def test_missing_fields_allowed_for_prediction(tmp_path):
    p = tmp_path / "in.csv"
    p.write_text("a,b\n1,\n,2\n")
    _, a = io.read_csv(p, allow_missing=True)
    assert np.isnan(a[0, 1]) and np.isnan(a[1, 0])


def test_empty_file(tmp_path):
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(io.CsvFormatError):
        io.read_csv(tmp_path / "e.csv")


def test_model_round_trip_is_exact(tmp_path, small_model):
    io.save_model(small_model, tmp_path / "m.json")
    back = io.load_model(tmp_path / "m.json", small_model.data)
    np.testing.assert_array_equal(back.latent.xs, small_model.latent.xs)
    np.testing.assert_array_equal(back.theta.log_array(), small_model.theta.log_array())
    assert back.objective_value == small_model.objective_value
    assert back.recompute_objective() == pytest.approx(small_model.objective_value, abs=1e-8)
    q = np.linspace(0, 1, 20)
    np.testing.assert_array_equal(back.predict(q)[0], small_model.predict(q)[0])


def test_hyperparameters_stored_on_natural_scale(tmp_path, small_model):
    io.save_model(small_model, tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["hyperparameters"][0]["phi"] == small_model.theta.dims[0].phi


def test_checksum_mismatch(tmp_path, small_model):
    io.save_model(small_model, tmp_path / "m.json")
    other = small_model.data.copy()
    other[0, 0] += 1e-12
    with pytest.raises(DataIntegrityError, match="checksum"):
        io.load_model(tmp_path / "m.json", other)
    with pytest.raises(DataIntegrityError, match="shape"):
        io.load_model(tmp_path / "m.json", small_model.data[:-1])


def test_not_a_model(tmp_path, small_model):
    (tmp_path / "x.json").write_text('{"format": "other"}')
    with pytest.raises(DataIntegrityError):
        io.load_model(tmp_path / "x.json", small_model.data)
    (tmp_path / "y.json").write_text("{")
    with pytest.raises(DataIntegrityError):
        io.load_model(tmp_path / "y.json", small_model.data)


def test_curve_export(tmp_path, small_model):
    c = inference.mean_curve(small_model, 33)
    io.write_curve(tmp_path / "c.csv", c)
    header = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert header == "x_mu,mu_1,mu_2"
    back = io.read_curve(tmp_path / "c.csv")
    np.testing.assert_array_equal(back.vertices, c.vertices)


def test_band_export(tmp_path, small_model):
    c = inference.mean_curve(small_model, 33)
    b = inference.uncertainty_band(small_model, c, 0.9, 10, 3, seed=4)
    io.write_band(tmp_path / "b.csv", tmp_path / "b.json", b)
    summary = io.read_band_summary(tmp_path / "b.json")
    assert summary == {"eta": 0.9, "rho": b.rho, "n1": 10, "n2": 3, "seed": 4}
    _, d = io.read_csv(tmp_path / "b.csv")
    np.testing.assert_array_equal(d[:, 0], b.sample_distances)


@pytest.mark.filterwarnings("ignore:latent posterior has several")
def test_prediction_export(tmp_path, small_model):
    obs = [inference.PartialObservation([small_model.data[0, 0], np.nan])]
    preds = inference.predict_records(small_model, obs)
    io.write_predictions(tmp_path / "p.csv", list(zip(obs, preds)), 2)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "record,latent,mean_1,mean_2,sd_1,sd_2"
    fields = lines[1].split(",")
    assert fields[0] == "0" and float(fields[4]) == 0.0 and float(fields[5]) > 0
