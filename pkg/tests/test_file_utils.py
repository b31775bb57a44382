import json

import numpy as np
import pytest

from boundedflow.utils.file_utils import load_csv, load_json, save_csv, save_json


def test_json_handles_numpy(tmp_path):
    path = save_json({"x": np.float64(0.1), "n": np.int64(3), "v": np.arange(3.0), "p": tmp_path},
                     tmp_path / "nested" / "out.json")
    data = load_json(path)
    assert data == {"x": 0.1, "n": 3, "v": [0.0, 1.0, 2.0], "p": str(tmp_path)}
    assert [p.name for p in path.parent.iterdir()] == ["out.json"]


def test_json_failure_leaves_no_file(tmp_path):
    path = tmp_path / "out.json"
    with pytest.raises(TypeError):
        save_json({"bad": object()}, path)
    assert list(tmp_path.iterdir()) == []


def test_load_json_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_json(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(json.JSONDecodeError):
        load_json(broken)


def test_csv_keeps_full_precision(tmp_path):
    t = np.linspace(0.0, 1.0, 7)
    x = np.exp(t) / 3.0
    path = save_csv(["t", "x"], [t, x], tmp_path / "solution.csv")
    text = path.read_text(encoding="utf-8")
    assert text.startswith("t,x\n")
    assert "\r" not in text
    columns = load_csv(path)
    assert np.array_equal(columns["t"], t)
    assert np.array_equal(columns["x"], x)


def test_csv_is_byte_stable(tmp_path):
    t = np.linspace(-1.0, 1.0, 5)
    first = save_csv(["t", "x"], [t, t ** 2], tmp_path / "a.csv").read_bytes()
    second = save_csv(["t", "x"], [t, t ** 2], tmp_path / "b.csv").read_bytes()
    assert first == second


@pytest.mark.parametrize("header, columns", [
    (["t"], [[0.0], [1.0]]),
    (["t", "x"], [[0.0, 1.0], [1.0]]),
])
def test_csv_shape_errors(tmp_path, header, columns):
    with pytest.raises(ValueError):
        save_csv(header, columns, tmp_path / "bad.csv")
