import io as stdio
import json

import numpy as np

from cosparse.frames import tight_frame
from cosparse.io import (dumps, load_frame, load_matrix, load_vector, read_sidecar,
                         save_frame, save_matrix, write_rows)


def test_frame_round_trip(tmp_path, rng):
    f = tight_frame(7, 4, rng, seed=2**64 - 1)
    path = tmp_path / "f.csv"
    save_frame(path, f)
    g = load_frame(path)
    assert np.array_equal(f.omega, g.omega)
    meta = json.loads((tmp_path / "f.json").read_text())
    assert meta == {"p": 7, "d": 4, "A": f.lower_bound, "B": f.upper_bound,
                    "seed": 2**64 - 1}
    assert g.seed == 2**64 - 1


def test_csv_layout(tmp_path):
    path = tmp_path / "m.csv"
    save_matrix(path, np.array([[0.1, 2.0], [1 / 3, -4.0]]))
    lines = path.read_text().splitlines()
    assert lines == ["0.10000000000000001,2", "0.33333333333333331,-4"]
    save_matrix(path, np.array([1.0, 2.5]))
    assert path.read_text().splitlines() == ["1", "2.5"]
    assert np.array_equal(load_vector(path), [1.0, 2.5])
    assert read_sidecar(path) is None


def test_exact_float_round_trip(tmp_path, rng):
    a = rng.standard_normal((5, 3)) * 10.0 ** rng.integers(-300, 300, (5, 3))
    save_matrix(tmp_path / "a.csv", a)
    assert np.array_equal(load_matrix(tmp_path / "a.csv"), a)


def test_write_rows_formatting():
    buf = stdio.StringIO()
    write_rows(buf, ("a", "b", "c"), [(1, 0.1, np.nan), (np.int64(2), np.float64(1.0), True)])
    assert buf.getvalue() == "a,b,c\n1,0.10000000000000001,nan\n2,1,1\n"


def test_dumps_handles_numpy_and_nonfinite():
    out = json.loads(dumps({"a": np.float64(1.5), "b": np.arange(2), "c": float("inf")}))
    assert out == {"a": 1.5, "b": [0, 1], "c": None}
