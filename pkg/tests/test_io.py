import json
import math

import numpy as np
import pytest

from khessian import DomainKind, GridField, GridSpec, normalize_to_Ak
from khessian.errors import ConfigError
from khessian.io import (
    MANIFEST_NAME,
    TIMINGS_NAME,
    RunManifest,
    load_field,
    to_jsonable,
    write_field,
    write_json,
    write_table,
)


def test_to_jsonable():
    payload = {
        "array": np.array([1.0, math.inf]),
        "pair": (math.nan, -math.inf),
        3: DomainKind.BOX,
        "count": np.int64(2),
        "flag": np.bool_(True),
    }
    assert to_jsonable(payload) == {
        "array": [1.0, "inf"],
        "pair": ["nan", "-inf"],
        "3": "box",
        "count": 2,
        "flag": True,
    }


def test_write_json_is_sorted(tmp_path):
    path = tmp_path / "out.json"
    write_json(path, {"b": 1, "a": [math.inf]})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": ["inf"], "b": 1}
    assert text.endswith("\n")


def test_write_table(tmp_path):
    path = tmp_path / "table.csv"
    write_table(path, ["r", "value"], [(1.0, 0.5), (2.0, 0.25)])
    lines = path.read_text().splitlines()
    assert lines == ["r,value", "1,0.5", "2,0.25"]


def test_field_files(tmp_path):
    A = normalize_to_Ak([1.0, 2.0, 3.0], 2)
    field = GridField.from_function(GridSpec.ellipsoid(A, 1.0, 17), lambda x: A.tau(x) - 0.5)
    names = write_field(field, tmp_path, "solution")
    assert names == ["solution.khes", "solution.csv"]
    restored = load_field(tmp_path / "solution.khes")
    assert np.array_equal(restored.values, field.values)


def test_load_field_missing(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_field(tmp_path / "nothing.khes")
    assert info.value.path == ("field",)


def test_manifest_contents(tmp_path):
    manifest = RunManifest("solve-dirichlet", {"A": {"a": [1.0], "k": 1}}, seed=4)
    manifest.add_artifacts("solution.khes", "solution.csv", "solution.khes")
    manifest.add_stage({"s": 2.0, "margin": math.nan})
    manifest.verdict("converged", np.bool_(True))
    manifest.exit_code = 3
    path = manifest.write(tmp_path)
    payload = json.loads((tmp_path / MANIFEST_NAME).read_text())
    assert path.endswith(MANIFEST_NAME)
    assert payload["command"] == "solve-dirichlet"
    assert payload["seed"] == 4
    assert payload["exit_code"] == 3
    assert payload["error"] is None
    assert payload["artifacts"] == sorted(["solution.khes", "solution.csv", MANIFEST_NAME, TIMINGS_NAME])
    assert payload["stages"] == [{"s": 2.0, "margin": "nan"}]
    assert payload["verdicts"] == {"converged": True}
    assert {"version", "numpy", "scipy"} <= set(payload)


def test_manifest_timings_live_in_their_own_file(tmp_path):
    manifest = RunManifest("selftest")
    with manifest.timed("solve"):
        pass
    with manifest.timed("solve"):
        pass
    first = tmp_path / "first"
    second = tmp_path / "second"
    manifest.write(first)
    manifest.timings["solve"] += 10.0
    manifest.write(second)
    assert (first / MANIFEST_NAME).read_bytes() == (second / MANIFEST_NAME).read_bytes()
    timings = json.loads((second / TIMINGS_NAME).read_text())
    assert timings["solve"] >= 10.0
