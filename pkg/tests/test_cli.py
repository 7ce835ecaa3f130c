import json

import pytest

from khessian.cli import main
from khessian.enums import ExitCode

SOLVE = {
    "A": {"a": [1.0, 1.0, 1.0], "k": 2, "normalize": True},
    "f": {"variant": "constant"},
    "domain": {"kind": "box", "lower": [-1, -1, -1], "upper": [1, 1, 1], "nodes": 17},
}


def run(tmp_path, command, config=None, *extra):
    argv = [command, "--out", str(tmp_path / "out")]
    if config is not None:
        path = tmp_path / "config.json"
        path.write_text(config if isinstance(config, str) else json.dumps(config))
        argv += ["--config", str(path)]
    code = main(argv + list(extra))
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    return code, manifest


def test_solve_dirichlet(tmp_path):
    code, manifest = run(tmp_path, "solve-dirichlet", SOLVE)
    assert code == ExitCode.OK
    assert manifest["exit_code"] == 0
    assert manifest["verdicts"] == {"converged": True}
    assert {"solution.khes", "solution.csv", "solve_report.json"} <= set(manifest["artifacts"])
    report = json.loads((tmp_path / "out" / "solve_report.json").read_text())
    assert report["stages"] == [0.0]
    assert report["iterations"] == 0


def test_malformed_config(tmp_path):
    code, manifest = run(tmp_path, "solve-dirichlet", "{")
    assert code == ExitCode.CONFIG_ERROR
    assert manifest["exit_code"] == 1
    assert "invalid JSON" in manifest["error"]


def test_invalid_config_names_the_key(tmp_path, capsys):
    code, manifest = run(tmp_path, "solve-dirichlet", {**SOLVE, "f": {"variant": "gaussian"}})
    assert code == ExitCode.CONFIG_ERROR
    assert manifest["error"].startswith("f.variant")
    assert "f.variant" in capsys.readouterr().err


def test_missing_config(tmp_path):
    code, manifest = run(tmp_path, "build-entire")
    assert code == ExitCode.CONFIG_ERROR
    assert manifest["command"] == "build-entire"


def test_fit_asymptotics_of_a_potential(tmp_path):
    config = {
        "A": {"a": [1.0, 1.0, 1.0], "k": 2, "normalize": True},
        "source": {"delta": 4.0, "n": 3},
        "annulus": [20.0, 400.0],
        "samples": 64,
        "shells": 6,
    }
    code, manifest = run(tmp_path, "fit-asymptotics", config)
    assert code == ExitCode.OK
    fit = json.loads((tmp_path / "out" / "fit.json").read_text())
    assert fit["exponent"] == pytest.approx(1.0, abs=0.1)
    assert len(fit["shells"]) == 6
    assert {"fit.json", "shells.csv"} <= set(manifest["artifacts"])


def test_fit_asymptotics_needs_one_source(tmp_path):
    config = {"A": {"a": [1.0, 1.0, 1.0], "k": 2, "normalize": True}, "annulus": [20.0, 400.0]}
    code, _ = run(tmp_path, "fit-asymptotics", config)
    assert code == ExitCode.CONFIG_ERROR


def test_check_liouville_on_shifted_quadratic(tmp_path):
    config = {"A": {"a": [1.0, 1.0, 1.0], "k": 2, "normalize": True}, "R_list": [2.0, 4.0, 8.0], "constant": 1.0}
    code, manifest = run(tmp_path, "check-liouville", config)
    assert code == ExitCode.OK
    assert manifest["verdicts"] == {"nonincreasing": True}
    payload = json.loads((tmp_path / "out" / "liouville.json").read_text())
    assert all(row["hessian_deviation"] <= 1e-8 for row in payload["rows"])


def test_check_liouville_rejects_bad_scales(tmp_path):
    config = {"A": {"a": [1.0, 1.0, 1.0], "k": 2, "normalize": True}, "R_list": [4.0, 2.0], "constant": 0.0}
    code, manifest = run(tmp_path, "check-liouville", config)
    assert code == ExitCode.CONFIG_ERROR
    assert manifest["error"].startswith("R_list")


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.startswith("khessian ")


@pytest.mark.slow
def test_selftest_quick(tmp_path, capsys):
    code, manifest = run(tmp_path, "selftest", None, "--quick")
    assert code == 0
    assert all(manifest["verdicts"].values())
    assert "suites passed" in capsys.readouterr().out


@pytest.mark.slow
def test_build_entire_unit_rhs(tmp_path):
    config = {
        "A": {"a": [1.0, 1.0, 1.0], "k": 2, "normalize": True},
        "f": {"variant": "constant"},
        "K": {"half_width": 0.5},
        "s_list": [2.0, 4.0, 8.0],
        "nodes": 17,
    }
    code, manifest = run(tmp_path, "build-entire", config)
    assert code == ExitCode.OK
    assert manifest["verdicts"]["sandwich_ok"]
    assert "limit.khes" in manifest["artifacts"]
    assert len(manifest["stages"]) == 3
