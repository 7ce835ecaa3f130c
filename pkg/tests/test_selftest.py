import pytest

from khessian.errors import NumericError
from khessian.selftest import MAX_EXIT, SUITES, SuiteResult, exit_status, format_table, run_selftest

FAST = ["sigma_oracles", "euler_identity", "barrier_identities", "potential_oracle"]


@pytest.mark.parametrize("name", FAST)
def test_fast_suites_pass(name):
    (result,) = run_selftest(quick=True, names=[name])
    assert result.name == name
    assert result.passed, result.detail


@pytest.mark.slow
def test_full_quick_run_passes():
    results = run_selftest(quick=True)
    assert [result.name for result in results] == list(SUITES)
    assert exit_status(results) == 0


def test_suite_errors_count_as_failures(monkeypatch):
    def broken(rng, quick):
        raise NumericError("log-log regression needs at least two positive samples")

    monkeypatch.setitem(SUITES, "broken", broken)
    (result,) = run_selftest(names=["broken"])
    assert not result.passed
    assert result.detail.startswith("NumericError:")


def test_numeric_crashes_count_as_failures(monkeypatch):
    def overflowing(rng, quick):
        return 10.0**400 > 0.0, "unreachable"

    monkeypatch.setitem(SUITES, "overflowing", overflowing)
    results = run_selftest(names=["overflowing", "sigma_oracles"], quick=True)
    assert [result.passed for result in results] == [False, True]
    assert results[0].detail.startswith("OverflowError:")
    assert exit_status(results) == 1


def test_format_table():
    results = [SuiteResult("alpha", True, "gap 1e-12"), SuiteResult("b", False, "gap 1")]
    lines = format_table(results).splitlines()
    assert lines[0] == "alpha  pass  gap 1e-12"
    assert lines[1] == "b      FAIL  gap 1"
    assert lines[-1] == "1/2 suites passed"


def test_exit_status_counts_failures():
    assert exit_status([SuiteResult("a", True, ""), SuiteResult("b", False, "")]) == 1
    many = [SuiteResult(str(i), False, "") for i in range(MAX_EXIT + 10)]
    assert exit_status(many) == MAX_EXIT
