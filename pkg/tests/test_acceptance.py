"""Acceptance criteria 1-11, each run at its stated trial count and tolerance.

Every criterion prints exactly one ``CRITERION n: PASS|FAIL`` line (visible in
``pytest -v`` output) before asserting.
"""

import time

import numpy as np
import pytest

from cohrelkit import cohrel as cr
from cohrelkit import verify as vf

SEED = 7


def _report(number: int, ok: bool, summary: str, capsys) -> None:
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} -- {summary}")


def _run(suite: str, names: list[str], trials: int, tol: vf.Tolerances | None = None) -> vf.SuiteReport:
    checks = [vf.find_check(suite, n) for n in names]
    return vf.run_checks(suite, checks, SEED, trials, tol)


def _summary(report: vf.SuiteReport) -> str:
    parts = []
    for c in report.checks:
        part = f"{c.name} {c.passed}/{c.passed + c.failed + c.errors}"
        if c.first_failure:
            part += f" [{c.first_failure}]"
        parts.append(part)
    return "; ".join(parts)


def test_criterion_01_identity_zero(capsys):
    rep = _run("cohrel", ["identity_zero"], 50)
    _report(1, rep.ok, _summary(rep), capsys)
    assert rep.ok, _summary(rep)


def test_criterion_02_gibbs_to_gibbs(capsys):
    rep = _run("cohrel", ["gibbs_to_gibbs"], 50)
    _report(2, rep.ok, _summary(rep), capsys)
    assert rep.ok, _summary(rep)


def test_criterion_03_min_max_recovery(capsys):
    rep = _run("cohrel", ["trivial_output", "trivial_input"], 50)
    _report(3, rep.ok, _summary(rep), capsys)
    assert rep.ok, _summary(rep)


def test_criterion_04_max_entropy_duality(capsys):
    rep = _run("cohrel", ["max_entropy_duality"], 50)
    _report(4, rep.ok, _summary(rep), capsys)
    assert rep.ok, _summary(rep)


def test_criterion_05_bound_sandwich(capsys):
    rep = _run("cohrel", ["bound_sandwich", "trivial_bounds"], 100, vf.Tolerances(slack=1e-5))
    _report(5, rep.ok, _summary(rep), capsys)
    assert rep.ok, _summary(rep)


def test_criterion_06_structural_properties(capsys):
    scaling = _run("cohrel", ["scaling"], 100, vf.Tolerances(slack=1e-6))
    others = [n for n in cr.PROPERTY_NAMES if n not in ("scaling", "swap_counterexample")]
    rest = _run("cohrel", others, 100, vf.Tolerances(slack=1e-5))
    sw = cr.swap_counterexample()
    swap_ok = sw["gap"] >= 0.01
    ok = scaling.ok and rest.ok and swap_ok
    summary = f"{_summary(scaling)}; {_summary(rest)}; swap gap {sw['gap']:.4f} bits"
    _report(6, ok, summary, capsys)
    assert ok, summary


def test_criterion_07_dilation(capsys):
    rep = _run("process", ["dilation_gamma_preserving", "dilation_recovery"], 50, vf.Tolerances(feas=1e-8))
    _report(7, rep.ok, _summary(rep), capsys)
    assert rep.ok, _summary(rep)


def test_criterion_08_battery(capsys):
    rep = _run("process", ["battery_round_trip"], 50)
    rob = _run("cohrel", ["battery_robustness"], 50)
    ok = rep.ok and rob.ok
    summary = f"{_summary(rep)}; {_summary(rob)}"
    _report(8, ok, summary, capsys)
    assert ok, summary


def test_criterion_09_petz_observer(capsys):
    rep = _run("process", ["petz_observer"], 50, vf.Tolerances(feas=1e-8))
    _report(9, rep.ok, _summary(rep), capsys)
    assert rep.ok, _summary(rep)


def test_criterion_10_aep_and_runtime(capsys):
    start = time.perf_counter()
    rep = _run("cohrel", ["aep_gibbs_family", "aep_generic_sandwich"], 1)
    aep_secs = time.perf_counter() - start
    start = time.perf_counter()
    full = vf.run_suite("all", SEED, 10)
    all_secs = time.perf_counter() - start
    ok = rep.ok and aep_secs <= 300.0 and full.ok and all_secs <= 1800.0
    summary = (
        f"{_summary(rep)}; AEP runs {aep_secs:.1f} s (limit 300 s); "
        f"verify all (10 trials) {'ok' if full.ok else 'FAILED'} in {all_secs:.1f} s (limit 1800 s)"
    )
    _report(10, ok, summary, capsys)
    assert ok, summary


def test_criterion_11_solver_validation(capsys):
    rep = _run("sdp", ["d_max_vs_eigendecomposition", "fidelity_vs_closed_form", "certified_gap"], 100,
               vf.Tolerances(gap=1e-7))
    _report(11, rep.ok, _summary(rep), capsys)
    assert rep.ok, _summary(rep)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_aep_gibbs_rows_individually(n):
    pm, gi, go, value = vf.aep_gibbs_instance()
    table = cr.aep_study(pm, gi, go, 0.1, n_max=n)
    row = table.rows[-1]
    assert row.limit == pytest.approx(value, abs=1e-9)
    assert row.value_per_n - row.limit == pytest.approx(-np.log2(1 - 0.01) / n, abs=1e-5)
