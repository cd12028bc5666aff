from fractions import Fraction

import pytest

from fedosov import (CheckReport, Jet, SuiteConfig, TruncationPolicy, chart_from_potential,
                     omega_from_potential, replay, run_suite, two_form)
from fedosov.verification import SUITES


def omega_factory(chart):
    n = chart.dim
    z, zb = Jet.variable(n, 0), Jet.variable(n, 0, True)
    return omega_from_potential(z * zb + (z * z * zb * zb).scale(Fraction(1, 2)))


def config(name="fubini_study", n=1, sabotage=False, kappa=1, omega=omega_factory, seed=0):
    return SuiteConfig(lambda: chart_from_potential(name, n, 8, sabotage=sabotage),
                       TruncationPolicy(2, 8), Fraction(kappa), omega, seed=seed, name=name)


def records(reports):
    return [r.to_record() for r in reports]


@pytest.mark.parametrize("suite", ["graded", "geometry"])
@pytest.mark.parametrize("chart", ["flat", "fubini_study", "hyperbolic_disc"])
def test_cheap_suites_pass(suite, chart):
    reports = run_suite(suite, config(chart))
    assert reports
    failed = [r.to_record() for r in reports if not r.passed]
    assert not failed


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["fedosov", "wick", "hermitian", "morita"])
def test_heavy_suites_pass_on_fubini_study(suite):
    reports = run_suite(suite, config())
    failed = [r.to_record() for r in reports if not r.passed]
    assert not failed


def test_runs_are_deterministic():
    a = records(run_suite("graded", config(seed=7)))
    b = records(run_suite("graded", config(seed=7)))
    assert a == b


def test_sabotage_is_detected_and_replayed():
    cfg = config(sabotage=True)
    reports = run_suite("geometry", cfg)
    failed = {r.check_id: r for r in reports if not r.passed}
    assert "laplace-R" in failed
    again = replay(failed["laplace-R"], cfg)
    assert again.status == "fail"
    assert again.witness == failed["laplace-R"].witness


def test_replay_of_passing_check():
    cfg = config()
    report = run_suite("graded", cfg)[0]
    assert replay(report, cfg).passed


def test_setup_error_becomes_report():
    def bad(chart):
        return two_form(2, {(0, 1): Jet.const(2, 1)}, lam=1)
    reports = run_suite("wick", config("flat", 2, omega=bad))
    assert len(reports) == 1
    assert reports[0].check_id == "setup"
    assert reports[0].witness["error"] == "NonTypeOneOne"


def test_unknown_suite_rejected():
    assert "graded" in SUITES
    with pytest.raises(ValueError):
        run_suite("nonsense", config())


def test_report_record_fields():
    rep = CheckReport("x", "anchor", "pass", None, 2, 4, 0.1, "graded")
    assert set(rep.to_record()) == {"suite", "id", "anchor", "status", "lambda_order", "cap",
                                    "witness"}
