import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pipesurf import harness
from pipesurf.errors import DomainError, InvalidParams, SolverBreakdown
from pipesurf.fields import manufactured_case
from pipesurf.harness import (ConvergenceReport, ReportRow, exact_grid_function, grid_sizes, rate,
                              regularity_sweep, run_case, solve_manufactured)

# -- rate -------------------------------------------------------------------------


def test_rate_examples():
    eps = 1e-9
    assert rate(16 * eps, 2e-2, eps, 1e-2) == pytest.approx(4.0, abs=1e-12)
    assert rate(3e-4, 0.1, 3e-4, 0.05) == 0.0
    assert rate(7.8e-5, 1 / 60, 4.2e-5, 1 / 70) == pytest.approx(4.00, abs=0.05)


@pytest.mark.parametrize("args", [(0.0, 1.0, 1.0, 0.5), (1.0, -1.0, 1.0, 0.5), (1.0, 0.5, 2.0, 0.5),
                                  (math.nan, 1.0, 1.0, 0.5), (1.0, 1.0, -2.0, 0.5)])
def test_rate_domain(args):
    with pytest.raises(DomainError):
        rate(*args)


@given(st.floats(1e-12, 1.0), st.floats(0.05, 6.0), st.floats(1e-3, 0.5), st.floats(1.1, 8.0))
def test_rate_inverts_power_law(C, order, h, ratio):
    h2 = h / ratio
    assert rate(C * h**order, h, C * h2**order, h2) == pytest.approx(order, rel=1e-9)


# -- grid mapping -----------------------------------------------------------------

def test_grid_sizes(torus, helix):
    assert grid_sizes(torus, 1 / 60) == (377, 377)
    assert grid_sizes(helix, 1 / 80) == (503, 503)
    short = harness.helix_pipe(domain=(0.0, 1.0))
    assert grid_sizes(short, 1 / 10) == (63, 10)
    with pytest.raises(InvalidParams):
        grid_sizes(short, 1 / 5)
    with pytest.raises(InvalidParams):
        grid_sizes(torus, -0.1)


def test_exact_grid_function_boundary(helix, helix_case):
    from pipesurf.discrete import Grid
    g = Grid.for_pipe(helix, 8, 8)
    ue = exact_grid_function(g, helix_case)
    assert np.all(ue.values[:, [0, -1]] == 0.0)
    assert ue.values[3, 4] == pytest.approx(float(helix_case.u(g.theta[3], g.omega[4])))


# -- reports ----------------------------------------------------------------------

def _report(errors, hs):
    rep = ConvergenceReport("demo")
    for E, h in zip(errors, hs):
        rep.add(ReportRow(h, 8, 8, h, E))
    return rep


def test_report_rates_match_recomputation():
    hs = [1 / 10, 1 / 20, 1 / 30, 1 / 40]
    errs = [3e-2 * h**4 * (1 + 0.1 * h) for h in hs]
    rep = _report(errs, hs)
    assert rep.rows[0].rate is None
    for a, b in zip(rep.rows, rep.rows[1:]):
        assert abs(b.rate - math.log(a.E / b.E) / math.log(a.h / b.h)) <= 1e-10
    assert rep.final_rate == rep.rates[-1]
    assert rep.errors == errs


def test_report_skips_failed_rows():
    rep = ConvergenceReport("demo")
    rep.add(ReportRow(0.1, 8, 8, 0.1, 1e-3))
    rep.add(ReportRow(0.05, 8, 8, 0.05, None, error="SolverBreakdown: boom"))
    rep.add(ReportRow(0.025, 8, 8, 0.025, 1e-3 / 256))
    assert rep.rows[2].rate == pytest.approx(4.0)
    assert len(rep.rates) == 1
    text = rep.to_text()
    assert "failed" in text and "boom" in text
    csv_lines = rep.to_csv().splitlines()
    assert len(csv_lines) == 4 and csv_lines[2].endswith("SolverBreakdown: boom")


def test_report_serialization_has_no_timing():
    rep = ConvergenceReport("demo", meta={"mapping": "x"})
    rep.add(ReportRow(0.1, 8, 8, 0.1, 1e-3, stats={"method": "gmres", "seconds": 3.2}))
    data = json.loads(rep.to_json())
    assert data["rows"][0]["stats"] == {"method": "gmres"}
    assert data["case"] == "demo"


# -- runs -------------------------------------------------------------------------

def test_run_case_small_torus(torus, torus_case):
    rep = run_case(torus, torus_case, [1 / 4, 1 / 6, 1 / 8])
    assert [r.M for r in rep.rows] == [25, 38, 50]
    e = rep.errors
    assert all(a > b for a, b in zip(e, e[1:]))
    assert 3.5 < rep.final_rate < 4.5
    assert rep.meta["boundary"] == "periodic_omega"
    assert rep.meta["mapping"] == harness.H_MAPPING


def test_run_case_row_failure_continues(torus, torus_case, monkeypatch):
    real = harness.solve_manufactured

    def flaky(pipe, case, M, N, **opts):
        if M == 38:
            raise SolverBreakdown("forced")
        return real(pipe, case, M, N, **opts)

    monkeypatch.setattr(harness, "solve_manufactured", flaky)
    rep = run_case(torus, torus_case, [1 / 8, 1 / 4, 1 / 6])
    assert [r.M for r in rep.rows] == [25, 38, 50]
    assert rep.rows[1].error == "SolverBreakdown: forced"
    assert rep.rows[0].ok and rep.rows[2].ok and rep.rows[2].rate is not None


def test_run_case_rejects_unknown_options(torus, torus_case):
    with pytest.raises(InvalidParams):
        run_case(torus, torus_case, [1 / 4], smoother="jacobi")


def test_solve_manufactured_reports_error(helix, helix_case):
    E, u_h, stats = solve_manufactured(helix, helix_case, 24, 24)
    E2, _, _ = solve_manufactured(helix, helix_case, 48, 48)
    assert 0 < 8 * E2 < E
    assert u_h.values.shape == (24, 25)
    assert stats.method == "direct_lu"


@settings(max_examples=5, deadline=None, derandomize=True)
@given(st.integers(0, 2**32 - 1))
def test_reports_deterministic(seed):
    pipe = harness.torus_pipe("random", R0=0.3, seed=seed)
    case = manufactured_case("torus-trig")
    a = run_case(pipe, case, [1 / 3, 1 / 4]).to_json()
    b = run_case(pipe, case, [1 / 3, 1 / 4]).to_json()
    assert a == b
    assert json.loads(a)["meta"]["section_params"]["seed"] == seed


def test_regularity_sweep_structure():
    reps = regularity_sweep([4.0, 2.0], [1 / 3, 1 / 4])
    assert [r.case for r in reps] == ["torus/superellipse gamma=4", "torus/superellipse gamma=2"]
    with pytest.raises(InvalidParams):
        regularity_sweep([0.0], [1 / 3])
