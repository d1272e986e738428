"""Convergence studies and the batch runner behind them."""

import threading
import time

import pytest

from svweno.errors import ConfigurationError
from svweno.harness import convergence
from svweno.harness.batch_utils import execute_batch, format_batch_result
from svweno.harness.convergence import format_report, has_failures, run_convergence_study
from svweno.harness.presets import preset
from svweno.models import ConvergenceReport, ConvergenceRow


class TestExecuteBatch:
    @pytest.mark.asyncio
    async def test_splits_success_and_failure_in_input_order(self):
        def op(n):
            if n % 2:
                raise ValueError(f"odd {n}")
            return n * 10

        success, failed = await execute_batch([1, 2, 3, 4], op)
        assert success == [(2, 20), (4, 40)]
        assert failed == [(1, "odd 1"), (3, "odd 3")]

    @pytest.mark.asyncio
    async def test_empty_batch(self):
        assert await execute_batch([], lambda n: n) == ([], [])

    @pytest.mark.asyncio
    async def test_concurrency_is_bounded(self):
        lock = threading.Lock()
        active = [0]
        peak = [0]

        def op(n):
            with lock:
                active[0] += 1
                peak[0] = max(peak[0], active[0])
            time.sleep(0.02)
            with lock:
                active[0] -= 1
            return n

        success, failed = await execute_batch(list(range(8)), op, max_concurrent=2)
        assert len(success) == 8 and not failed
        assert peak[0] <= 2

    def test_format_batch_result(self):
        text = format_batch_result("Study", [1, 2], [(i, "bad") for i in range(7)], item_name="grids",
                                   max_errors_shown=2)
        assert text.startswith("Study complete: 2 grids succeeded\n")
        assert "Failed: 7" in text
        assert "  - 0: bad" in text
        assert "... and 5 more" in text


class TestReport:
    def make_report(self):
        rows = [
            ConvergenceRow(n_sv=20, l1=1e-3, l2=2e-3, linf=4e-3, troubled_percent=0.0),
            ConvergenceRow(n_sv=40, l1=1.25e-4, r1=3.0, l2=2.5e-4, r2=3.0, linf=5e-4, rinf=3.0,
                           troubled_percent=1.5, rate_kind="log2"),
            ConvergenceRow(n_sv=60, l1=3.7e-5, r1=3.0, l2=7.4e-5, r2=3.0, linf=1.5e-4, rinf=2.97,
                           troubled_percent=0.0, rate_kind="generalized"),
            ConvergenceRow(n_sv=80, failed=True, error="nonphysical state"),
        ]
        return ConvergenceReport(preset="advection1d", order=3, tvb_m=2.0, epsilon=1e-6,
                                 limiter_mode="cvmsweno", rows=rows)

    def test_layout(self):
        lines = format_report(self.make_report()).splitlines()
        assert lines[0].startswith("# advection1d  k=3  M=2")
        assert lines[1].split() == ["N", "l1", "R1", "l2", "R2", "linf", "Rinf", "percent"]
        assert "-" in lines[2].split()
        assert lines[3].split()[0] == "40"
        assert "3.00*" in lines[4]
        assert lines[5] == "   80 failed: nonphysical state"
        assert lines[6].startswith("*")

    def test_rows_line_up(self):
        lines = format_report(self.make_report()).splitlines()
        assert len(lines[2]) == len(lines[3]) == len(lines[4])

    def test_has_failures(self):
        report = self.make_report()
        assert has_failures(report)
        report.rows = report.rows[:3]
        assert not has_failures(report)


class TestStudy:
    def test_small_study(self):
        report = run_convergence_study("advection1d", 2, sv_counts=(4, 8))
        assert [r.n_sv for r in report.rows] == [4, 8]
        assert report.rows[0].r1 is None
        assert report.rows[1].rate_kind == "log2"
        assert report.rows[1].l1 < report.rows[0].l1
        assert report.rows[1].r1 > 1.0

    def test_needs_exact_reference(self):
        with pytest.raises(ConfigurationError):
            run_convergence_study("sod1d", 3, sv_counts=(5, 10))

    def test_needs_sv_counts(self):
        with pytest.raises(ConfigurationError):
            run_convergence_study("advection1d", 3, sv_counts=())

    def test_failed_grid_becomes_failed_row(self, monkeypatch):
        def fake_row(problem):
            if problem.n_sv == 10:
                raise RuntimeError("diverged")
            return ConvergenceRow(n_sv=problem.n_sv, l1=problem.n_sv ** -2.0, l2=problem.n_sv ** -2.0,
                                  linf=problem.n_sv ** -2.0, troubled_percent=0.0)

        monkeypatch.setattr(convergence, "run_row", fake_row)
        report = run_convergence_study("advection1d", 3, sv_counts=(20, 10, 5), workers=2)
        assert [r.n_sv for r in report.rows] == [5, 10, 20]
        assert report.rows[1].failed and report.rows[1].error == "diverged"
        assert report.rows[2].rate_kind == "generalized"
        assert report.rows[2].r1 == pytest.approx(2.0)

    def test_limiter_settings_reach_the_runs(self, monkeypatch):
        seen = []

        def fake_row(problem):
            seen.append(problem.limiter)
            return ConvergenceRow(n_sv=problem.n_sv, l1=1.0, l2=1.0, linf=1.0)

        monkeypatch.setattr(convergence, "run_row", fake_row)
        report = run_convergence_study("advection2d", 4, sv_counts=(5,), tvb_m=0.5, epsilon=1e-8, mode="full")
        assert report.limiter_mode == "full"
        assert seen[0].tvb_m == 0.5
        assert seen[0].epsilon == 1e-8
        assert seen[0].mode == "full"

    def test_time_settings_reach_the_runs(self, monkeypatch):
        seen = []

        def fake_row(problem):
            seen.append(problem)
            return ConvergenceRow(n_sv=problem.n_sv, l1=1.0, l2=1.0, linf=1.0)

        monkeypatch.setattr(convergence, "run_row", fake_row)
        run_convergence_study("advection1d", 3, sv_counts=(5, 10), cfl=0.3, t_final=0.25,
                              limit_every_stage=False)
        assert {p.cfl for p in seen} == {0.3}
        assert {p.t_final for p in seen} == {0.25}
        assert not any(p.limiter.limit_every_stage for p in seen)

    def test_time_settings_default_to_the_preset(self, monkeypatch):
        seen = []

        def fake_row(problem):
            seen.append(problem)
            return ConvergenceRow(n_sv=problem.n_sv, l1=1.0, l2=1.0, linf=1.0)

        monkeypatch.setattr(convergence, "run_row", fake_row)
        run_convergence_study("advection1d", 3, sv_counts=(5,))
        assert seen[0].cfl == preset("advection1d").cfl
        assert seen[0].t_final == preset("advection1d").t_final
        assert seen[0].limiter.limit_every_stage is True


@pytest.mark.slow
@pytest.mark.parametrize("order", [2, 3, 4])
def test_smooth_advection_reaches_design_order(order):
    report = run_convergence_study("advection1d", order, sv_counts=(10, 20, 40), workers=3)
    assert report.rows[-1].r1 == pytest.approx(order, abs=0.5)


@pytest.mark.slow
def test_euler_sine_wave_reaches_third_order():
    report = run_convergence_study("euler_sine1d", 3, sv_counts=(10, 20, 40), workers=3)
    assert report.rows[-1].r1 == pytest.approx(3.0, abs=0.5)


def test_rows_do_not_depend_on_worker_count():
    serial = run_convergence_study("advection1d", 2, sv_counts=(4, 8), workers=1)
    parallel = run_convergence_study("advection1d", 2, sv_counts=(4, 8), workers=2)
    assert serial.rows == parallel.rows
