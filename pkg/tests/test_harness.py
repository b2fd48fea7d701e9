import math

import numpy as np
import pytest

from vibrobot.harness import (SweepSpec, TrackSpec, csv_to_trace, emit_outputs, read_trace,
                              run_sweep, run_tracking, settling_time, steady_state_error,
                              svg_plot, sweep_row, trace_to_csv, worker_count)
from vibrobot.params import RobotParams, SimConfig
from vibrobot.sim import Drive, run_open_loop


@pytest.fixture(scope="module")
def short_trace():
    return run_open_loop(SimConfig(duration=0.05), RobotParams(), Drive.speeds(455.6))


@pytest.mark.parametrize("kwargs", [dict(param="h", values=(1,)), dict(param="mu", values=()),
                                    dict(param="mu", values=(0.3, 0.2)),
                                    dict(param="k", values=(0.0, 1.0)),
                                    dict(param="mu", values=(-0.1, 0.2)),
                                    dict(param="mu", values=(0.1,), duration=0.0)])
def test_sweep_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SweepSpec(**kwargs)


def test_track_spec_validation():
    with pytest.raises(ValueError):
        TrackSpec(duration=-1.0)


def test_csv_schema_and_round_trip(short_trace):
    text = trace_to_csv(short_trace)
    lines = text.splitlines()
    assert lines[0].split(",")[0] == "t"
    assert lines[1].startswith("0.0,")
    assert len(lines) - 1 == len(short_trace)
    back = csv_to_trace(text)
    assert back.names == short_trace.names
    for name in short_trace.names:
        np.testing.assert_array_equal(back[name], short_trace[name])
    assert back["mode"].dtype == np.int64


def test_emission_is_byte_identical(short_trace, tmp_path):
    emit_outputs(short_trace, tmp_path / "a")
    emit_outputs(short_trace, tmp_path / "b")
    for name in ("trace.csv", "trace_metadata.txt", "trace_X.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    meta = (tmp_path / "a" / "trace_metadata.txt").read_text()
    assert "# seed: 0" in meta and "mu = 0.36" in meta


def test_emission_reports_unwritable_path(short_trace, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit_outputs(short_trace, blocker / "sub")


def test_svg_is_self_contained():
    svg = svg_plot(np.linspace(0, 1, 5000), [("a", np.sin(np.arange(5000))), ("b", np.zeros(5000))],
                   "t (s)", "value")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 2
    assert "href" not in svg
    flat = svg_plot([0.0, 1.0], [("c", [2.0, 2.0])], "x", "y")
    assert "nan" not in flat


def test_sweep_summary_is_recomputable_from_csv(tmp_path):
    spec = SweepSpec("mu", (0.0, 0.36), duration=0.05)
    result = run_sweep(spec)
    assert [r.value for r in result.rows] == [0.0, 0.36]
    emit_outputs(result, tmp_path, plots=False)
    for row, value in zip(result.rows, spec.values):
        again = sweep_row(value, read_trace(tmp_path / f"mu_{value!r}.csv"))
        assert again == row
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "mu,final_X,final_abs_Y,final_abs_phi,error"
    assert len(summary) == 3


def test_sweep_reports_failures_per_value(monkeypatch):
    import vibrobot.harness as harness
    from vibrobot.sim import IntegrationError

    real = harness.run_open_loop

    def flaky(config, params, drive, duration):
        if params.mu == 0.2:
            raise IntegrationError(0.01)
        return real(config, params, drive, duration)

    monkeypatch.setattr(harness, "run_open_loop", flaky)
    result = run_sweep(SweepSpec("mu", (0.1, 0.2, 0.3), duration=0.02))
    assert [bool(r.error) for r in result.rows] == [False, True, False]
    assert result.traces[1] is None
    assert "failed" in result.table()


def test_worker_count_is_bounded():
    assert worker_count(1) == 1
    assert worker_count(10, max_workers=2) <= 2
    assert worker_count(0) == 1


def test_steady_state_and_settling():
    t = np.linspace(0.0, 1.0, 11)
    e = np.array([1.0, 0.5, 0.2, 0.05, 0.2, 0.01, 0.0, 0.0, 0.0, -0.001, 0.002])
    assert steady_state_error(t, e) == 0.002
    assert settling_time(t, e, 0.1) == pytest.approx(0.5)
    assert math.isnan(settling_time(t, np.ones(11), 0.1))
    assert settling_time(t, np.zeros(11), 0.1) == 0.0


def test_zero_reference_tracking_summary():
    result = run_tracking(TrackSpec(0.0, 0.0, 0.1))
    assert result.steady_e_t == 0.0 and result.steady_e_r == 0.0
    assert result.settle_t == 0.0
    assert "steady-state" in result.table()
