"""End-to-end experiments: open-loop parameter sweeps and closed-loop tracking.

Also owns the on-disk formats: one CSV per run (header row, fixed column
order, floats written with ``repr`` so parsing restores them exactly), a
``metadata.txt`` echoing config and seed, and self-contained SVG line plots.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .controller import run_closed_loop
from .params import RobotParams, SimConfig
from .sim import Drive, IntegrationError, SimTrace, run_open_loop

SWEEP_PARAMS = ("k", "mu")
DEFAULT_SWEEP_VALUES = {
    "k": (7250.9185, 72509.185, 725091.85),
    "mu": (0.0, 0.18, 0.36, 0.72),
}
NOMINAL_SPEED = 455.6  # rad/s
STEADY_FRACTION = 0.1


@dataclass(frozen=True)
class SweepSpec:
    """One open-loop run per value of ``param``, everything else at its default."""

    param: str
    values: tuple
    drive: Drive = Drive.speeds(NOMINAL_SPEED)
    duration: float = 2.0

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"sweep parameter must be one of {SWEEP_PARAMS}, got {self.param!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        lowest_ok = values[0] >= 0 if self.param == "mu" else values[0] > 0
        if not lowest_ok:
            raise ValueError(f"sweep values for {self.param} out of range: {values[0]!r}")
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class TrackSpec:
    """Step references for the two channels plus the run length."""

    x_d: float = 0.02
    phi_d: float = 0.0
    duration: float = 10.0
    band_t: float = 1e-3  # settling band for the translation error, m
    band_r: float = 1e-2  # settling band for the rotation error, rad

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be > 0")


@dataclass
class SweepRow:
    value: float
    final_X: float = math.nan
    final_abs_Y: float = math.nan
    final_abs_phi: float = math.nan
    error: str = ""


@dataclass
class SweepResult:
    spec: SweepSpec
    traces: list  # SimTrace or None per value, in value order
    rows: list = field(default_factory=list)

    def table(self):
        """Plain-text summary, one line per value."""
        head = f"{self.spec.param:>14} {'final X (m)':>14} {'|Y| (m)':>11} {'|phi| (rad)':>11}"
        lines = [head]
        for r in self.rows:
            if r.error:
                lines.append(f"{r.value:>14.6g} failed: {r.error}")
            else:
                lines.append(f"{r.value:>14.6g} {r.final_X:>14.6g} {r.final_abs_Y:>11.3g} "
                             f"{r.final_abs_phi:>11.3g}")
        return "\n".join(lines)


@dataclass
class TrackResult:
    spec: TrackSpec
    trace: SimTrace
    steady_e_t: float
    steady_e_r: float
    settle_t: float  # NaN when the error never stays inside its band
    settle_r: float

    def table(self):
        return "\n".join([
            f"x_d = {self.spec.x_d!r} m, phi_d = {self.spec.phi_d!r} rad, "
            f"duration = {self.spec.duration!r} s",
            f"steady-state max |e_t| = {self.steady_e_t:.4g} m, settling {self.settle_t:.4g} s",
            f"steady-state max |e_r| = {self.steady_e_r:.4g} rad, settling {self.settle_r:.4g} s",
        ])


def sweep_row(value, trace):
    """Summary row computed from a trace alone."""
    return SweepRow(value, trace.final("X"), abs(trace.final("Y")), abs(trace.final("phi")))


def _sweep_one(args):
    param, value, drive, duration, config, params = args
    params = replace(params, **{param: value})
    try:
        return run_open_loop(config, params, drive, duration), ""
    except (IntegrationError, ValueError) as err:
        return None, str(err)


def worker_count(n_jobs, max_workers=None):
    limit = os.cpu_count() or 1
    if max_workers is not None:
        limit = min(limit, max_workers)
    return max(1, min(n_jobs, limit))


def run_sweep(spec, config=None, params=None, max_workers=None):
    """Run one open-loop simulation per sweep value.

    Runs go to a bounded process pool (or run inline when only one worker is
    available); results are collected in value order so the output does not
    depend on scheduling. A failing value is reported in its row and does not
    stop the others.
    """
    config = config or SimConfig()
    params = params or RobotParams()
    jobs = [(spec.param, v, spec.drive, spec.duration, config, params) for v in spec.values]
    workers = worker_count(len(jobs), max_workers)
    if workers == 1:
        outcomes = [_sweep_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_one, jobs))
    result = SweepResult(spec, [trace for trace, _ in outcomes])
    for value, (trace, error) in zip(spec.values, outcomes):
        result.rows.append(SweepRow(value, error=error) if trace is None else sweep_row(value, trace))
    return result


def steady_state_error(t, e, fraction=STEADY_FRACTION):
    """Largest ``|e|`` over the final ``fraction`` of the run."""
    e = np.abs(np.asarray(e))
    start = int(math.floor(len(e) * (1.0 - fraction)))
    return float(np.max(e[start:]))


def settling_time(t, e, band):
    """First time after which ``|e|`` stays within ``band``; NaN if it never does."""
    outside = np.flatnonzero(np.abs(np.asarray(e)) > band)
    if len(outside) == 0:
        return float(t[0])
    last = outside[-1]
    if last == len(e) - 1:
        return math.nan
    return float(t[last + 1])


def tracking_summary(spec, trace):
    t = trace["t"]
    return TrackResult(spec, trace,
                       steady_state_error(t, trace["e_t"]), steady_state_error(t, trace["e_r"]),
                       settling_time(t, trace["e_t"], spec.band_t),
                       settling_time(t, trace["e_r"], spec.band_r))


def run_tracking(spec, config=None, params=None):
    """Closed-loop run towards ``(x_d, phi_d)``.

    Raises :class:`ControllerDivergence` (with tick and last gains) if the
    controller produces non-finite output.
    """
    config = config or SimConfig()
    params = params or RobotParams()
    trace = run_closed_loop(config, params, spec.x_d, spec.phi_d, spec.duration)
    return tracking_summary(spec, trace)


# --- files -------------------------------------------------------------------

def format_value(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def trace_to_csv(trace):
    names = trace.names
    cols = [trace[n] for n in names]
    lines = [",".join(names)]
    for i in range(len(trace)):
        lines.append(",".join(format_value(c[i]) for c in cols))
    return "\n".join(lines) + "\n"


def csv_to_trace(text, meta=None):
    """Inverse of :func:`trace_to_csv`."""
    rows = text.strip("\n").split("\n")
    names = rows[0].split(",")
    values = [r.split(",") for r in rows[1:]]
    cols = {}
    for j, name in enumerate(names):
        if name == "mode":
            cols[name] = np.array([int(v[j]) for v in values], dtype=np.int64)
        else:
            cols[name] = np.array([float(v[j]) for v in values])
    return SimTrace(cols, dict(meta or {}))


def read_trace(path):
    return csv_to_trace(Path(path).read_text())


def metadata_text(meta):
    lines = []
    for key, value in meta.items():
        if key == "config":
            continue
        lines.append(f"# {key}: {value}")
    if "config" in meta:
        lines.append(meta["config"].rstrip("\n"))
    return "\n".join(lines) + "\n"


def _write(path, text):
    try:
        path.write_text(text)
    except OSError as err:
        raise OSError(f"cannot write {str(path)!r}: {err.strerror}") from None


def _plots_for(trace):
    t = trace["t"]
    plots = {
        "X": ("X (m)", [("X", trace["X"])]),
        "Y": ("Y (m)", [("Y", trace["Y"])]),
        "phi": ("phi (rad)", [("phi", trace["phi"])]),
    }
    if "e_t" in trace.names:
        plots["errors"] = ("error", [("e_t (m)", trace["e_t"]), ("e_r (rad)", trace["e_r"])])
        plots["gains_t"] = ("translation gain", [(n, trace[n]) for n in ("Kp_t", "Ki_t", "Kd_t")])
        plots["gains_r"] = ("rotation gain", [(n, trace[n]) for n in ("Kp_r", "Ki_r", "Kd_r")])
    return t, plots


def emit_trace(trace, out_dir, stem="trace", plots=True):
    """Write ``<stem>.csv``, ``<stem>_metadata.txt`` and SVG plots; return the paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create {str(out_dir)!r}: {err.strerror}") from None
    written = []
    csv_path = out_dir / f"{stem}.csv"
    _write(csv_path, trace_to_csv(trace))
    written.append(csv_path)
    meta_path = out_dir / f"{stem}_metadata.txt"
    _write(meta_path, metadata_text(trace.meta))
    written.append(meta_path)
    if plots:
        t, specs = _plots_for(trace)
        for name, (ylabel, series) in specs.items():
            path = out_dir / f"{stem}_{name}.svg"
            _write(path, svg_plot(t, series, "t (s)", ylabel))
            written.append(path)
    return written


def emit_outputs(result, out_dir, plots=True):
    """Write a trace, a :class:`TrackResult` or a :class:`SweepResult` to ``out_dir``."""
    out_dir = Path(out_dir)
    if isinstance(result, SimTrace):
        return emit_trace(result, out_dir, plots=plots)
    if isinstance(result, TrackResult):
        written = emit_trace(result.trace, out_dir, plots=plots)
        path = out_dir / "summary.txt"
        _write(path, result.table() + "\n")
        return written + [path]
    if isinstance(result, SweepResult):
        written = []
        param = result.spec.param
        for value, trace in zip(result.spec.values, result.traces):
            if trace is not None:
                written += emit_trace(trace, out_dir, stem=f"{param}_{value!r}", plots=plots)
        lines = [f"{param},final_X,final_abs_Y,final_abs_phi,error"]
        for r in result.rows:
            lines.append(",".join([repr(r.value), repr(r.final_X), repr(r.final_abs_Y),
                                   repr(r.final_abs_phi), r.error.replace(",", ";")]))
        path = out_dir / "summary.csv"
        _write(path, "\n".join(lines) + "\n")
        if plots:
            done = [(f"{param}={v!r}", tr) for v, tr in zip(result.spec.values, result.traces)
                    if tr is not None]
            if done:
                sweep_svg = out_dir / f"sweep_{param}_X.svg"
                _write(sweep_svg, svg_plot(done[0][1]["t"], [(lab, tr["X"]) for lab, tr in done],
                                           "t (s)", "X (m)"))
                written.append(sweep_svg)
        return written + [path]
    raise TypeError(f"cannot emit {type(result).__name__}")


# --- SVG ---------------------------------------------------------------------

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
_W, _H = 640, 400
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 20, 20, 50
_MAX_POINTS = 2000


def _fmt_tick(v):
    return f"{v:.4g}"


def svg_plot(x, series, xlabel, ylabel):
    """A self-contained SVG line chart of one or more ``(label, y)`` series over ``x``."""
    x = np.asarray(x, dtype=float)
    stride = max(1, int(math.ceil(len(x) / _MAX_POINTS)))
    idx = np.arange(0, len(x), stride)
    if len(x) and idx[-1] != len(x) - 1:
        idx = np.append(idx, len(x) - 1)
    ys = [np.asarray(y, dtype=float)[idx] for _, y in series]
    xs = x[idx]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.array([])
    x0, x1 = (float(xs[0]), float(xs[-1])) if len(xs) else (0.0, 1.0)
    y0, y1 = (float(finite.min()), float(finite.max())) if len(finite) else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        pad = abs(y0) * 0.1 or 1.0
        y0, y1 = y0 - pad, y1 + pad
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def px(v):
        return _LEFT + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _TOP + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
           f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        out.append(f'<text x="{px(xv):.1f}" y="{_TOP + ph + 16}" text-anchor="middle">'
                   f'{_fmt_tick(xv)}</text>')
        out.append(f'<text x="{_LEFT - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">'
                   f'{_fmt_tick(yv)}</text>')
    out.append(f'<text x="{_LEFT + pw / 2:.1f}" y="{_H - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{_TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_TOP + ph / 2:.1f})">{ylabel}</text>')
    for n, ((label, _), y) in enumerate(zip(series, ys)):
        colour = _COLOURS[n % len(_COLOURS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(xs, y) if math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{pts}"/>')
        out.append(f'<text x="{_LEFT + 8}" y="{_TOP + 16 + 14 * n}" fill="{colour}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

