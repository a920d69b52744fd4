"""Preset runner: compute fields, score manifest checks, write artifacts.

A scenario run is deterministic: the same preset (plus the same overrides)
produces byte-identical output files, so repeated runs can be diffed.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import analysis
from .errors import AnalysisError, ConfigError, NumericsError
from .field import Field, write_field, write_field_csv, write_field_pgm
from .marginals import Quadrature, marginal_over_mirror, marginal_over_mirror_and_p2
from .presets import ManifestCheck, ScenarioPreset, _parse_preset, load_preset, preset_text
from .wavegroup import WavegroupState, sample_grid


@dataclass(frozen=True)
class CheckResult:
    label: str
    metric: str
    time: float
    measured: float
    expected: str
    passed: bool


@dataclass
class ScenarioResult:
    name: str
    preset: ScenarioPreset
    snapshots: list          # [(time, Field), ...]
    checks: list             # [CheckResult, ...]
    passed: bool
    written: list            # file paths, in write order


def apply_overrides(text: str, overrides: dict) -> str:
    """Textual key override on preset source; unknown keys are rejected.

    Lines other than the overridden ``key = value`` pairs pass through
    byte-for-byte, so an override equal to the default leaves the parsed
    preset (and therefore the output) identical.
    """
    pending = dict(overrides)
    out = []
    for raw in text.splitlines():
        stripped = raw.split("#", 1)[0].strip()
        if stripped and "=" in stripped:
            key = stripped.partition("=")[0].strip()
            if key in pending:
                out.append(f"{key} = {pending.pop(key)}")
                continue
        out.append(raw)
    for key, value in pending.items():
        # Allow setting keys the preset leaves at their default.
        if not key.startswith(("quadrature.", "wall_offset.", "fix.", "grid.")):
            raise ConfigError(f"override targets unknown preset key {key!r}")
        out.append(f"{key} = {value}")
    return "\n".join(out) + "\n"


def _compute_snapshot(preset: ScenarioPreset, state: WavegroupState,
                      t: float, threads) -> Field:
    if preset.output == "field":
        return sample_grid(state, preset.axes, dict(preset.fixed), t,
                           threads=threads)
    quad = Quadrature(abs_tol=preset.quad_tol)
    if preset.output == "marginal_x1x2":
        result = marginal_over_mirror(state, t, preset.axes[0], preset.axes[1], quad)
    elif preset.output == "marginal_x1":
        result = marginal_over_mirror_and_p2(state, t, preset.axes[0], quad)
    else:
        raise ConfigError(f"unknown output kind {preset.output!r}")
    bad = int(np.size(result.converged) - np.count_nonzero(result.converged))
    if bad:
        raise NumericsError(
            f"{preset.name} @ t={t:g}: {bad} marginal cells failed to reach "
            f"abs_tol={preset.quad_tol:g}"
        )
    return result.field


def _slice_for_check(field: Field, check: ManifestCheck):
    """Returns (values, ds, x1_axis) for the check's 1D slice."""
    if check.slice_kind == "self":
        if field.ndim != 1:
            raise ConfigError("slice 'self' needs a 1D field")
        return field.values.copy(), field.axes[0].step, field.axes[0]
    if field.ndim != 2:
        raise ConfigError(f"slice {check.slice_kind!r} needs a 2D field")
    if check.slice_kind == "x1_at_X_peak":
        _, j = field.peak_index()
        vals, ds = field.line_slice(0, int(j))
        return vals, ds, field.axes[0]
    if check.slice_kind == "x1_at_x2":
        j = field.axes[1].nearest_index(check.slice_at)
        vals, ds = field.line_slice(0, int(j))
        return vals, ds, field.axes[0]
    raise ConfigError(f"unknown slice kind {check.slice_kind!r}")


def _envelope_half_max(vals: np.ndarray, ds: float, period: float):
    """Half-max support of the fringe ENVELOPE (period-smoothed slice).

    A raw half-max window on an oscillatory slice collapses to a single
    fringe lobe; smoothing over ~3 periods first recovers the packet-scale
    support the metrics need.
    """
    width = int(np.ceil(3.0 * period / ds))
    width += 1 - (width % 2)
    if not 3 <= width < vals.size:
        return analysis.half_max_window(vals)
    kernel = np.full(width, 1.0 / width)
    env = np.convolve(vals, kernel, mode="same")
    return analysis.half_max_window(env)


def _window_indices(check: ManifestCheck, axis, n: int):
    if check.window == "half_max":
        return None
    if check.window == "full":
        return (0, n)
    lo_s, _, hi_s = check.window.partition(":")
    try:
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise ConfigError(f"bad window spec {check.window!r}") from None
    i0, i1 = axis.nearest_index(lo), axis.nearest_index(hi)
    if i1 <= i0:
        raise ConfigError(f"empty window {check.window!r}")
    return (i0, i1 + 1)


def evaluate_check(field: Field, check: ManifestCheck) -> CheckResult:
    if check.metric == "ridge_count":
        measured = float(analysis.ridge_count(field.values, check.threshold))
    else:
        vals, ds, axis = _slice_for_check(field, check)
        window = _window_indices(check, axis, vals.size)
        hint = check.period_hint if check.period_hint > 0 else None
        if window is None:
            if hint is not None:
                window = _envelope_half_max(vals, ds, hint)
            else:
                window = analysis.half_max_window(vals)
        if check.metric == "visibility":
            measured = analysis.visibility(vals, window=window, ds=ds,
                                           period_hint=hint)
        elif check.metric == "fringe_period":
            vals = vals[window[0]:window[1]]
            period = analysis.fringe_period(vals, ds)
            if period is None:
                raise AnalysisError(
                    f"{check.label}: no fringe detected where one is required"
                )
            measured = period
        else:
            raise ConfigError(f"unknown metric {check.metric!r}")

    if check.op == "lt":
        passed, expected = measured < check.value, f"< {check.value:g}"
    elif check.op == "gt":
        passed, expected = measured > check.value, f"> {check.value:g}"
    elif check.op == "eq":
        passed, expected = measured == check.value, f"== {check.value:g}"
    elif check.op == "range":
        passed = check.lo <= measured <= check.hi
        expected = f"in [{check.lo:g}, {check.hi:g}]"
    elif check.op == "within_rel":
        passed = abs(measured - check.value) <= check.tol * abs(check.value)
        expected = f"{check.value:.10g} +- {check.tol * 100:g}%"
    else:
        raise ConfigError(f"unknown op {check.op!r}")
    return CheckResult(check.label, check.metric, check.time,
                       float(measured), expected, bool(passed))


def _metrics_csv(result: ScenarioResult) -> str:
    lines = ["label,metric,time,measured,expected,verdict"]
    for c in result.checks:
        expected = c.expected.replace(",", ";")
        lines.append(
            f"{c.label},{c.metric},{c.time:.17g},{c.measured:.17g},"
            f"{expected},{'PASS' if c.passed else 'FAIL'}"
        )
    return "\n".join(lines) + "\n"


def run_scenario(
    name: str,
    overrides: dict | None = None,
    out_dir=None,
    threads=None,
    formats: tuple = ("bin", "pgm"),
) -> ScenarioResult:
    """Run one preset end to end; optionally write its artifact bundle.

    overrides : {preset key: new value-string}; an override equal to the
        default produces byte-identical output.
    formats : subset of {"bin", "csv", "pgm"}.
    """
    if overrides:
        preset = _parse_preset(
            apply_overrides(preset_text(name), overrides),
            source=f"{name}.preset+overrides",
        )
    else:
        preset = load_preset(name)

    state = WavegroupState.from_config(
        preset.config, wall_offsets=preset.wall_offsets
    )
    snapshots = [
        (t, _compute_snapshot(preset, state, t, threads)) for t in preset.times
    ]

    checks = []
    for check in preset.checks:
        matches = [f for t, f in snapshots if math.isclose(t, check.time)]
        if not matches:
            raise ConfigError(
                f"{preset.name}: check {check.label!r} wants t={check.time:g} "
                "which is not among the preset times"
            )
        checks.append(evaluate_check(matches[0], check))
    passed = all(c.passed for c in checks)

    written = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        writers = {"bin": write_field, "csv": write_field_csv,
                   "pgm": write_field_pgm}
        for fmt in formats:
            if fmt not in writers:
                raise ConfigError(f"unknown output format {fmt!r}")
        for t, f in snapshots:
            for fmt in formats:
                path = os.path.join(out_dir, f"{preset.name}_t{t:g}.{fmt}")
                writers[fmt](f, path)
                written.append(path)
        mpath = os.path.join(out_dir, f"{preset.name}_metrics.csv")
        with open(mpath + ".tmp", "w", encoding="utf-8") as fh:
            fh.write(_metrics_csv(ScenarioResult(
                preset.name, preset, snapshots, checks, passed, [])))
        os.replace(mpath + ".tmp", mpath)
        written.append(mpath)

    return ScenarioResult(preset.name, preset, snapshots, checks, passed, written)
