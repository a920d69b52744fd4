"""Bundled scenario presets.

Each ``.preset`` file is a commented key=value manifest: a full system
config, a sampling grid, output kind, and the metric checks the run is
expected to satisfy at default resolution.  All parameter values are
artifact choices targeting a qualitative regime (heavy slow mirror,
beamsplitter masses, coherence sweep); the comments in each file say how.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from importlib import resources

from ..errors import ConfigError
from ..field import Axis
from ..model import SystemConfig, parse_config

PRESET_NAMES = (
    "fig2",
    "fig3_upper",
    "fig3_lower",
    "fig4",
    "fig5a",
    "fig5b",
    "fig5c",
    "fig5d",
)

_OUTPUTS = ("field", "marginal_x1x2", "marginal_x1")
_AXIS_BY_NAME = {"x1": 0, "X": 1, "x2": 2}
_METRICS = ("visibility", "fringe_period", "ridge_count")
_OPS = ("lt", "gt", "eq", "range", "within_rel")


@dataclass(frozen=True)
class ManifestCheck:
    """One PASS/FAIL metric expectation attached to a preset."""

    label: str
    metric: str            # visibility | fringe_period | ridge_count
    time: float            # which snapshot the metric runs on
    slice_kind: str = "x1_at_X_peak"   # x1_at_X_peak | x1_at_x2 | self
    slice_at: float = 0.0  # x2 value for slice_kind == "x1_at_x2"
    window: str = "half_max"           # half_max | full | "lo:hi"
    period_hint: float = 0.0           # 0 -> let the detector find it
    threshold: float = 0.1             # ridge_count threshold fraction
    op: str = "lt"
    value: float = 0.0     # lt/gt/eq bound, or within_rel reference
    tol: float = 0.0       # within_rel relative tolerance
    lo: float = 0.0        # range bounds
    hi: float = 0.0


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    config: SystemConfig
    output: str
    axes: tuple            # swept Axis objects
    fixed: tuple           # ((axis_id, value), ...)
    times: tuple
    quad_tol: float
    checks: tuple
    wall_offsets: tuple = (0.0, 0.0)
    notes: str = ""


def _parse_axis(name: str, text: str) -> Axis:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid.{name} must be lo:hi:n, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    return Axis(_AXIS_BY_NAME[name], lo, hi, n)


def _parse_preset(text: str, source: str) -> ScenarioPreset:
    pairs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = val

    config_lines = []
    for key in list(pairs):
        if key.startswith("config."):
            config_lines.append(f"{key[len('config.'):]} = {pairs.pop(key)}")
    config = parse_config("\n".join(config_lines), source=f"{source} [config]")

    name = pairs.pop("name")
    output = pairs.pop("output")
    if output not in _OUTPUTS:
        raise ConfigError(f"{source}: unknown output kind {output!r}")

    axes = []
    for ax_name in ("x1", "X", "x2"):
        key = f"grid.{ax_name}"
        if key in pairs:
            axes.append(_parse_axis(ax_name, pairs.pop(key)))
    fixed = []
    for ax_name in ("x1", "X", "x2"):
        key = f"fix.{ax_name}"
        if key in pairs:
            fixed.append((_AXIS_BY_NAME[ax_name], float(pairs.pop(key))))

    times = tuple(float(v) for v in pairs.pop("times").split(","))
    quad_tol = float(pairs.pop("quadrature.abs_tol", "1e-8"))
    offsets = (
        float(pairs.pop("wall_offset.1", "0")),
        float(pairs.pop("wall_offset.2", "0")),
    )

    checks = []
    idx = 1
    while f"check.{idx}.metric" in pairs:
        pre = f"check.{idx}."
        keys = [k for k in pairs if k.startswith(pre)]
        raw = {k[len(pre):]: pairs.pop(k) for k in keys}
        metric = raw.pop("metric")
        if metric not in _METRICS:
            raise ConfigError(f"{source}: check {idx}: unknown metric {metric!r}")
        op = raw.pop("op")
        if op not in _OPS:
            raise ConfigError(f"{source}: check {idx}: unknown op {op!r}")
        checks.append(
            ManifestCheck(
                label=raw.pop("label", f"check{idx}"),
                metric=metric,
                time=float(raw.pop("time", times[0])),
                slice_kind=raw.pop("slice", "x1_at_X_peak"),
                slice_at=float(raw.pop("slice_at", "0")),
                window=raw.pop("window", "half_max"),
                period_hint=float(raw.pop("period_hint", "0")),
                threshold=float(raw.pop("threshold", "0.1")),
                op=op,
                value=float(raw.pop("value", "0")),
                tol=float(raw.pop("tol", "0")),
                lo=float(raw.pop("lo", "0")),
                hi=float(raw.pop("hi", "0")),
            )
        )
        if raw:
            raise ConfigError(
                f"{source}: check {idx}: unknown keys {sorted(raw)}"
            )
        idx += 1

    known = {k for k in pairs if not k.startswith(("check.",))}
    if known:
        raise ConfigError(f"{source}: unknown keys {sorted(known)}")

    return ScenarioPreset(
        name=name,
        config=config,
        output=output,
        axes=tuple(axes),
        fixed=tuple(fixed),
        times=times,
        quad_tol=quad_tol,
        checks=tuple(checks),
        wall_offsets=offsets,
    )


def preset_text(name: str) -> str:
    if name not in PRESET_NAMES:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        )
    return (
        resources.files(__package__).joinpath(f"{name}.preset").read_text("utf-8")
    )


def load_preset(name: str) -> ScenarioPreset:
    preset = _parse_preset(preset_text(name), source=f"{name}.preset")
    if preset.name != name:
        raise ConfigError(f"{name}.preset declares mismatched name {preset.name!r}")
    return preset
