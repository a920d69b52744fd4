"""Sampled density grids with axis metadata, and their file formats.

A Field stores real values on a rectangular grid over one to three of the
coordinates (x1, X, x2), the remaining coordinates being fixed, plus the
evaluation time and a hash of the generating configuration.  Three formats:

* ``.bin``  — lossless little-endian binary, bit-exact round trip;
* ``.csv``  — text export with 17 significant digits (also exact for f64);
* ``.pgm``  — 8-bit binary graymap quick-look, values scaled by the max.

All writes are atomic (temp file + rename) and contain no timestamps, so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import simpson

from .errors import AnalysisError, GridError

MAGIC = b"CORRINTF"
VERSION = 1
AXIS_NAMES = ("x1", "X", "x2")
AXIS_IDS = {name: idx for idx, name in enumerate(AXIS_NAMES)}


@dataclass(frozen=True)
class Axis:
    """One swept coordinate: inclusive [lo, hi] with n evenly spaced nodes."""

    axis_id: int
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.axis_id not in (0, 1, 2):
            raise GridError(f"axis_id must be 0, 1, or 2, got {self.axis_id}")
        if self.n < 1:
            raise GridError(f"axis needs at least 1 node, got {self.n}")
        if self.n == 1:
            if self.hi != self.lo:
                raise GridError(
                    f"single-node axis needs hi == lo, got [{self.lo}, {self.hi}]"
                )
        elif not self.hi > self.lo:
            raise GridError(f"axis needs hi > lo, got [{self.lo}, {self.hi}]")

    @property
    def name(self) -> str:
        return AXIS_NAMES[self.axis_id]

    @property
    def step(self) -> float:
        if self.n == 1:
            return 0.0
        return (self.hi - self.lo) / (self.n - 1)

    def coords(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    def nearest_index(self, value: float) -> int:
        if self.n == 1:
            return 0
        idx = int(round((value - self.lo) / self.step))
        return min(max(idx, 0), self.n - 1)


@dataclass
class Field:
    """Real-valued samples over the axes' tensor grid (row-major)."""

    values: np.ndarray
    axes: tuple
    fixed: tuple = ()
    t: float = 0.0
    config_hash: bytes = dc_field(default=b"\x00" * 32)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.axes = tuple(self.axes)
        self.fixed = tuple((int(a), float(v)) for a, v in self.fixed)
        expected = tuple(ax.n for ax in self.axes)
        if self.values.shape != expected:
            raise GridError(
                f"values shape {self.values.shape} does not match axes {expected}"
            )
        if len(self.config_hash) != 32:
            raise GridError("config_hash must be 32 bytes")

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def integrate(self) -> float:
        """Simpson-rule integral of the samples over the full grid."""
        vals = self.values
        for ax in reversed(self.axes):
            if ax.n == 1:
                raise GridError("cannot integrate over a single-node axis")
            vals = simpson(vals, dx=ax.step, axis=-1)
        return float(vals)

    def line_slice(self, along: int, at_index: int = 0) -> tuple:
        """1D cut varying axis position ``along``; returns (values, step).

        ``at_index`` picks the node of the other axis (2D fields only).
        """
        if self.ndim == 1:
            return self.values.copy(), self.axes[0].step
        if self.ndim != 2:
            raise GridError("line_slice supports 1D and 2D fields")
        if along == 0:
            return self.values[:, at_index].copy(), self.axes[0].step
        return self.values[at_index, :].copy(), self.axes[1].step

    def antidiagonal_slice(self, through: tuple) -> tuple:
        """Cut along the (+1 in axis 0, -1 in axis 1) index direction.

        Passes through the cell ``through``; returns (values, step) where the
        step is the physical distance between consecutive sampled cells.
        """
        if self.ndim != 2:
            raise GridError("antidiagonal_slice needs a 2D field")
        i0, j0 = through
        n0, n1 = self.values.shape
        k_lo = max(-i0, j0 - (n1 - 1))
        k_hi = min(n0 - 1 - i0, j0)
        ks = np.arange(k_lo, k_hi + 1)
        vals = self.values[i0 + ks, j0 - ks]
        ds = float(np.hypot(self.axes[0].step, self.axes[1].step))
        return vals, ds

    def peak_index(self) -> tuple:
        return np.unravel_index(int(np.argmax(self.values)), self.values.shape)


def _atomic_write(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".corrint-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(field: Field, path) -> None:
    """Write the lossless binary form."""
    parts = [MAGIC, struct.pack("<II", VERSION, field.ndim)]
    for ax in field.axes:
        parts.append(struct.pack("<IddQ", ax.axis_id, ax.lo, ax.hi, ax.n))
    parts.append(struct.pack("<I", len(field.fixed)))
    for axis_id, value in field.fixed:
        parts.append(struct.pack("<Id", axis_id, value))
    parts.append(struct.pack("<d", field.t))
    parts.append(field.config_hash)
    payload = np.ascontiguousarray(field.values, dtype="<f8")
    parts.append(payload.tobytes())
    _atomic_write(path, b"".join(parts))


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        data = fh.read()
    off = 0

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(data):
            raise AnalysisError(f"{path}: truncated field file")
        vals = struct.unpack_from(fmt, data, off)
        off += size
        return vals

    if data[:8] != MAGIC:
        raise AnalysisError(f"{path}: bad magic, not a corrint field file")
    off = 8
    version, ndim = take("<II")
    if version != VERSION:
        raise AnalysisError(f"{path}: unsupported field version {version}")
    if not 1 <= ndim <= 3:
        raise AnalysisError(f"{path}: bad axis count {ndim}")
    axes = []
    for _ in range(ndim):
        axis_id, lo, hi, n = take("<IddQ")
        axes.append(Axis(axis_id, lo, hi, int(n)))
    (nfixed,) = take("<I")
    fixed = []
    for _ in range(nfixed):
        axis_id, value = take("<Id")
        fixed.append((axis_id, value))
    (t,) = take("<d")
    if off + 32 > len(data):
        raise AnalysisError(f"{path}: truncated field file")
    config_hash = data[off:off + 32]
    off += 32
    count = int(np.prod([ax.n for ax in axes]))
    expected = count * 8
    if len(data) - off != expected:
        raise AnalysisError(
            f"{path}: payload is {len(data) - off} bytes, expected {expected}"
        )
    values = np.frombuffer(data, dtype="<f8", offset=off, count=count).reshape(
        tuple(ax.n for ax in axes)
    )
    return Field(values.copy(), tuple(axes), tuple(fixed), t, config_hash)


def write_field_csv(field: Field, path) -> None:
    """Text export: header comments, then one row per cell with coordinates."""
    lines = [f"# corrint-field {VERSION}"]
    lines.append(f"# t = {field.t:.17g}")
    lines.append(f"# hash = {field.config_hash.hex()}")
    for ax in field.axes:
        lines.append(f"# axis = {ax.axis_id} {ax.lo:.17g} {ax.hi:.17g} {ax.n}")
    for axis_id, value in field.fixed:
        lines.append(f"# fixed = {axis_id} {value:.17g}")
    lines.append(",".join(ax.name for ax in field.axes) + ",value")
    grids = np.meshgrid(*[ax.coords() for ax in field.axes], indexing="ij")
    flat = [g.ravel() for g in grids] + [field.values.ravel()]
    for row in zip(*flat):
        lines.append(",".join(f"{v:.17g}" for v in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def read_field_csv(path) -> Field:
    axes = []
    fixed = []
    t = 0.0
    config_hash = b"\x00" * 32
    values = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("t ="):
                    t = float(body.partition("=")[2])
                elif body.startswith("hash ="):
                    config_hash = bytes.fromhex(body.partition("=")[2].strip())
                elif body.startswith("axis ="):
                    aid, lo, hi, n = body.partition("=")[2].split()
                    axes.append(Axis(int(aid), float(lo), float(hi), int(n)))
                elif body.startswith("fixed ="):
                    aid, value = body.partition("=")[2].split()
                    fixed.append((int(aid), float(value)))
                continue
            if line[0].isalpha() or line.startswith('"'):
                continue  # column header row
            values.append(float(line.rsplit(",", 1)[1]))
    if not axes:
        raise AnalysisError(f"{path}: no axis metadata found")
    shape = tuple(ax.n for ax in axes)
    count = int(np.prod(shape))
    if len(values) != count:
        raise AnalysisError(f"{path}: {len(values)} rows, expected {count}")
    return Field(
        np.array(values).reshape(shape), tuple(axes), tuple(fixed), t, config_hash
    )


def write_field_pgm(field: Field, path) -> None:
    """8-bit binary graymap quick-look (axis 0 = rows, axis 1 = columns)."""
    vals = field.values
    if vals.ndim == 1:
        vals = vals[None, :]
    elif vals.ndim != 2:
        raise GridError("pgm export supports 1D and 2D fields")
    vmax = float(vals.max())
    scaled = np.zeros(vals.shape, dtype=np.uint8)
    if vmax > 0:
        scaled = np.clip(np.round(vals / vmax * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{vals.shape[1]} {vals.shape[0]}\n255\n".encode("ascii")
    _atomic_write(path, header + scaled.tobytes())
