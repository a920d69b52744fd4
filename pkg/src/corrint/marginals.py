"""Marginal PDFs: integrate the joint density over unmeasured coordinates.

The reduction chain PDF(x1, X, x2) -> PDF(x1, x2) -> PDF(x1) uses one
quadrature rule (batched adaptive Simpson) with per-cell error flags; the
mirror integral runs over the physical ordering interval (x1, x2)
intersected with the active envelope support, so tail mass outside the
ordered domain (already bounded at build time) is never counted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, GridError
from .field import Field
from .model import config_hash
from .quadrature import integrate_batch
from .wavegroup import (
    WavegroupState,
    _amplitude_flat,
    _normalize_axes,
    _panels,
    axis_windows,
    envelope_box,
)


@dataclass(frozen=True)
class Quadrature:
    """Quadrature request: absolute tolerance and subdivision depth cap."""

    abs_tol: float = 1e-8
    max_depth: int = 24
    rule: str = "adaptive_simpson"

    def __post_init__(self):
        if self.rule != "adaptive_simpson":
            raise ConfigError(f"unknown quadrature rule {self.rule!r}")
        if not self.abs_tol > 0:
            raise ConfigError("quadrature abs_tol must be positive")
        if self.max_depth < 1:
            raise ConfigError("quadrature max_depth must be >= 1")


@dataclass
class MarginalResult:
    """A marginal Field plus per-cell quadrature diagnostics."""

    field: Field
    converged: np.ndarray  # bool, same shape as field.values
    errors: np.ndarray  # error estimates, same shape

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def _pdf_flat(state: WavegroupState, pts: np.ndarray, t: float) -> np.ndarray:
    amp = _amplitude_flat(state, pts, t)
    return np.real(amp * np.conj(amp))


def marginal_over_mirror(
    state: WavegroupState,
    t: float,
    x1_axis,
    x2_axis,
    q: Quadrature = Quadrature(),
) -> MarginalResult:
    """PDF(x1, x2; t) = integral of the joint PDF over the mirror coordinate.

    Integration window per cell: the mirror's active support intersected
    with (x1, x2).  Cells that fail to converge within q.max_depth keep
    their best estimate and are flagged, not fatal.
    """
    x1_axis, x2_axis = _normalize_axes([x1_axis, x2_axis])
    if (x1_axis.axis_id, x2_axis.axis_id) != (0, 2):
        raise GridError("marginal_over_mirror needs an x1 axis and an x2 axis")
    c1 = x1_axis.coords()
    c2 = x2_axis.coords()
    g1, g2 = np.meshgrid(c1, c2, indexing="ij")
    x1f = g1.ravel()
    x2f = g2.ravel()
    if np.any(x1f >= x2f):
        raise GridError("every (x1, x2) cell must satisfy x1 < x2")

    wlo, whi = axis_windows(state, t, 1, {0: x1f, 2: x2f})
    lo = np.maximum(wlo, x1f)
    hi = np.minimum(whi, x2f)

    def f(cells, xs):
        pts = np.empty((xs.shape[0], 3))
        pts[:, 0] = x1f[cells]
        pts[:, 1] = xs
        pts[:, 2] = x2f[cells]
        return _pdf_flat(state, pts, t)

    vals, errs, ok = integrate_batch(
        f, lo, hi, abs_tol=q.abs_tol, max_depth=q.max_depth,
        min_intervals=_panels(state, 1, lo, hi),
    )
    shape = (x1_axis.n, x2_axis.n)
    field = Field(
        values=vals.reshape(shape),
        axes=(x1_axis, x2_axis),
        fixed=(),
        t=t,
        config_hash=config_hash(state.config),
    )
    return MarginalResult(field, ok.reshape(shape), errs.reshape(shape))


def marginal_over_mirror_and_p2(
    state: WavegroupState,
    t: float,
    x1_axis,
    q: Quadrature = Quadrature(),
    order: str = "X_first",
) -> MarginalResult:
    """PDF(x1; t): double integral over the mirror and particle-2 coordinates.

    Default order integrates X innermost, then x2 (``order="x2_first"``
    swaps the nesting; the two agree to quadrature tolerance and the swap
    exists for exactly that consistency check).  Inner integrals run at
    abs_tol/100 so the outer tolerance dominates the reported error.
    """
    (x1_axis,) = _normalize_axes([x1_axis])
    if x1_axis.axis_id != 0:
        raise GridError("marginal_over_mirror_and_p2 sweeps the x1 axis")
    if order not in ("X_first", "x2_first"):
        raise GridError(f"unknown integration order {order!r}")
    x1v = x1_axis.coords()
    n = x1v.shape[0]
    box_lo, box_hi = envelope_box(state, t)
    inner_ok = np.ones(n, dtype=bool)
    inner_tol = q.abs_tol * 1e-2

    if order == "X_first":
        olo = np.maximum(np.full(n, box_lo[2]), x1v)
        ohi = np.full(n, box_hi[2])
        outer_axis = 2

        def outer_f(cells, x2s):
            wlo, whi = axis_windows(state, t, 1, {0: x1v[cells], 2: x2s})
            ilo = np.maximum(wlo, x1v[cells])
            ihi = np.minimum(whi, x2s)

            def g(icells, xs):
                pts = np.empty((xs.shape[0], 3))
                pts[:, 0] = x1v[cells[icells]]
                pts[:, 1] = xs
                pts[:, 2] = x2s[icells]
                return _pdf_flat(state, pts, t)

            v, _, ok = integrate_batch(
                g, ilo, ihi, abs_tol=inner_tol, max_depth=q.max_depth,
                min_intervals=_panels(state, 1, ilo, ihi),
            )
            if not ok.all():
                np.logical_and.at(inner_ok, cells[~ok], False)
            return v

    else:
        olo = np.maximum(np.full(n, box_lo[1]), x1v)
        ohi = np.full(n, box_hi[1])
        outer_axis = 1

        def outer_f(cells, xms):
            wlo, whi = axis_windows(state, t, 2, {0: x1v[cells], 1: xms})
            ilo = np.maximum(wlo, xms)
            ihi = whi

            def g(icells, xs):
                pts = np.empty((xs.shape[0], 3))
                pts[:, 0] = x1v[cells[icells]]
                pts[:, 1] = xms[icells]
                pts[:, 2] = xs
                return _pdf_flat(state, pts, t)

            v, _, ok = integrate_batch(
                g, ilo, ihi, abs_tol=inner_tol, max_depth=q.max_depth,
                min_intervals=_panels(state, 2, ilo, ihi),
            )
            if not ok.all():
                np.logical_and.at(inner_ok, cells[~ok], False)
            return v

    vals, errs, ok = integrate_batch(
        outer_f, olo, ohi, abs_tol=q.abs_tol, max_depth=q.max_depth,
        min_intervals=_panels(state, outer_axis, olo, ohi), eval_chunk=8192,
    )
    field = Field(
        values=vals,
        axes=(x1_axis,),
        fixed=(),
        t=t,
        config_hash=config_hash(state.config),
    )
    return MarginalResult(field, ok & inner_ok, errs)
