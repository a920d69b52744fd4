"""Closed-form three-body Gaussian wavegroups with mirror-mediated paths.

The joint wavefunction for (particle 1, mirror, particle 2) on the domain
x1 < X < x2 is a superposition of five terms.  Each term is the free product
of three spreading Gaussian packets evaluated at linearly transformed
coordinates: the transform for a path is the transpose of its wavevector map,
which fixes the relevant contact plane pointwise, so paired terms cancel on
the boundary planes exactly and the superposition satisfies the hard-wall
conditions up to a single quantified residual (the missing sixth,
doubly-recolliding term; see :func:`contact_residual`).

Optional wall offsets displace the two contact planes (x1 - X = c1,
X - x2 = c2); the affine image construction then picks up per-path shifts.
This exists to mirror a soft-barrier reference where the effective reflection
plane sits slightly inside the barrier.
"""

from __future__ import annotations

import dataclasses
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from . import _kernels
from .errors import ConfigError, GridError, NumericsError
from .field import AXIS_NAMES, Axis, Field
from .kinematics import path_kinematics
from .model import PathId, SystemConfig, config_hash
from .quadrature import integrate_batch

_NSIGMA = 8.0


@dataclass(frozen=True)
class GaussianPacket1D:
    """Minimum-uncertainty packet: mean velocity kbar*hbar/mass, width sigma_x."""

    mass: float
    kbar: float
    x0: float
    sigma_x: float

    def tau(self, t: float, hbar: float = 1.0) -> float:
        """Dimensionless spreading time."""
        return hbar * t / (2.0 * self.mass * self.sigma_x**2)

    def sigma_t(self, t: float, hbar: float = 1.0) -> float:
        return self.sigma_x * math.hypot(1.0, self.tau(t, hbar))

    def center(self, t: float, hbar: float = 1.0) -> float:
        return self.x0 + (hbar * self.kbar / self.mass) * t


def packet_eval(packet: GaussianPacket1D, y, t: float, hbar: float = 1.0):
    """Evaluate the free packet at positions ``y`` and time ``t``.

    Unit L2 norm for all t; the phase convention puts the plane-wave factor
    at exp(i kbar (y - x0)) so the t=0 modulus is a pure real Gaussian times
    that carrier.
    """
    y = np.asarray(y, dtype=np.float64)
    p = packet
    tau = p.tau(t, hbar)
    denom = 1.0 + 1j * tau
    pref = (2.0 * np.pi * p.sigma_x**2) ** (-0.25) / np.sqrt(denom)
    vbar = hbar * p.kbar / p.mass
    arg = (
        -((y - p.x0 - vbar * t) ** 2) / (4.0 * p.sigma_x**2 * denom)
        + 1j * p.kbar * (y - p.x0)
        - 1j * hbar * p.kbar**2 * t / (2.0 * p.mass)
    )
    return pref * np.exp(arg)


@dataclass(frozen=True)
class WavegroupState:
    """Frozen five-path superposition: packets + per-path affine coordinate maps."""

    config: SystemConfig
    packets: tuple
    maps: np.ndarray  # (5, 3, 3) coordinate transforms
    shifts: np.ndarray  # (5, 3) affine offsets (zero for walls at contact)
    amplitudes: np.ndarray  # (5,) path weights
    wall_offsets: tuple = (0.0, 0.0)

    @classmethod
    def from_config(
        cls,
        config: SystemConfig,
        amplitudes=None,
        wall_offsets=(0.0, 0.0),
    ) -> "WavegroupState":
        """Build the superposition state for ``config``.

        amplitudes : optional override of the five path weights.
        wall_offsets : (c1, c2) displacing the contact planes to
            x1 - X = c1 and X - x2 = c2.
        """
        if amplitudes is not None:
            config = dataclasses.replace(
                config, amplitudes=tuple(float(a) for a in amplitudes)
            )
        hbar = config.hbar
        packets = tuple(
            GaussianPacket1D(
                mass=b.mass, kbar=b.kbar(hbar), x0=b.x0, sigma_x=b.sigma_x
            )
            for b in config.bodies
        )
        maps = np.empty((5, 3, 3))
        for p in PathId:
            maps[p] = path_kinematics(config, p).wavevector_map.T

        shifts = np.zeros((5, 3))
        c1, c2 = (float(wall_offsets[0]), float(wall_offsets[1]))
        if c1 != 0.0 or c2 != 0.0:
            eye = np.eye(3)
            d1 = np.array([c1, 0.0, 0.0])  # a point of the plane x1 - X = c1
            d2 = np.array([0.0, 0.0, -c2])  # a point of the plane X - x2 = c2
            s2 = (eye - maps[PathId.P2_refl1]) @ d1
            s3 = (eye - maps[PathId.P3_refl2]) @ d2
            shifts[PathId.P2_refl1] = s2
            shifts[PathId.P3_refl2] = s3
            # Composites inherit the shift of the first collision mapped
            # through the second: T4 = T2 T3 acts as x -> T2 (T3 x + s3) + s2.
            shifts[PathId.P4_refl1_then_2] = maps[PathId.P2_refl1] @ s3 + s2
            shifts[PathId.P5_refl2_then_1] = maps[PathId.P3_refl2] @ s2 + s3
        return cls(
            config=config,
            packets=packets,
            maps=maps,
            shifts=shifts,
            amplitudes=np.asarray(config.amplitudes, dtype=np.float64),
            wall_offsets=(c1, c2),
        )

    @property
    def hbar(self) -> float:
        return self.config.hbar

    def kernel_params(self, t: float):
        """Fold packet prefactors into per-path complex amplitudes.

        Returns (amps, maps, shifts, b, c, kbar) ready for the evaluation
        kernel: per coordinate j the packet is
        A_j exp(-(y - b_j)^2 c_j + i kbar_j y) and the product of the three
        A_j (position-independent, complex) is folded into each path weight.
        """
        hbar = self.hbar
        b = np.empty(3)
        c = np.empty(3, dtype=np.complex128)
        kb = np.empty(3)
        pref = 1.0 + 0.0j
        for j, p in enumerate(self.packets):
            tau = p.tau(t, hbar)
            denom = 1.0 + 1j * tau
            pref *= (2.0 * np.pi * p.sigma_x**2) ** (-0.25) / np.sqrt(denom)
            pref *= np.exp(
                -1j * p.kbar * p.x0 - 1j * hbar * p.kbar**2 * t / (2.0 * p.mass)
            )
            b[j] = p.center(t, hbar)
            c[j] = 1.0 / (4.0 * p.sigma_x**2 * denom)
            kb[j] = p.kbar
        amps = self.amplitudes.astype(np.complex128) * pref
        return amps, self.maps, self.shifts, b, c, kb

    def sigma_t(self, t: float) -> np.ndarray:
        return np.array([p.sigma_t(t, self.hbar) for p in self.packets])


def _amplitude_flat(state: WavegroupState, pts: np.ndarray, t: float, out=None):
    amps, maps, shifts, b, c, kb = state.kernel_params(t)
    return _kernels.eval_amplitude(pts, amps, maps, shifts, b, c, kb, out=out)


def _domain_mask(pts: np.ndarray) -> np.ndarray:
    return (pts[:, 0] <= pts[:, 1]) & (pts[:, 1] <= pts[:, 2])


def wavegroup_amplitude(state: WavegroupState, x, t: float):
    """Superposition amplitude at coordinates ``x`` = (..., 3).

    Returns (amplitude, in_domain); points violating x1 <= X <= x2 are still
    evaluated (the closed form extends smoothly) but flagged False.
    """
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 1
    pts = np.ascontiguousarray(x.reshape(-1, 3))
    amp = _amplitude_flat(state, pts, t)
    inside = _domain_mask(pts)
    if scalar:
        return amp[0], bool(inside[0])
    return amp.reshape(x.shape[:-1]), inside.reshape(x.shape[:-1])


def wavegroup_pdf(state: WavegroupState, x, t: float):
    """|amplitude|^2 with the same domain flagging as wavegroup_amplitude."""
    amp, inside = wavegroup_amplitude(state, x, t)
    if isinstance(inside, bool):
        return float(abs(amp) ** 2), inside
    return np.real(amp * np.conj(amp)), inside


def path_term(state: WavegroupState, path: PathId, x, t: float):
    """Single weighted path term a_p * (product of mapped packets)."""
    one_hot = np.zeros(5)
    one_hot[int(path)] = state.amplitudes[int(path)]
    sub = dataclasses.replace(state, amplitudes=one_hot)
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 1
    pts = np.ascontiguousarray(x.reshape(-1, 3))
    amp = _amplitude_flat(sub, pts, t)
    if scalar:
        return amp[0]
    return amp.reshape(x.shape[:-1])


def active_paths(state: WavegroupState):
    return [PathId(p) for p in range(5) if state.amplitudes[p] != 0.0]


def shortest_period_axis(state: WavegroupState, axis: int) -> float:
    """Shortest beat period along one coordinate over the active paths.

    Like kinematics.shortest_fringe_period but honours the state's own
    (possibly overridden) amplitudes.
    """
    kb = np.array([p.kbar for p in state.packets])
    kf = []
    for p in active_paths(state):
        w = path_kinematics(state.config, p).wavevector_map
        kf.append((w @ kb)[axis])
    best = 0.0
    for i in range(len(kf)):
        for j in range(i + 1, len(kf)):
            best = max(best, abs(kf[i] - kf[j]))
    if best == 0.0:
        return math.inf
    return 2.0 * math.pi / best


# ---------------------------------------------------------------------------
# envelope geometry


def path_box(state: WavegroupState, path: PathId, t: float, nsigma: float = _NSIGMA):
    """Axis-aligned box containing the +-nsigma support of one path term.

    The term is a product over mapped coordinates y = T x + s with
    |y_j - b_j| <= nsigma * sigma_j(t); the preimage box follows from
    interval arithmetic on x = T^{-1} (y - s).
    """
    sig = state.sigma_t(t)
    b = np.array([p.center(t, state.hbar) for p in state.packets])
    w = nsigma * sig
    ylo = b - w - state.shifts[int(path)]
    yhi = b + w - state.shifts[int(path)]
    tinv = np.linalg.inv(state.maps[int(path)])
    lo = np.where(tinv > 0, tinv * ylo, tinv * yhi).sum(axis=1)
    hi = np.where(tinv > 0, tinv * yhi, tinv * ylo).sum(axis=1)
    return lo, hi


def envelope_box(state: WavegroupState, t: float, nsigma: float = _NSIGMA):
    """Union of the active path boxes: (lo[3], hi[3])."""
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for p in active_paths(state):
        plo, phi = path_box(state, p, t, nsigma)
        lo = np.minimum(lo, plo)
        hi = np.maximum(hi, phi)
    if not np.all(np.isfinite(lo)):
        raise ConfigError("state has no active paths")
    return lo, hi


def axis_windows(state, t, axis, others, nsigma: float = _NSIGMA):
    """Per-cell support interval along ``axis`` given the other coordinates.

    others : {axis_id: array} for the two remaining coordinates, equal
        lengths n.  Returns (lo, hi) of shape (n,); lo > hi marks cells where
        no active path has support.
    """
    keys = sorted(others)
    arrs = {k: np.asarray(others[k], dtype=np.float64) for k in keys}
    n = arrs[keys[0]].shape[0]
    sig = state.sigma_t(t)
    bc = np.array([p.center(t, state.hbar) for p in state.packets])
    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for p in active_paths(state):
        tmat = state.maps[int(p)]
        s = state.shifts[int(p)]
        plo = np.full(n, -np.inf)
        phi = np.full(n, np.inf)
        alive = np.ones(n, dtype=bool)
        for j in range(3):
            w = nsigma * sig[j]
            rest = s[j] + sum(tmat[j, k] * arrs[k] for k in keys)
            coef = tmat[j, axis]
            if coef == 0.0:
                alive &= np.abs(rest - bc[j]) <= w
                continue
            e1 = (bc[j] - w - rest) / coef
            e2 = (bc[j] + w - rest) / coef
            plo = np.maximum(plo, np.minimum(e1, e2))
            phi = np.minimum(phi, np.maximum(e1, e2))
        ok = alive & (phi > plo)
        lo = np.where(ok, np.minimum(lo, plo), lo)
        hi = np.where(ok, np.maximum(hi, phi), hi)
    return lo, hi


# ---------------------------------------------------------------------------
# grid sampling


_CELL_CAP = 1 << 28
_BLOCK_CELLS = 1 << 20


def _normalize_axes(axes):
    out = []
    for ax in axes:
        if isinstance(ax, Axis):
            out.append(ax)
        else:
            aid, lo, hi, n = ax
            out.append(Axis(axis_id=int(aid), lo=float(lo), hi=float(hi), n=int(n)))
    return tuple(out)


def sample_grid(state: WavegroupState, axes, fixed, t: float, threads=None) -> Field:
    """Sample |Psi|^2 on a tensor grid into a Field.

    axes : Axis objects (or (axis_id, lo, hi, n) tuples), 1-3 of them.
    fixed : {axis_id: value} for the remaining coordinates.
    Warns when an axis step under-resolves the shortest active fringe period
    (fewer than 8 samples per period); refuses grids above 2**28 cells.
    """
    axes = _normalize_axes(axes)
    fixed = {int(k): float(v) for k, v in fixed.items()}
    ids = [ax.axis_id for ax in axes] + sorted(fixed)
    if sorted(ids) != [0, 1, 2]:
        raise GridError(
            f"axes+fixed must cover x1, X, x2 exactly once, got ids {sorted(ids)}"
        )
    cells = 1
    for ax in axes:
        cells *= ax.n
    if cells > _CELL_CAP:
        raise GridError(f"grid has {cells} cells, cap is {_CELL_CAP}")
    for ax in axes:
        period = shortest_period_axis(state, ax.axis_id)
        if math.isfinite(period) and ax.step > period / 8.0:
            warnings.warn(
                f"axis {AXIS_NAMES[ax.axis_id]} step {ax.step:.4g} gives fewer "
                f"than 8 samples per fringe period {period:.4g}",
                stacklevel=2,
            )

    coords = [ax.coords() for ax in axes]
    shape = tuple(ax.n for ax in axes)
    trailing = cells // shape[0]
    out = np.empty(cells, dtype=np.complex128)

    def fill(i0: int, i1: int) -> None:
        mesh = np.meshgrid(coords[0][i0:i1], *coords[1:], indexing="ij")
        m = mesh[0].size
        pts = np.empty((m, 3))
        for aid, val in fixed.items():
            pts[:, aid] = val
        for ax, g in zip(axes, mesh):
            pts[:, ax.axis_id] = g.ravel()
        _amplitude_flat(state, pts, t, out=out[i0 * trailing : i1 * trailing])

    rows_per = max(1, _BLOCK_CELLS // max(trailing, 1))
    nthreads = threads
    if nthreads is None:
        env = os.environ.get("CORRINT_THREADS")
        nthreads = int(env) if env else (os.cpu_count() or 1)
    nthreads = max(1, int(nthreads))
    blocks = [
        (i, min(i + rows_per, shape[0])) for i in range(0, shape[0], rows_per)
    ]
    if nthreads == 1 or len(blocks) == 1:
        for i0, i1 in blocks:
            fill(i0, i1)
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            list(pool.map(lambda blk: fill(*blk), blocks))

    values = np.real(out * np.conj(out)).reshape(shape)
    return Field(
        values=values,
        axes=axes,
        fixed=tuple((k, fixed[k]) for k in sorted(fixed)),
        t=t,
        config_hash=config_hash(state.config),
    )


# ---------------------------------------------------------------------------
# integrals and diagnostics


def norm(state: WavegroupState, t: float, abs_tol: float = 1e-8, max_depth: int = 24):
    """Total probability on the ordered domain x1 < X < x2.

    Nested adaptive quadrature over the active envelope box intersected with
    the ordering constraint.  Raises NumericsError (carrying the best
    estimate) when any level fails to converge within max_depth.
    """
    lo, hi = envelope_box(state, t)
    failures = []

    def inner(mid_cells, mid_x, outer_vals):
        # innermost: integrate over X between x1 and the cell's x2
        def g(cells, xs):
            pts = np.empty((xs.shape[0], 3))
            pts[:, 0] = mid_x[cells]
            pts[:, 1] = xs
            pts[:, 2] = outer_vals[mid_cells[cells]]
            amp = _amplitude_flat(state, pts, t)
            return np.real(amp * np.conj(amp))

        wlo, whi = axis_windows(state, t, 1, {0: mid_x, 2: outer_vals[mid_cells]})
        xlo = np.maximum(np.maximum(mid_x, lo[1]), wlo)
        xhi = np.minimum(np.minimum(outer_vals[mid_cells], hi[1]), whi)
        v, _, ok = integrate_batch(
            g, xlo, xhi, abs_tol=abs_tol * 1e-4, max_depth=max_depth,
            min_intervals=_panels(state, 1, xlo, xhi),
        )
        if not ok.all():
            failures.append("X")
        return v

    # Chunk sizes shrink toward the outside so each nesting level only ever
    # fans out a bounded number of inner worklists at once.

    def mid(cells, x2s):
        del cells  # single outer cell; bounds depend only on the abscissas

        def h(mcells, x1s):
            return inner(mcells, x1s, x2s)

        x1lo = np.full(x2s.shape[0], lo[0])
        x1hi = np.minimum(x2s, hi[0])
        v, _, ok = integrate_batch(
            h, x1lo, x1hi, abs_tol=abs_tol * 1e-2, max_depth=max_depth,
            min_intervals=_panels(state, 0, x1lo, x1hi), eval_chunk=4096,
        )
        if not ok.all():
            failures.append("x1")
        return v

    v, err, ok = integrate_batch(
        lambda cells, xs: mid(cells, xs),
        np.array([lo[2]]),
        np.array([hi[2]]),
        abs_tol=abs_tol,
        max_depth=max_depth,
        min_intervals=_panels(state, 2, np.array([lo[2]]), np.array([hi[2]])),
        eval_chunk=256,
    )
    if not ok.all() or failures:
        raise NumericsError(
            f"norm quadrature did not converge (levels: {sorted(set(failures)) or ['x2']});"
            f" best estimate {v[0]:.12g}"
        )
    return float(v[0])


def _panels(state, axis, wlo, whi):
    """Per-cell initial panel counts: >=8 panels per fringe period, capped."""
    period = shortest_period_axis(state, axis)
    span = np.maximum(np.asarray(whi) - np.asarray(wlo), 0.0)
    if not math.isfinite(period) or period <= 0:
        return np.full(span.shape, 4, dtype=np.int64)
    counts = np.ceil(8.0 * span / period).astype(np.int64)
    return np.clip(counts, 4, 4096)


def initial_leakage(config: SystemConfig) -> float:
    """Probability mass of the t=0 product state outside x1 < X < x2.

    The identity-path product is the initial state up to the small boundary
    corrections; this closed form integrates the Gaussian marginals against
    the ordering constraint.
    """
    b1, bm, b2 = config.bodies

    def integrand(xm):
        pm = math.exp(-((xm - bm.x0) ** 2) / (2 * bm.sigma_x**2)) / (
            math.sqrt(2 * math.pi) * bm.sigma_x
        )
        return pm * ndtr((xm - b1.x0) / b1.sigma_x) * ndtr((b2.x0 - xm) / b2.sigma_x)

    span = 10.0 * bm.sigma_x
    inside, _ = quad(integrand, bm.x0 - span, bm.x0 + span, limit=200)
    return max(0.0, 1.0 - inside)


def contact_residual(state: WavegroupState, t: float, n: int = 256, seed: int = 0):
    """Boundary-condition diagnostics on the two contact planes.

    Samples points on each plane inside the active envelope and reports the
    worst absolute superposition amplitude there (ideally zero) alongside the
    unpaired single-recollision term responsible for it, both relative to the
    peak sampled amplitude.  The superposition cancels pairwise on each plane
    except for one composite term whose partner (a sixth, doubly-recolliding
    path) is not included; these numbers quantify that truncation.
    """
    rng = np.random.default_rng(seed)
    lo, hi = envelope_box(state, t)
    c1, c2 = state.wall_offsets

    out = {}
    for plane, unpaired in (("x1X", PathId.P4_refl1_then_2),
                            ("Xx2", PathId.P5_refl2_then_1)):
        xm = rng.uniform(lo[1], hi[1], size=n)
        if plane == "x1X":
            pts = np.column_stack([xm + c1, xm, rng.uniform(lo[2], hi[2], size=n)])
        else:
            pts = np.column_stack([rng.uniform(lo[0], hi[0], size=n), xm, xm - c2])
        amp = _amplitude_flat(state, np.ascontiguousarray(pts), t)
        term = path_term(state, unpaired, pts, t)
        out[f"plane_{plane}_max_abs"] = float(np.abs(amp).max())
        out[f"plane_{plane}_unpaired_max_abs"] = float(np.abs(term).max())

    # scale reference: peak amplitude over a coarse envelope sample
    probe = rng.uniform(lo, hi, size=(1024, 3))
    probe.sort(axis=1)
    amp = _amplitude_flat(state, np.ascontiguousarray(probe), t)
    out["envelope_peak_abs"] = float(np.abs(amp).max())
    return out
