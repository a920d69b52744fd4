"""Independent split-step spectral oracle.

Evolves the two-body (x1, X) -- optionally three-body -- Schrödinger equation
on a periodic grid with a stiff narrow Gaussian barrier standing in for the
contact interaction.  The barrier depends only on the relative coordinate
(x1 - X), so the "moving mirror" needs no moving potential: mirror motion
lives entirely in the X kinetic term.

This module deliberately knows nothing about the closed-form five-path
construction: it imports only the elastic-collision algebra (for resolution
bounds), the packet initial condition, and the Field container.  Agreement
between the two engines is therefore evidence, not circularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.integrate import solve_ivp

from .errors import ConfigError, GridError, NumericsError
from .field import Axis, Field
from .kinematics import collide, fringe_spacing
from .wavegroup import GaussianPacket1D, packet_eval

_BOUNDARY_MASS_TOL = 1e-10
_KAPPA_DX_SOFT = 3.5


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec2D:
    """Periodic (x1, X) grid: extents, power-of-two point counts, dt, steps."""

    x1_extent: tuple  # (min, max)
    xm_extent: tuple
    n1: int
    nm: int
    dt: float
    steps: int

    def __post_init__(self):
        for name, (lo, hi) in (("x1", self.x1_extent), ("X", self.xm_extent)):
            if not hi > lo:
                raise GridError(f"{name} extent must have max > min")
        for name, n in (("n1", self.n1), ("nm", self.nm)):
            if not _is_pow2(n):
                raise GridError(f"{name} must be a power of two >= 2, got {n}")
        if not self.dt > 0:
            raise GridError("dt must be positive")
        if self.steps < 1:
            raise GridError("steps must be >= 1")

    @property
    def dx(self) -> tuple:
        return (
            (self.x1_extent[1] - self.x1_extent[0]) / self.n1,
            (self.xm_extent[1] - self.xm_extent[0]) / self.nm,
        )

    def coords(self) -> tuple:
        d1, dm = self.dx
        return (
            self.x1_extent[0] + d1 * np.arange(self.n1),
            self.xm_extent[0] + dm * np.arange(self.nm),
        )


@dataclass(frozen=True)
class GridSpec3D:
    """Periodic (x1, X, x2) grid for the optional three-body runs."""

    x1_extent: tuple
    xm_extent: tuple
    x2_extent: tuple
    n1: int
    nm: int
    n2: int
    dt: float
    steps: int

    def __post_init__(self):
        for name, (lo, hi) in (
            ("x1", self.x1_extent),
            ("X", self.xm_extent),
            ("x2", self.x2_extent),
        ):
            if not hi > lo:
                raise GridError(f"{name} extent must have max > min")
        for name, n in (("n1", self.n1), ("nm", self.nm), ("n2", self.n2)):
            if not _is_pow2(n):
                raise GridError(f"{name} must be a power of two >= 2, got {n}")
        if not self.dt > 0:
            raise GridError("dt must be positive")
        if self.steps < 1:
            raise GridError("steps must be >= 1")

    @property
    def dx(self) -> tuple:
        return (
            (self.x1_extent[1] - self.x1_extent[0]) / self.n1,
            (self.xm_extent[1] - self.xm_extent[0]) / self.nm,
            (self.x2_extent[1] - self.x2_extent[0]) / self.n2,
        )

    def coords(self) -> tuple:
        d = self.dx
        return (
            self.x1_extent[0] + d[0] * np.arange(self.n1),
            self.xm_extent[0] + d[1] * np.arange(self.nm),
            self.x2_extent[0] + d[2] * np.arange(self.n2),
        )


@dataclass(frozen=True)
class BarrierModel:
    """Narrow Gaussian barrier V(u) = V0 exp(-u^2 / 2 w^2) on a contact coordinate."""

    V0: float
    w: float

    def __post_init__(self):
        if not self.V0 > 0 or not self.w > 0:
            raise ConfigError("barrier needs V0 > 0 and w > 0")

    def __call__(self, u):
        return self.V0 * np.exp(-(np.asarray(u) ** 2) / (2.0 * self.w**2))


def validate_barrier(
    barrier: BarrierModel,
    m1: float,
    mm: float,
    v1: float,
    vm: float,
    hbar: float = 1.0,
):
    """Stiffness bounds: V0 >= 1e3 x incident KE; w <= fringe spacing / 10.

    Raises ConfigError on violation.  Returns the evanescent wavevector
    kappa = sqrt(2 mu V0)/hbar for resolution checks.
    """
    ke = max(0.5 * m1 * v1**2, 0.5 * mm * vm**2)
    if barrier.V0 < 1e3 * ke:
        raise ConfigError(
            f"barrier too soft: V0={barrier.V0:g} < 1e3 x incident KE {ke:g}"
        )
    fringe = fringe_spacing(m1, v1, vm, hbar)
    if barrier.w > fringe / 10.0:
        raise ConfigError(
            f"barrier too wide: w={barrier.w:g} > fringe/10 = {fringe / 10.0:g}"
        )
    mu = m1 * mm / (m1 + mm)
    return math.sqrt(2.0 * mu * barrier.V0) / hbar


@dataclass
class OracleRun:
    """Evolution product: snapshot wavefunctions plus bookkeeping."""

    times: list  # actual snapshot times (multiples of dt)
    psis: list  # complex (n1, nm) snapshots
    fields: list  # |psi|^2 Fields on the same grid
    norms: np.ndarray
    energies: np.ndarray
    absorbed: float
    grid: object


def _ring_mass(prob: np.ndarray, cell: float) -> float:
    edge = (
        prob[:2, :].sum() + prob[-2:, :].sum()
        + prob[2:-2, :2].sum() + prob[2:-2, -2:].sum()
    )
    return float(edge * cell)


def _edge_mask(coords: np.ndarray, pad: float) -> np.ndarray:
    """cos^2 absorbing ramp over `pad` length at both ends of one axis."""
    lo, hi = coords[0], coords[-1]
    m = np.ones_like(coords)
    left = coords < lo + pad
    right = coords > hi - pad
    m[left] = np.sin(0.5 * np.pi * (coords[left] - lo) / pad) ** 2
    m[right] = np.sin(0.5 * np.pi * (hi - coords[right]) / pad) ** 2
    return m


def _snap_steps(times, dt: float, max_steps: int):
    steps = []
    for t in times:
        k = int(round(t / dt))
        if k < 0:
            raise GridError("snapshot times must be >= 0")
        if k > max_steps:
            raise GridError(
                f"snapshot at t={t:g} needs {k} steps > grid.steps={max_steps}"
            )
        steps.append(k)
    if steps != sorted(steps):
        raise GridError("snapshot times must be non-decreasing")
    return steps


def evolve_2body(
    p1: GaussianPacket1D,
    pm: GaussianPacket1D,
    grid: GridSpec2D,
    barrier,
    snapshot_times,
    hbar: float = 1.0,
    absorbing: bool = False,
    absorb_pad: float = 0.0,
    config_hash_bytes: bytes = bytes(32),
) -> OracleRun:
    """Strang split-step evolution of psi(x1, X) from a two-packet product.

    barrier : BarrierModel on (x1 - X), or None for free propagation.
    Snapshot times are snapped to the nearest step; the actual times are
    returned.  Preconditions (resolution, kinetic phase per step, initial
    boundary mass) reject bad grids before any stepping.
    """
    d1, dm = grid.dx
    c1, cm = grid.coords()

    # --- resolution preconditions -----------------------------------------
    v1p, vmp = collide(p1.mass, pm.mass, hbar * p1.kbar / p1.mass,
                       hbar * pm.kbar / pm.mass)
    kmax1 = max(abs(p1.kbar), abs(p1.mass * v1p / hbar)) + 3.0 / p1.sigma_x
    kmaxm = max(abs(pm.kbar), abs(pm.mass * vmp / hbar)) + 3.0 / pm.sigma_x
    for name, dx_, kmax in (("x1", d1, kmax1), ("X", dm, kmaxm)):
        lam = 2.0 * math.pi / kmax
        if dx_ > lam / 16.0:
            raise GridError(
                f"{name} spacing {dx_:.4g} under-resolves the shortest de "
                f"Broglie wavelength {lam:.4g} (need >= 16 points per wavelength)"
            )
    phase1 = hbar * (math.pi / d1) ** 2 / (2.0 * p1.mass) * grid.dt
    phasem = hbar * (math.pi / dm) ** 2 / (2.0 * pm.mass) * grid.dt
    if max(phase1, phasem) >= math.pi / 4.0:
        raise GridError(
            f"kinetic phase per step {max(phase1, phasem):.3g} >= pi/4; shrink dt"
        )
    if barrier is not None:
        kappa = validate_barrier(
            barrier, p1.mass, pm.mass,
            hbar * p1.kbar / p1.mass, hbar * pm.kbar / pm.mass, hbar,
        )
        if kappa * max(d1, dm) > _KAPPA_DX_SOFT:
            import warnings

            warnings.warn(
                f"evanescent scale 1/kappa = {1.0 / kappa:.3g} is below the grid "
                f"spacing (kappa*dx = {kappa * max(d1, dm):.2f}); interior "
                "barrier decay is under-resolved (reflection phase is still "
                "bounded by the turning-point scale)",
                stacklevel=2,
            )

    # --- initial state ------------------------------------------------------
    psi = np.outer(packet_eval(p1, c1, 0.0, hbar), packet_eval(pm, cm, 0.0, hbar))
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    cell = d1 * dm
    prob = np.real(psi * np.conj(psi))
    total0 = float(prob.sum() * cell)
    if _ring_mass(prob, cell) / total0 > _BOUNDARY_MASS_TOL:
        raise GridError(
            "initial state touches the grid boundary (edge mass above 1e-10); "
            "enlarge the box"
        )

    # --- propagators ---------------------------------------------------------
    k1 = 2.0 * math.pi * sfft.fftfreq(grid.n1, d1)
    km = 2.0 * math.pi * sfft.fftfreq(grid.nm, dm)
    kin = hbar * (
        (k1**2 / (2.0 * p1.mass))[:, None] + (km**2 / (2.0 * pm.mass))[None, :]
    )
    half = np.exp(-0.5j * kin * grid.dt)
    full = half * half
    if barrier is not None:
        pot = barrier(c1[:, None] - cm[None, :])
        expv = np.exp(-1j * pot * grid.dt / hbar)
    else:
        pot = None
        expv = None
    mask = None
    if absorbing:
        pad = absorb_pad if absorb_pad > 0 else 0.1 * min(
            grid.x1_extent[1] - grid.x1_extent[0],
            grid.xm_extent[1] - grid.xm_extent[0],
        )
        mask = np.outer(_edge_mask(c1, pad), _edge_mask(cm, pad))

    # --- evolution -------------------------------------------------------------
    want = _snap_steps(snapshot_times, grid.dt, grid.steps)
    axes = (
        Axis(0, c1[0], c1[-1], grid.n1),
        Axis(1, cm[0], cm[-1], grid.nm),
    )
    run = OracleRun([], [], [], np.zeros(len(want)), np.zeros(len(want)), 0.0, grid)
    absorbed = 0.0

    def record(i, step):
        prob = np.real(psi * np.conj(psi))
        nrm = float(prob.sum() * cell)
        psik = sfft.fft2(psi, norm="ortho")
        e_kin = float((kin * np.real(psik * np.conj(psik))).sum() * cell)
        e_pot = 0.0 if pot is None else float((pot * prob).sum() * cell)
        run.times.append(step * grid.dt)
        run.psis.append(psi.copy())
        run.fields.append(
            Field(values=prob, axes=axes, fixed=(), t=step * grid.dt,
                  config_hash=config_hash_bytes)
        )
        run.norms[i] = nrm
        run.energies[i] = (e_kin + e_pot) / nrm

    done = 0
    for i, target in enumerate(want):
        nsteps = target - done
        if nsteps > 0:
            psik = sfft.fft2(psi, norm="ortho")
            psik *= half
            for s in range(nsteps):
                psi = sfft.ifft2(psik, norm="ortho")
                if expv is not None:
                    psi *= expv
                if mask is not None:
                    before = float(np.real(psi * np.conj(psi)).sum() * cell)
                    psi *= mask
                    absorbed += before - float(
                        np.real(psi * np.conj(psi)).sum() * cell
                    )
                psik = sfft.fft2(psi, norm="ortho")
                psik *= full if s < nsteps - 1 else half
            psi = sfft.ifft2(psik, norm="ortho")
            done = target
        record(i, done)
    run.absorbed = absorbed
    return run


def expectation_velocities(
    psi: np.ndarray,
    grid: GridSpec2D,
    m1: float,
    mm: float,
    hbar: float = 1.0,
    region=None,
):
    """Spectral first-moment velocities (<v1>, <V>) of (a region of) psi.

    region : optional boolean mask in position space selecting one lobe
        (e.g. the post-collision packet); the masked state is re-normalized.
    """
    work = psi if region is None else psi * region
    nrm = float(np.real(work * np.conj(work)).sum())
    if nrm <= 0:
        raise NumericsError("empty region in expectation_velocities")
    d1, dm = grid.dx
    k1 = 2.0 * math.pi * sfft.fftfreq(grid.n1, d1)
    km = 2.0 * math.pi * sfft.fftfreq(grid.nm, dm)
    wk = sfft.fft2(work, norm="ortho")
    p2 = np.real(wk * np.conj(wk))
    kbar1 = float((k1[:, None] * p2).sum()) / float(p2.sum())
    kbarm = float((km[None, :] * p2).sum()) / float(p2.sum())
    return hbar * kbar1 / m1, hbar * kbarm / mm


def transmitted_fraction(psi: np.ndarray, grid: GridSpec2D) -> float:
    """Probability mass on the forbidden side x1 > X."""
    c1, cm = grid.coords()
    beyond = c1[:, None] > cm[None, :]
    prob = np.real(psi * np.conj(psi))
    return float(prob[beyond].sum() / prob.sum())


def wall_offset_1d(
    barrier: BarrierModel, mu: float, k: float, hbar: float = 1.0
):
    """Effective hard-wall position of the barrier for a given collision.

    Solves the stationary 1D scattering problem at energy hbar^2 k^2 / 2 mu
    for the relative coordinate u (incident from u < 0), by integrating from
    the transmitted side.  A hard wall at u_w produces r = -exp(2 i k u_w),
    so u_w = arg(-r) / 2k.  Returns (u_w, |r|); |r| should be ~1 for a stiff
    barrier.  Valid while |u_w| << quarter wavelength, guaranteed by the
    barrier width bound w <= fringe/10.
    """
    if k <= 0 or mu <= 0:
        raise ConfigError("wall_offset_1d needs k > 0 and mu > 0")
    e = (hbar * k) ** 2 / (2.0 * mu)
    span = barrier.w * math.sqrt(
        2.0 * max(math.log(barrier.V0 / (1e-14 * e)), 1.0)
    )
    span = max(span, 10.0 * barrier.w)

    def rhs(u, y):
        # y = [Re psi, Im psi, Re psi', Im psi']
        v = barrier.V0 * math.exp(-(u * u) / (2.0 * barrier.w**2))
        f = 2.0 * mu * (v - e) / hbar**2
        return [y[2], y[3], f * y[0], f * y[1]]

    y0 = [math.cos(k * span), math.sin(k * span),
          -k * math.sin(k * span), k * math.cos(k * span)]
    sol = solve_ivp(
        rhs, (span, -span), y0, method="DOP853", rtol=1e-11, atol=1e-13
    )
    if not sol.success:
        raise NumericsError(f"scattering integration failed: {sol.message}")
    psi = sol.y[0, -1] + 1j * sol.y[1, -1]
    dpsi = sol.y[2, -1] + 1j * sol.y[3, -1]
    phase = np.exp(-1j * k * span)  # e^{i k u} at u = -span
    a_coef = 0.5 * (psi + dpsi / (1j * k)) / phase
    b_coef = 0.5 * (psi - dpsi / (1j * k)) * phase
    r = b_coef / a_coef
    u_w = float(np.angle(-r) / (2.0 * k))
    return u_w, float(abs(r))


_MEM_CAP_CELLS = 128**3


def evolve_3body(
    p1: GaussianPacket1D,
    pm: GaussianPacket1D,
    p2: GaussianPacket1D,
    grid: GridSpec3D,
    barriers,
    snapshot_times,
    hbar: float = 1.0,
    reference_amplitude=None,
    config_hash_bytes: bytes = bytes(32),
):
    """Three-body split-step run on (x1, X, x2); desk-scale (<= 128^3 cells).

    barriers : (BarrierModel on x1-X, BarrierModel on X-x2), either may be
        None.  reference_amplitude : optional callable(points (n,3), t) ->
        complex amplitudes; when given, each snapshot records the fidelity
        |<ref|psi>|^2 / (|ref|^2 |psi|^2) in ``fidelities``.
    """
    cells = grid.n1 * grid.nm * grid.n2
    if cells > _MEM_CAP_CELLS:
        need = cells * 16 / 2**20
        raise GridError(
            f"3-body grid of {cells} cells exceeds the {_MEM_CAP_CELLS} cap "
            f"(would need ~{need:.0f} MiB per array)"
        )
    d1, dm, d2 = grid.dx
    c1, cm, c2 = grid.coords()
    cell = d1 * dm * d2

    psi = (
        packet_eval(p1, c1, 0.0, hbar)[:, None, None]
        * packet_eval(pm, cm, 0.0, hbar)[None, :, None]
        * packet_eval(p2, c2, 0.0, hbar)[None, None, :]
    ).astype(np.complex128)
    prob = np.real(psi * np.conj(psi))
    total0 = float(prob.sum() * cell)
    edge = (
        prob[:2].sum() + prob[-2:].sum()
        + prob[:, :2].sum() + prob[:, -2:].sum()
        + prob[:, :, :2].sum() + prob[:, :, -2:].sum()
    )
    if edge * cell / total0 > _BOUNDARY_MASS_TOL:
        raise GridError("initial 3-body state touches the grid boundary")

    k1 = 2.0 * math.pi * sfft.fftfreq(grid.n1, d1)
    km = 2.0 * math.pi * sfft.fftfreq(grid.nm, dm)
    k2 = 2.0 * math.pi * sfft.fftfreq(grid.n2, d2)
    kin = hbar * (
        (k1**2 / (2.0 * p1.mass))[:, None, None]
        + (km**2 / (2.0 * pm.mass))[None, :, None]
        + (k2**2 / (2.0 * p2.mass))[None, None, :]
    )
    half = np.exp(-0.5j * kin * grid.dt)
    full = half * half
    b1, b2 = barriers if barriers is not None else (None, None)
    pot = np.zeros(psi.shape)
    if b1 is not None:
        pot += b1(c1[:, None, None] - cm[None, :, None])
    if b2 is not None:
        pot += b2(cm[None, :, None] - c2[None, None, :])
    expv = np.exp(-1j * pot * grid.dt / hbar) if (b1 or b2) else None

    want = _snap_steps(snapshot_times, grid.dt, grid.steps)
    axes = (
        Axis(0, c1[0], c1[-1], grid.n1),
        Axis(1, cm[0], cm[-1], grid.nm),
        Axis(2, c2[0], c2[-1], grid.n2),
    )
    run = OracleRun([], [], [], np.zeros(len(want)), np.zeros(len(want)), 0.0, grid)
    run.fidelities = []

    pts = None
    if reference_amplitude is not None:
        g1, gm, g2 = np.meshgrid(c1, cm, c2, indexing="ij")
        pts = np.column_stack([g1.ravel(), gm.ravel(), g2.ravel()])

    done = 0
    for i, target in enumerate(want):
        nsteps = target - done
        if nsteps > 0:
            psik = sfft.fftn(psi, norm="ortho")
            psik *= half
            for s in range(nsteps):
                psi = sfft.ifftn(psik, norm="ortho")
                if expv is not None:
                    psi *= expv
                psik = sfft.fftn(psi, norm="ortho")
                psik *= full if s < nsteps - 1 else half
            psi = sfft.ifftn(psik, norm="ortho")
            done = target
        prob = np.real(psi * np.conj(psi))
        nrm = float(prob.sum() * cell)
        psik = sfft.fftn(psi, norm="ortho")
        e_kin = float((kin * np.real(psik * np.conj(psik))).sum() * cell)
        e_pot = float((pot * prob).sum() * cell)
        run.times.append(done * grid.dt)
        run.psis.append(psi.copy())
        run.fields.append(
            Field(values=prob, axes=axes, fixed=(), t=done * grid.dt,
                  config_hash=config_hash_bytes)
        )
        run.norms[i] = nrm
        run.energies[i] = (e_kin + e_pot) / nrm
        if pts is not None:
            ref = reference_amplitude(pts, done * grid.dt).reshape(psi.shape)
            run.fidelities.append(fidelity(ref, psi))
    return run


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 / (<a|a><b|b>) on a shared grid (cell volumes cancel)."""
    num = abs(np.vdot(a, b)) ** 2
    den = float(np.real(np.vdot(a, a)) * np.real(np.vdot(b, b)))
    if den == 0:
        raise NumericsError("fidelity of a null state")
    return float(num / den)


def compare_fields(a: Field, b: Field):
    """(l2_rel, period_rel) between two PDFs on identical grids.

    Both fields are normalized to unit mass first, so overall scale never
    matters.  The period comparison runs on the anti-diagonal slice through
    the peak of ``a``; a missing fringe on either side yields period_rel =
    nan (callers treat that as failure, we do not invent a period).
    """
    if a.axes != b.axes:
        raise GridError("compare_fields needs identical grids")
    if a.ndim != 2:
        raise GridError("compare_fields works on 2D fields")
    pa = a.values / a.integrate()
    pb = b.values / b.integrate()
    l2 = float(np.linalg.norm(pa - pb) / np.linalg.norm(pa))

    from .analysis import fringe_period

    i0, j0 = np.unravel_index(int(np.argmax(pa)), pa.shape)
    sa, ds = a.antidiagonal_slice((int(i0), int(j0)))
    sb, _ = b.antidiagonal_slice((int(i0), int(j0)))
    if sa.size < 8:
        # peak too close to a grid corner for a usable slice
        return l2, math.nan
    ta = fringe_period(sa, ds)
    tb = fringe_period(sb, ds)
    if ta is None or tb is None or ta == 0:
        return l2, math.nan
    return l2, float(abs(ta - tb) / ta)
