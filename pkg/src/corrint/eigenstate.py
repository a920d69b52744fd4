"""Plane-wave five-path superposition and the closed-form fringe laws.

Momentum eigenstates make the reflection structure transparent: each path
contributes a plane wave whose wavevector is the collision-mapped incident
triple, all sharing one frequency because the maps conserve kinetic energy.
The heavy-mirror limit of the resulting PDF collapses onto two phases
(alpha, beta) built from the contact distances, for which the closed forms
live in :func:`pdf_closed_form`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError, GridError
from .field import Axis, Field
from .kinematics import path_kinematics
from .model import PathId, SystemConfig, config_hash


@dataclass(frozen=True)
class PhasePair:
    """Contact phases: alpha for the (particle 1, mirror) gap, beta for (mirror, particle 2)."""

    alpha: object
    beta: object


def alpha_beta(config: SystemConfig, x) -> PhasePair:
    """Phases from coordinates: alpha = 2 m1 (V - v1)(x1 - X)/hbar, beta = 2 m2 (V - v2)(X - x2)/hbar."""
    x = np.asarray(x, dtype=np.float64)
    hbar = config.hbar
    p1, mir, p2 = config.bodies
    a = 2.0 * p1.mass * (mir.v0 - p1.v0) * (x[..., 0] - x[..., 1]) / hbar
    b = 2.0 * p2.mass * (mir.v0 - p2.v0) * (x[..., 1] - x[..., 2]) / hbar
    if x.ndim == 1:
        return PhasePair(alpha=float(a), beta=float(b))
    return PhasePair(alpha=a, beta=b)


PDF_KINDS = ("eq1", "eq2_classical", "eq3_marginal", "one_body")


def pdf_closed_form(kind: str, phi: PhasePair):
    """Closed-form limit PDFs on the contact phases.

    eq1 / eq3_marginal : 3/2 - cos(a) - cos(b) + cos(a+b)/2  (the joint law
        and its mirror-marginalized form share one expression; they differ
        only in what alpha and beta are built from).
    eq2_classical : 2 - cos(a) - cos(b), the fixed-potential-mirror result —
        same one-body fringes, no correlation term.
    one_body : 1 - cos(a).
    """
    a = np.asarray(phi.alpha, dtype=np.float64)
    b = np.asarray(phi.beta, dtype=np.float64)
    if kind in ("eq1", "eq3_marginal"):
        out = 1.5 - np.cos(a) - np.cos(b) + 0.5 * np.cos(a + b)
    elif kind == "eq2_classical":
        out = 2.0 - np.cos(a) - np.cos(b)
    elif kind == "one_body":
        out = (1.0 - np.cos(a)) * np.ones_like(b)
    else:
        raise AnalysisError(f"unknown pdf kind {kind!r}; expected one of {PDF_KINDS}")
    out = np.maximum(out, 0.0)
    if np.isscalar(phi.alpha) and np.isscalar(phi.beta):
        return float(out)
    return out


def path_wavevectors(config: SystemConfig, kappa) -> np.ndarray:
    """(5, 3) mapped wavevector triples for incident triple ``kappa``."""
    kappa = np.asarray(kappa, dtype=np.float64)
    out = np.empty((5, 3))
    for p in PathId:
        out[p] = path_kinematics(config, p).wavevector_map @ kappa
    return out


def eigenstate_amplitude(config: SystemConfig, kappa, x, t: float):
    """Five-path plane-wave amplitude at coordinates ``x`` (..., 3).

    Sum over paths of a_p exp(i (W_p kappa) . x) times the common
    exp(-i omega t); omega is path-independent because every collision map
    conserves the kinetic energy sum(hbar^2 k_j^2 / 2 m_j).

    Returns (amplitude, in_domain); out-of-domain points are evaluated but
    flagged False.
    """
    kappa = np.asarray(kappa, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 1
    pts = x.reshape(-1, 3)
    hbar = config.hbar
    masses = np.asarray(config.masses, dtype=np.float64)
    omega = hbar * float(np.sum(kappa**2 / (2.0 * masses)))
    kp = path_wavevectors(config, kappa)  # (5, 3)
    amps = np.asarray(config.amplitudes, dtype=np.complex128)
    phases = pts @ kp.T  # (n, 5)
    amp = (np.exp(1j * phases) @ amps) * np.exp(-1j * omega * t)
    inside = (pts[:, 0] <= pts[:, 1]) & (pts[:, 1] <= pts[:, 2])
    if scalar:
        return amp[0], bool(inside[0])
    return amp.reshape(x.shape[:-1]), inside.reshape(x.shape[:-1])


BASIS_LABELS = (
    "1",
    "cos(alpha)",
    "cos(beta)",
    "cos(alpha+beta)",
    "cos(alpha-beta)",
    "sin(alpha)",
    "sin(beta)",
    "sin(alpha+beta)",
    "sin(alpha-beta)",
)


@dataclass(frozen=True)
class CoefficientFit:
    coefficients: np.ndarray  # (9,) in BASIS_LABELS order
    residual: float  # rms of the fit residual
    basis: tuple = BASIS_LABELS


def coefficient_fit(alpha, beta, values) -> CoefficientFit:
    """Least-squares decomposition of PDF samples on the 9-term phase basis.

    Requires coverage of at least two full periods in each phase and a
    non-degenerate sampling pattern (e.g. points confined to a line
    alpha - beta = const make cos(alpha-beta) collinear with the constant
    and the fit errors out instead of returning garbage).
    """
    a = np.ravel(np.asarray(alpha, dtype=np.float64))
    b = np.ravel(np.asarray(beta, dtype=np.float64))
    v = np.ravel(np.asarray(values, dtype=np.float64))
    if not (a.shape == b.shape == v.shape):
        raise AnalysisError("alpha, beta and values must have matching shapes")
    for name, arr in (("alpha", a), ("beta", b)):
        span = float(arr.max() - arr.min()) if arr.size else 0.0
        if span < 4.0 * math.pi:
            raise AnalysisError(
                f"{name} samples span {span:.3g} rad; need >= 2 periods (4*pi)"
            )
    design = np.column_stack(
        [
            np.ones_like(a),
            np.cos(a),
            np.cos(b),
            np.cos(a + b),
            np.cos(a - b),
            np.sin(a),
            np.sin(b),
            np.sin(a + b),
            np.sin(a - b),
        ]
    )
    sol, _, rank, _ = np.linalg.lstsq(design, v, rcond=None)
    if rank < design.shape[1]:
        raise AnalysisError(
            f"rank-deficient sampling (rank {rank} < {design.shape[1]}); "
            "phases do not independently resolve the basis"
        )
    resid = design @ sol - v
    rms = float(np.sqrt(np.mean(resid**2)))
    return CoefficientFit(coefficients=sol, residual=rms)


_EIG_CELL_CAP = 1 << 24


def sample_eigenstate_grid(
    config: SystemConfig, axes, fixed, t: float, kappa=None
) -> Field:
    """|eigenstate_amplitude|^2 on a tensor grid (CLI backend).

    kappa defaults to the config's central wavevectors.
    """
    from .wavegroup import _normalize_axes  # shared grid plumbing

    axes = _normalize_axes(axes)
    fixed = {int(k): float(v) for k, v in fixed.items()}
    ids = sorted([ax.axis_id for ax in axes] + list(fixed))
    if ids != [0, 1, 2]:
        raise GridError(
            f"axes+fixed must cover x1, X, x2 exactly once, got ids {ids}"
        )
    cells = 1
    for ax in axes:
        cells *= ax.n
    if cells > _EIG_CELL_CAP:
        raise GridError(f"grid has {cells} cells, cap is {_EIG_CELL_CAP}")
    if kappa is None:
        hbar = config.hbar
        kappa = np.array([b.kbar(hbar) for b in config.bodies])
    mesh = np.meshgrid(*[ax.coords() for ax in axes], indexing="ij")
    pts = np.empty((mesh[0].size, 3))
    for aid, val in fixed.items():
        pts[:, aid] = val
    for ax, g in zip(axes, mesh):
        pts[:, ax.axis_id] = g.ravel()
    amp, _ = eigenstate_amplitude(config, kappa, pts, t)
    values = np.real(amp * np.conj(amp)).reshape(tuple(ax.n for ax in axes))
    return Field(
        values=values,
        axes=axes,
        fixed=tuple((k, fixed[k]) for k in sorted(fixed)),
        t=t,
        config_hash=config_hash(config),
    )
