"""Elastic-collision algebra and feasibility diagnostics.

Each reflection history ("path") is a composition of 1D elastic two-body
collisions between one particle and the mirror, expressed as a linear map on
the velocity triple (v1, V, v2).  The same maps, conjugated by the mass
matrix, act on wavevectors; their transposes act on coordinates in the
wavegroup module.  Keeping one source of truth for the maps guarantees the
feasibility numbers (kick ratio R, substate separation, fringe spacing)
can never drift from the interference computations that use them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .model import HBAR_SI, KB_SI, NATURAL, PLANCK_SI, SI, PathId, SystemConfig


def collide(m: float, M: float, v: float, V: float) -> tuple:
    """Final velocities (v', V') of a 1D elastic collision.

    The unique nontrivial solution conserving momentum m*v + M*V and kinetic
    energy; equivalently, the relative velocity reverses sign exactly:
    v' - V' = -(v - V).
    """
    if m <= 0 or M <= 0:
        raise ConfigError(f"masses must be positive, got m={m!r}, M={M!r}")
    s = m + M
    return ((m - M) * v + 2.0 * M * V) / s, ((M - m) * V + 2.0 * m * v) / s


def collision_matrix(m: float, M: float) -> np.ndarray:
    """2x2 matrix form of :func:`collide` acting on the pair (v, V).

    An involution with determinant -1: applying the same collision twice is
    the identity, and the map reverses orientation in velocity space while
    preserving the kinetic-energy metric diag(m, M).
    """
    if m <= 0 or M <= 0:
        raise ConfigError(f"masses must be positive, got m={m!r}, M={M!r}")
    s = m + M
    return np.array(
        [[(m - M) / s, 2.0 * M / s], [2.0 * m / s, (M - m) / s]], dtype=float
    )


@dataclass(frozen=True)
class CollisionMap:
    """A single particle-mirror collision block and the masses it came from."""

    matrix: np.ndarray
    m: float
    M: float

    @classmethod
    def build(cls, m: float, M: float) -> "CollisionMap":
        return cls(matrix=collision_matrix(m, M), m=m, M=M)


def _embedded(block: np.ndarray, rows: tuple) -> np.ndarray:
    """Embed a 2x2 collision block into a 3x3 identity on the given coords."""
    out = np.eye(3)
    i, j = rows
    out[i, i] = block[0, 0]
    out[i, j] = block[0, 1]
    out[j, i] = block[1, 0]
    out[j, j] = block[1, 1]
    return out


def velocity_map(config: SystemConfig, path: PathId) -> np.ndarray:
    """3x3 linear map on (v1, V, v2) for one reflection history.

    Sequential histories compose literally: the first collision updates the
    mirror velocity seen by the second.  P2 and P3 reverse orientation
    (det -1); P1, P4, P5 preserve it (det +1).
    """
    m1, M, m2 = config.masses
    c1 = _embedded(collision_matrix(m1, M), rows=(0, 1))  # particle 1 vs mirror
    c2 = _embedded(collision_matrix(m2, M), rows=(2, 1))  # particle 2 vs mirror
    path = PathId(path)
    if path == PathId.P1_incident:
        return np.eye(3)
    if path == PathId.P2_refl1:
        return c1
    if path == PathId.P3_refl2:
        return c2
    if path == PathId.P4_refl1_then_2:
        return c2 @ c1
    return c1 @ c2  # P5_refl2_then_1


@dataclass(frozen=True)
class PathKinematics:
    """Velocity/wavevector maps and conserved totals for one path."""

    path: PathId
    velocity_map: np.ndarray
    wavevector_map: np.ndarray
    final_velocities: tuple
    conserved_p: float
    conserved_E: float


def path_kinematics(config: SystemConfig, path: PathId) -> PathKinematics:
    """Assemble the full kinematic record for one path.

    The wavevector map is the velocity map conjugated by D = diag(m1, M, m2)
    / hbar, so it shares the velocity map's determinant and leaves the free
    dispersion hbar*(k1^2/2m1 + K^2/2M + k2^2/2m2) invariant.
    """
    vmap = velocity_map(config, path)
    masses = np.array(config.masses)
    d = masses / config.hbar
    wmap = (d[:, None] * vmap) / d[None, :]
    v0 = np.array([b.v0 for b in config.bodies])
    vf = vmap @ v0
    return PathKinematics(
        path=PathId(path),
        velocity_map=vmap,
        wavevector_map=wmap,
        final_velocities=tuple(vf),
        conserved_p=float(masses @ vf),
        conserved_E=float(0.5 * masses @ vf**2),
    )


def fringe_spacing(m: float, v: float, V: float, hbar: float = 1.0) -> float:
    """Spatial period pi*hbar/(m*|V-v|) of the reflection interference.

    This is the distance in x - X over which the relative phase
    2m(V-v)(x-X)/hbar between incident and reflected terms advances by 2*pi;
    for a static mirror it equals half the particle's de Broglie wavelength.
    """
    if m <= 0:
        raise ConfigError(f"mass must be positive, got {m!r}")
    if v == V:
        raise ConfigError("no reflection kick: v equals V")
    return math.pi * hbar / (m * abs(V - v))


def coherence_length_thermal(M: float, T: float, unit_system: str = SI) -> float:
    """Thermal coherence length h/sqrt(2*M*kB*T) of a body of mass M.

    In natural units h = 2*pi and kB = 1 by convention.  T = 0 returns +inf
    (infinite coherence) rather than overflowing; negative inputs are
    rejected.
    """
    if M <= 0:
        raise ConfigError(f"mass must be positive, got {M!r}")
    if T < 0:
        raise ConfigError(f"temperature must be >= 0, got {T!r}")
    if T == 0:
        return math.inf
    if unit_system == SI:
        h, kb = PLANCK_SI, KB_SI
    elif unit_system == NATURAL:
        h, kb = 2.0 * math.pi, 1.0
    else:
        raise ConfigError(f"unknown unit system {unit_system!r}")
    return h / math.sqrt(2.0 * M * kb * T)


def ratio_R(config: SystemConfig, path: PathId) -> float:
    """Mirror wavevector kick over mirror wavevector spread, |dK| * 2*sigma_x.

    Gauges whether the mirror's reflected and unreflected substates are
    resolvable in momentum; the spread convention sigma_K = 1/(2*sigma_x)
    matches the coherence-length convention l_c = 2*sigma_x.
    """
    path = PathId(path)
    if path == PathId.P1_incident:
        raise ConfigError("ratio_R undefined for the unreflected path (no kick)")
    kin = path_kinematics(config, path)
    k0 = np.array([b.kbar(config.hbar) for b in config.bodies])
    delta_k = (kin.wavevector_map @ k0 - k0)[1]
    sigma_k = 1.0 / (2.0 * config.mirror.sigma_x)
    return abs(delta_k) / sigma_k


def substate_separation(config: SystemConfig, path: PathId, t: float) -> float:
    """Distance |V'_path - V| * t between kicked and unkicked mirror centers."""
    if t < 0:
        raise ConfigError(f"time since collision must be >= 0, got {t!r}")
    kin = path_kinematics(config, PathId(path))
    return abs(kin.final_velocities[1] - config.mirror.v0) * t


def shortest_fringe_period(config: SystemConfig, axis: int) -> float:
    """Shortest beat period along one coordinate axis, 2*pi/max|dk_axis|.

    The maximum runs over pairs of active paths (nonzero amplitude product);
    returns +inf when no pair produces a wavevector difference along the
    axis, i.e. nothing oscillates there.  Grid builders use this for their
    sampling-density checks.
    """
    k0 = np.array([b.kbar(config.hbar) for b in config.bodies])
    kf = [path_kinematics(config, p).wavevector_map @ k0 for p in PathId]
    active = [p for p in PathId if config.amplitudes[p] != 0.0]
    dk_max = 0.0
    for i, p in enumerate(active):
        for q in active[i + 1:]:
            dk_max = max(dk_max, abs(kf[p][axis] - kf[q][axis]))
    if dk_max == 0.0:
        return math.inf
    return 2.0 * math.pi / dk_max
