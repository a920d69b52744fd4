"""Physical configuration: bodies, path labels, unit handling, config files.

Every symbol used by the other modules is defined here exactly once.  The
system is three bodies on a line: particle 1 at x1, a movable mirror at X,
particle 2 at x2, constrained to the ordering x1 < X < x2.  Interaction is
hard-wall contact at x1 = X and X = x2, which produces five reflection
histories (paths) whose amplitudes are superposed downstream.

Internally everything runs in natural units (hbar = 1).  SI appears only at
the ingestion/reporting boundary via :func:`to_natural_units` /
:func:`from_natural_units`.
"""

from __future__ import annotations

import enum
import hashlib
import math
import warnings
from dataclasses import dataclass, replace

from .errors import ConfigError

# CODATA 2018 exact values
HBAR_SI = 1.054571817e-34  # J s  (h / 2 pi, rounded to 10 digits)
PLANCK_SI = 6.62607015e-34  # J s
KB_SI = 1.380649e-23  # J / K

NATURAL = "natural"
SI = "si"

_BODY_NAMES = ("particle1", "mirror", "particle2")
_BODY_FIELDS = ("mass", "v0", "x0", "sigma_x")

DEFAULT_AMPLITUDES = (1.0, -1.0, -1.0, 1.0, 1.0)


class PathId(enum.IntEnum):
    """The five reflection histories.

    A sixth history (both particles touching the mirror at the same instant)
    is deliberately absent; its weight shows up only as the quantified
    boundary residual exported by the wavegroup module.
    """

    P1_incident = 0        # nobody reflected
    P2_refl1 = 1           # particle 1 reflected
    P3_refl2 = 2           # particle 2 reflected
    P4_refl1_then_2 = 3    # particle 1 first, then particle 2
    P5_refl2_then_1 = 4    # particle 2 first, then particle 1


@dataclass(frozen=True)
class Body:
    """One body's mass, central velocity, initial center, and packet width."""

    mass: float
    v0: float
    x0: float
    sigma_x: float

    def kbar(self, hbar: float = 1.0) -> float:
        """Central wavevector mass*v0/hbar."""
        return self.mass * self.v0 / hbar


def _check_body(body: Body, name: str) -> None:
    for field in _BODY_FIELDS:
        value = getattr(body, field)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{name}.{field} must be finite, got {value!r}")
    if body.mass <= 0:
        raise ConfigError(f"{name}.mass must be > 0, got {body.mass!r}")
    if body.sigma_x <= 0:
        raise ConfigError(f"{name}.sigma_x must be > 0, got {body.sigma_x!r}")


@dataclass(frozen=True)
class SystemConfig:
    """Three bodies plus path amplitudes and the active unit system.

    ``amplitudes`` holds the five signed path weights indexed by
    :class:`PathId`.  The default (+1, -1, -1, +1, +1) encodes one hard-wall
    sign flip per reflection.
    """

    particle1: Body
    mirror: Body
    particle2: Body
    amplitudes: tuple = DEFAULT_AMPLITUDES
    unit_system: str = NATURAL

    def __post_init__(self):
        for body, name in zip(self.bodies, _BODY_NAMES):
            _check_body(body, name)
        if self.unit_system not in (NATURAL, SI):
            raise ConfigError(
                f"unit_system must be '{NATURAL}' or '{SI}', got {self.unit_system!r}"
            )
        amps = tuple(float(a) for a in self.amplitudes)
        if len(amps) != 5:
            raise ConfigError(f"amplitudes needs exactly 5 entries, got {len(amps)}")
        if not all(math.isfinite(a) for a in amps):
            raise ConfigError(f"amplitudes must be finite, got {amps!r}")
        object.__setattr__(self, "amplitudes", amps)
        if not (self.particle1.x0 < self.mirror.x0 < self.particle2.x0):
            raise ConfigError(
                "initial ordering particle1.x0 < mirror.x0 < particle2.x0 violated: "
                f"{self.particle1.x0}, {self.mirror.x0}, {self.particle2.x0}"
            )
        if not (self.particle1.v0 > self.mirror.v0 and self.particle2.v0 < self.mirror.v0):
            warnings.warn(
                "bodies do not converge (need particle1.v0 > mirror.v0 > particle2.v0); "
                "no reflection will occur",
                stacklevel=2,
            )

    @property
    def bodies(self) -> tuple:
        return (self.particle1, self.mirror, self.particle2)

    @property
    def hbar(self) -> float:
        return 1.0 if self.unit_system == NATURAL else HBAR_SI

    @property
    def masses(self) -> tuple:
        return (self.particle1.mass, self.mirror.mass, self.particle2.mass)


@dataclass(frozen=True)
class UnitScales:
    """SI value of one natural unit of mass, length, and time."""

    mass: float
    length: float
    time: float

    @property
    def velocity(self) -> float:
        return self.length / self.time

    @property
    def energy(self) -> float:
        return self.mass * self.velocity**2


def to_natural_units(config: SystemConfig) -> tuple:
    """Rescale an SI config to natural units (hbar = 1, particle1 mass = 1).

    The length scale is particle1's packet width, so particle1 enters as a
    unit-mass, unit-width packet and every other quantity follows.  Returns
    ``(natural_config, scales)``; pass ``scales`` to
    :func:`from_natural_units` to undo.  Dimensionless observables (fringe
    counts per packet width, visibilities) are invariant under the rescaling.
    """
    if config.unit_system == NATURAL:
        return config, UnitScales(1.0, 1.0, 1.0)
    scales = UnitScales(
        mass=config.particle1.mass,
        length=config.particle1.sigma_x,
        time=config.particle1.mass * config.particle1.sigma_x**2 / HBAR_SI,
    )
    bodies = [
        Body(
            mass=b.mass / scales.mass,
            v0=b.v0 / scales.velocity,
            x0=b.x0 / scales.length,
            sigma_x=b.sigma_x / scales.length,
        )
        for b in config.bodies
    ]
    natural = SystemConfig(*bodies, amplitudes=config.amplitudes, unit_system=NATURAL)
    return natural, scales


def from_natural_units(config: SystemConfig, scales: UnitScales) -> SystemConfig:
    """Invert :func:`to_natural_units` with the scales it returned."""
    if config.unit_system != NATURAL:
        raise ConfigError("from_natural_units expects a natural-units config")
    bodies = [
        Body(
            mass=b.mass * scales.mass,
            v0=b.v0 * scales.velocity,
            x0=b.x0 * scales.length,
            sigma_x=b.sigma_x * scales.length,
        )
        for b in config.bodies
    ]
    return SystemConfig(*bodies, amplitudes=config.amplitudes, unit_system=SI)


# ---------------------------------------------------------------------------
# config file format: flat dotted key=value lines, '#' comments
# ---------------------------------------------------------------------------

_MANDATORY_KEYS = tuple(
    f"{body}.{field}" for body in _BODY_NAMES for field in _BODY_FIELDS
) + ("unit_system",)


def parse_config(text: str, source: str = "<string>") -> SystemConfig:
    """Parse config text of ``section.key = value`` lines into a SystemConfig.

    All body keys and ``unit_system`` are mandatory; ``amplitudes`` (a
    comma-separated list of five signed weights) is optional.  Parse errors
    report the offending line number and key.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not key or not val:
            raise ConfigError(f"{source}:{lineno}: empty key or value in {raw!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = (val, lineno)

    def take_float(key: str) -> float:
        val, lineno = values.pop(key)
        try:
            return float(val)
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: key {key!r} is not a number: {val!r}"
            ) from None

    missing = [k for k in _MANDATORY_KEYS if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing mandatory keys: {', '.join(missing)}")

    bodies = []
    for name in _BODY_NAMES:
        bodies.append(Body(*(take_float(f"{name}.{field}") for field in _BODY_FIELDS)))

    unit_system, us_line = values.pop("unit_system")
    if unit_system not in (NATURAL, SI):
        raise ConfigError(
            f"{source}:{us_line}: unit_system must be '{NATURAL}' or '{SI}', "
            f"got {unit_system!r}"
        )

    amplitudes = DEFAULT_AMPLITUDES
    if "amplitudes" in values:
        val, lineno = values.pop("amplitudes")
        parts = [p.strip() for p in val.split(",")]
        if len(parts) != 5:
            raise ConfigError(
                f"{source}:{lineno}: amplitudes needs 5 comma-separated values"
            )
        try:
            amplitudes = tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: amplitudes must be numbers: {val!r}"
            ) from None

    if values:
        key, (_, lineno) = next(iter(values.items()))
        raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")

    return SystemConfig(*bodies, amplitudes=amplitudes, unit_system=unit_system)


def load_config(path) -> SystemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def format_config(config: SystemConfig) -> str:
    """Serialize a SystemConfig to canonical config text (sorted keys, %.17g)."""
    lines = []
    for body, name in zip(config.bodies, _BODY_NAMES):
        for field in _BODY_FIELDS:
            lines.append(f"{name}.{field} = {getattr(body, field):.17g}")
    lines.append("amplitudes = " + ", ".join(f"{a:.17g}" for a in config.amplitudes))
    lines.append(f"unit_system = {config.unit_system}")
    return "\n".join(sorted(lines)) + "\n"


def config_hash(config: SystemConfig) -> bytes:
    """SHA-256 of the canonical serialization; stamped into Field headers."""
    return hashlib.sha256(format_config(config).encode("utf-8")).digest()
