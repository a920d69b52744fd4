"""Correlated matter-wave interference of two particles sharing a movable mirror.

Closed-form three-body joint probability densities (five reflection paths),
their eigenstate limits and marginals, fringe analysis, preset scenarios,
and an independent split-step grid oracle for validation.
"""

__version__ = "0.1.0"

from ._kernels import get_backend
from .errors import (
    AnalysisError,
    ConfigError,
    CorrintError,
    GridError,
    NumericsError,
)
from .field import Axis, Field, read_field, read_field_csv, write_field, write_field_csv, write_field_pgm
from .kinematics import (
    CollisionMap,
    PathKinematics,
    coherence_length_thermal,
    collide,
    collision_matrix,
    fringe_spacing,
    path_kinematics,
    ratio_R,
    shortest_fringe_period,
    substate_separation,
    velocity_map,
)
from .model import (
    Body,
    PathId,
    SystemConfig,
    UnitScales,
    config_hash,
    format_config,
    from_natural_units,
    load_config,
    parse_config,
    to_natural_units,
)
from .wavegroup import (
    GaussianPacket1D,
    WavegroupState,
    contact_residual,
    initial_leakage,
    norm,
    packet_eval,
    path_term,
    sample_grid,
    wavegroup_amplitude,
    wavegroup_pdf,
)
from .eigenstate import (
    CoefficientFit,
    PhasePair,
    alpha_beta,
    coefficient_fit,
    eigenstate_amplitude,
    pdf_closed_form,
)
from .marginals import (
    MarginalResult,
    Quadrature,
    marginal_over_mirror,
    marginal_over_mirror_and_p2,
)
from .analysis import fringe_period, half_max_window, phase_shift, ridge_count, visibility

__all__ = [
    "__version__",
    "get_backend",
    # errors
    "CorrintError", "ConfigError", "GridError", "NumericsError", "AnalysisError",
    # model
    "Body", "SystemConfig", "PathId", "UnitScales",
    "to_natural_units", "from_natural_units",
    "parse_config", "load_config", "format_config", "config_hash",
    # kinematics
    "collide", "collision_matrix", "CollisionMap", "velocity_map",
    "PathKinematics", "path_kinematics", "fringe_spacing",
    "coherence_length_thermal", "ratio_R", "substate_separation",
    "shortest_fringe_period",
    # wavegroup
    "GaussianPacket1D", "packet_eval", "WavegroupState",
    "wavegroup_amplitude", "wavegroup_pdf", "path_term", "sample_grid",
    "norm", "initial_leakage", "contact_residual",
    # eigenstate
    "PhasePair", "alpha_beta", "pdf_closed_form", "eigenstate_amplitude",
    "coefficient_fit", "CoefficientFit",
    # marginals
    "Quadrature", "MarginalResult", "marginal_over_mirror",
    "marginal_over_mirror_and_p2",
    # fields
    "Axis", "Field", "write_field", "read_field",
    "write_field_csv", "read_field_csv", "write_field_pgm",
    # analysis
    "fringe_period", "visibility", "ridge_count", "phase_shift",
    "half_max_window",
]
