import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrint.errors import ConfigError
from corrint.kinematics import (
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
from corrint.model import Body, PathId, SystemConfig


def make_config(m1, mm, m2, v1, vm, v2, s1=1.0, sm=1.0, s2=1.0):
    return SystemConfig(
        particle1=Body(m1, v1, -50.0, s1),
        mirror=Body(mm, vm, 0.0, sm),
        particle2=Body(m2, v2, 50.0, s2),
    )


def test_collide_examples():
    assert collide(1.0, 1.0, 1.0, 0.0) == pytest.approx((0.0, 1.0))
    v, V = collide(1.0, 1e12, 1.0, 0.0)
    assert v == pytest.approx(-1.0, abs=1e-10)
    assert V == pytest.approx(0.0, abs=1e-10)
    assert collide(1.0, 3.0, 1.0, -1.0) == pytest.approx((-2.0, 0.0))


@given(
    m=st.floats(0.01, 1e6), mm=st.floats(0.01, 1e6),
    v=st.floats(-100, 100), vm=st.floats(-100, 100),
)
@settings(max_examples=200, deadline=None)
def test_collide_conserves_and_reverses(m, mm, v, vm):
    vp, vmp = collide(m, mm, v, vm)
    p0, p1 = m * v + mm * vm, m * vp + mm * vmp
    e0, e1 = m * v**2 + mm * vm**2, m * vp**2 + mm * vmp**2
    scale_p = max(abs(p0), m * abs(v), mm * abs(vm), 1e-30)
    scale_e = max(e0, 1e-30)
    assert abs(p1 - p0) <= 1e-12 * scale_p
    assert abs(e1 - e0) <= 1e-12 * scale_e
    assert (vp - vmp) == pytest.approx(-(v - vm), rel=1e-12, abs=1e-12)


def test_conservation_sweep_all_paths():
    """1000 random configs: momentum/energy conserved on every path to 1e-12."""
    rng = np.random.default_rng(42)
    for _ in range(1000):
        m1, mm, m2 = rng.uniform(0.1, 100.0, 3)
        v1 = rng.uniform(0.1, 10.0)
        vm = rng.uniform(-1.0, v1 - 0.05)
        v2 = rng.uniform(-10.0, vm - 0.05)
        cfg = make_config(m1, mm, m2, v1, vm, v2)
        masses = np.array([m1, mm, m2])
        v0 = np.array([v1, vm, v2])
        p0, e0 = masses @ v0, masses @ v0**2
        for path in PathId:
            vf = np.array(path_kinematics(cfg, path).final_velocities)
            assert abs(masses @ vf - p0) <= 1e-12 * max(abs(p0), masses @ np.abs(v0))
            assert abs(masses @ vf**2 - e0) <= 1e-12 * e0


def test_velocity_map_determinants():
    """Signed det: -1 for single reflections, +1 for double ones."""
    rng = np.random.default_rng(7)
    for _ in range(50):
        m1, mm, m2 = rng.uniform(0.1, 1000.0, 3)
        cfg = make_config(m1, mm, m2, 1.0, 0.0, -1.0)
        assert np.linalg.det(velocity_map(cfg, PathId.P1_incident)) == pytest.approx(1.0, abs=1e-12)
        for p in (PathId.P2_refl1, PathId.P3_refl2):
            assert np.linalg.det(velocity_map(cfg, p)) == pytest.approx(-1.0, abs=1e-12)
        for p in (PathId.P4_refl1_then_2, PathId.P5_refl2_then_1):
            assert np.linalg.det(velocity_map(cfg, p)) == pytest.approx(1.0, abs=1e-12)


def test_energy_form_invariance():
    """hbar(k1^2/2m1 + K^2/2M + k2^2/2m2) unchanged by every wavevector map."""
    rng = np.random.default_rng(11)
    for _ in range(200):
        m1, mm, m2 = rng.uniform(0.1, 100.0, 3)
        cfg = make_config(m1, mm, m2, 1.0, 0.0, -1.0)
        inv_2m = 0.5 / np.array([m1, mm, m2])
        kappa = rng.normal(0.0, 10.0, 3)
        w0 = inv_2m @ kappa**2
        for path in PathId:
            wk = path_kinematics(cfg, path).wavevector_map @ kappa
            assert inv_2m @ wk**2 == pytest.approx(w0, rel=1e-12)


def test_wall_limit_p4_p5_degeneracy():
    """P4 and P5 particle velocities converge at O(m/M)."""
    gaps = {}
    for ratio in (1e3, 1e6):
        cfg = make_config(1.0, ratio, 1.0, 1.0, 0.0, -1.0)
        v4 = np.array(path_kinematics(cfg, PathId.P4_refl1_then_2).final_velocities)
        v5 = np.array(path_kinematics(cfg, PathId.P5_refl2_then_1).final_velocities)
        gaps[ratio] = max(abs(v4[0] - v5[0]), abs(v4[2] - v5[2]))
        # both approach the rigid-wall answer (-1, +1)
        assert v4[0] == pytest.approx(-1.0, abs=50.0 / ratio)
        assert v4[2] == pytest.approx(1.0, abs=50.0 / ratio)
    rate = gaps[1e3] / gaps[1e6]
    assert 100.0 < rate < 10000.0  # O(m/M) scaling = factor ~1e3


def test_collision_matrix_blocks():
    cm = collision_matrix(1.0, 3.0)
    assert cm @ np.array([1.0, -1.0]) == pytest.approx([-2.0, 0.0])


def test_fringe_spacing_values():
    assert fringe_spacing(1.0, 1.0, 0.0) == pytest.approx(math.pi)
    assert fringe_spacing(2.0, 1.0, 0.0) == pytest.approx(math.pi / 2)
    with pytest.raises(ConfigError):
        fringe_spacing(1.0, 0.3, 0.3)
    # SI: atom with 1 um de Broglie wavelength against a static mirror
    h = 6.62607015e-34
    m = 1.44316060e-25  # 87 u
    lam = 1e-6
    v = h / (m * lam)
    hbar = h / (2 * math.pi)
    assert fringe_spacing(m, v, 0.0, hbar) == pytest.approx(0.5e-6, rel=1e-12)


def test_coherence_length_thermal():
    assert coherence_length_thermal(1e-18, 300.0) == pytest.approx(7.3e-15, rel=0.01)
    l1 = coherence_length_thermal(1e-20, 10.0)
    assert coherence_length_thermal(4e-20, 10.0) == pytest.approx(l1 / 2, rel=1e-12)
    assert coherence_length_thermal(1e-20, 0.0) == math.inf
    with pytest.raises(ConfigError):
        coherence_length_thermal(-1.0, 300.0)


def test_ratio_R_wall_limit():
    cfg = make_config(1.0, 1e6, 1.0, 1.0, 0.0, -1.0, sm=10.0)
    assert ratio_R(cfg, PathId.P2_refl1) == pytest.approx(40.0, rel=1e-5)
    # doubling the mirror width doubles R
    cfg2 = make_config(1.0, 1e6, 1.0, 1.0, 0.0, -1.0, sm=20.0)
    assert ratio_R(cfg2, PathId.P2_refl1) == pytest.approx(
        2 * ratio_R(cfg, PathId.P2_refl1), rel=1e-12)
    with pytest.raises(ConfigError):
        ratio_R(cfg, PathId.P1_incident)


def test_substate_separation():
    cfg = make_config(1.0, 10.0, 1.0, 1.0, 0.0, -1.0)
    assert substate_separation(cfg, PathId.P2_refl1, 5.0) == pytest.approx(10.0 / 11.0)
    assert substate_separation(cfg, PathId.P2_refl1, 0.0) == 0.0
    wall = make_config(1.0, 1e9, 1.0, 1.0, 0.0, -1.0)
    assert substate_separation(wall, PathId.P2_refl1, 5.0) < 1e-8


def test_shortest_fringe_period_static_mirror():
    cfg = make_config(1.0, 1e9, 1.0, 1.0, 0.0, -1.0)
    # x1 axis: beat between incident and reflected particle-1 wavevectors
    assert shortest_fringe_period(cfg, 0) == pytest.approx(math.pi, rel=1e-6)
    # nothing oscillates along an axis if no active pair differs there
    cfg_p1_only = SystemConfig(
        cfg.particle1, cfg.mirror, cfg.particle2,
        amplitudes=(1.0, 0.0, 0.0, 0.0, 0.0),
    )
    assert shortest_fringe_period(cfg_p1_only, 0) == math.inf
