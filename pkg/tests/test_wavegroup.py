"""Five-path packet superposition: packets, amplitudes, grids, norms.

The quadrature-based norm checks use two fixed geometries:

* ``CONTAINED``  — a single incident packet parked 6.7 sigma from the mirror,
  so the domain integral is 1 to high accuracy and stays there while the
  packet drifts (unitarity of free evolution).
* ``SEQUENTIAL`` — slow-spreading packets (tau = 2*m*sigma^2 = 9 time units)
  with particle 1 bouncing at t = 8 and particle 2 not reaching the mirror
  until t = 32.  During the first bounce the full five-path norm must sit
  still: mass flowing out through the x1 = X plane is handed over to the
  reflected image terms.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from corrint import analysis
from corrint.errors import GridError
from corrint.field import Axis
from corrint.kinematics import fringe_spacing
from corrint.model import Body, PathId, SystemConfig
from corrint.wavegroup import (
    GaussianPacket1D,
    WavegroupState,
    envelope_box,
    contact_residual,
    initial_leakage,
    norm,
    packet_eval,
    path_box,
    path_term,
    sample_grid,
    wavegroup_amplitude,
    wavegroup_pdf,
)

CONTAINED = SystemConfig(
    particle1=Body(1.0, 0.5, -8.0, 1.2),
    mirror=Body(500.0, 0.0, 0.0, 0.5),
    particle2=Body(1.0, -0.5, 9.0, 1.0),
    amplitudes=(1.0, 0.0, 0.0, 0.0, 0.0),
)

SEQUENTIAL = SystemConfig(
    particle1=Body(2.0, 0.5, -4.0, 1.5),
    mirror=Body(400.0, 0.0, 0.0, 0.5),
    particle2=Body(2.0, -0.5, 16.0, 1.5),
)


# ---------------------------------------------------------------------------
# single free packet


def test_packet_modulus_at_center():
    p = GaussianPacket1D(mass=1.5, kbar=2.0, x0=-3.0, sigma_x=0.8)
    want = (2.0 * math.pi * 0.8**2) ** -0.25
    assert abs(packet_eval(p, -3.0, 0.0)) == pytest.approx(want, rel=1e-14)


def test_packet_unit_norm_three_times():
    p = GaussianPacket1D(mass=1.0, kbar=1.0, x0=0.0, sigma_x=1.0)
    for t in (0.0, 5.0, 50.0):
        c, s = p.center(t), p.sigma_t(t)
        total, _ = quad(
            lambda y: abs(packet_eval(p, y, t)) ** 2, c - 12 * s, c + 12 * s,
            limit=200,
        )
        assert abs(total - 1.0) < 1e-8, f"t={t}: {total}"


def test_packet_solves_schroedinger():
    """Central-difference residual of i hbar phi_t + hbar^2/(2m) phi_yy."""
    p = GaussianPacket1D(mass=2.0, kbar=1.5, x0=0.5, sigma_x=1.0)
    dy, dt = 1e-3, 1e-3
    ys = np.linspace(-1.5, 2.5, 7)
    t = 0.7
    phi = packet_eval(p, ys, t)
    phi_t = (packet_eval(p, ys, t + dt) - packet_eval(p, ys, t - dt)) / (2 * dt)
    phi_yy = (
        packet_eval(p, ys + dy, t) - 2 * phi + packet_eval(p, ys - dy, t)
    ) / dy**2
    residual = 1j * phi_t + phi_yy / (2.0 * p.mass)
    scale = np.abs(phi_t).max()
    assert np.abs(residual).max() / scale < 1e-6


def test_packet_width_law_and_drift():
    p = GaussianPacket1D(mass=0.7, kbar=-1.2, x0=4.0, sigma_x=0.6)
    for t in (0.0, 1.0, 8.0):
        tau = t / (2.0 * p.mass * p.sigma_x**2)
        sigma_t = p.sigma_x * math.hypot(1.0, tau)
        assert p.sigma_t(t) == pytest.approx(sigma_t, rel=1e-14)
        center = 4.0 + (-1.2 / 0.7) * t
        assert p.center(t) == pytest.approx(center, rel=1e-14)
        # peak modulus shrinks exactly with the dispersed width
        got = abs(packet_eval(p, center, t))
        assert got == pytest.approx((2 * math.pi * sigma_t**2) ** -0.25, rel=1e-6)


# ---------------------------------------------------------------------------
# superposition structure


def test_identity_path_is_bare_product():
    st = WavegroupState.from_config(CONTAINED)
    b1, bm, b2 = CONTAINED.bodies
    pts = np.array([[-8.0, 0.0, 9.0], [-6.5, 0.3, 8.2], [-9.1, -0.4, 10.0]])
    amp, _ = wavegroup_amplitude(st, pts, 1.3)
    packs = [GaussianPacket1D(b.mass, b.kbar(1.0), b.x0, b.sigma_x)
             for b in (b1, bm, b2)]
    want = (
        packet_eval(packs[0], pts[:, 0], 1.3)
        * packet_eval(packs[1], pts[:, 1], 1.3)
        * packet_eval(packs[2], pts[:, 2], 1.3)
    )
    np.testing.assert_allclose(amp, want, rtol=1e-13)


def test_two_body_contact_nullity_random():
    """Amplitude vanishes on x1 = X when only paths 1 and 2 are lit."""
    cfg = SystemConfig(
        particle1=Body(1.0, 1.0, -30.0, 5.0),
        mirror=Body(50.0, -0.2, 0.0, 1.0),
        particle2=Body(1.0, -1.0, 40.0, 5.0),
        amplitudes=(1.0, -1.0, 0.0, 0.0, 0.0),
    )
    st = WavegroupState.from_config(cfg)
    rng = np.random.default_rng(7)
    xs = rng.uniform(-25.0, 25.0, size=100)
    ts = rng.uniform(0.0, 40.0, size=100)
    scale = abs(wavegroup_amplitude(st, np.array([[-30.0, 0.0, 40.0]]), 0.0)[0][0])
    for x, t in zip(xs, ts):
        amp, _ = wavegroup_amplitude(st, np.array([[x, x, 40.0 - t]]), t)
        assert abs(amp[0]) < 1e-12 * scale


def test_three_body_contact_equals_unpaired_term():
    st = WavegroupState.from_config(SEQUENTIAL)
    rng = np.random.default_rng(3)
    for t in (4.0, 8.0, 11.0):
        xm = rng.uniform(-1.5, 1.5, size=32)
        x2 = rng.uniform(8.0, 14.0, size=32)
        on_plane = np.column_stack([xm, xm, x2])
        amp, _ = wavegroup_amplitude(st, on_plane, t)
        term = st.config.amplitudes[PathId.P4_refl1_then_2] * path_term(
            st, PathId.P4_refl1_then_2, on_plane, t
        )
        np.testing.assert_allclose(amp, term, rtol=0, atol=1e-12)
        # and the mirror/particle-2 plane is carried by the other composite
        x1 = rng.uniform(-8.0, -1.0, size=32)
        on_plane2 = np.column_stack([x1, xm, xm])
        amp2, _ = wavegroup_amplitude(st, on_plane2, t)
        term2 = st.config.amplitudes[PathId.P5_refl2_then_1] * path_term(
            st, PathId.P5_refl2_then_1, on_plane2, t
        )
        np.testing.assert_allclose(amp2, term2, rtol=0, atol=1e-12)


def test_contact_residual_matches_unpaired():
    st = WavegroupState.from_config(SEQUENTIAL)
    out = contact_residual(st, 8.0)
    for plane in ("x1X", "Xx2"):
        res = out[f"plane_{plane}_max_abs"]
        unpaired = out[f"plane_{plane}_unpaired_max_abs"]
        assert res == pytest.approx(unpaired, rel=1e-9)


def test_domain_flag():
    st = WavegroupState.from_config(SEQUENTIAL)
    pts = np.array([
        [-4.0, 0.0, 16.0],   # ordered: inside
        [1.0, 0.0, 16.0],    # x1 > X
        [-4.0, 0.0, -1.0],   # x2 < X
    ])
    _, inside = wavegroup_amplitude(st, pts, 0.0)
    assert inside.tolist() == [True, False, False]
    pdf, inside2 = wavegroup_pdf(st, pts, 0.0)
    assert np.all(pdf >= 0) and inside2.tolist() == [True, False, False]


def test_galilean_boost_leaves_pdf_unchanged():
    u = 0.3
    boosted = SystemConfig(
        particle1=Body(2.0, 0.5 + u, -4.0, 1.5),
        mirror=Body(400.0, u, 0.0, 0.5),
        particle2=Body(2.0, -0.5 + u, 16.0, 1.5),
    )
    st = WavegroupState.from_config(SEQUENTIAL)
    stb = WavegroupState.from_config(boosted)
    rng = np.random.default_rng(11)
    t = 7.5
    pts = np.column_stack([
        rng.uniform(-8.0, 0.0, 64),
        rng.uniform(-1.5, 1.5, 64),
        rng.uniform(9.0, 15.0, 64),
    ])
    pdf, _ = wavegroup_pdf(st, pts, t)
    pdf_b, _ = wavegroup_pdf(stb, pts + u * t, t)
    np.testing.assert_allclose(pdf_b, pdf, rtol=1e-8)


def test_separated_supports_factorize():
    """After both bounces every path term owns a disjoint blob.

    Restricted to one blob the full five-path PDF must equal that single
    path's product-Gaussian PDF: this is the beam-splitter picture, with
    the packet pairs playing the roles of the split beams.  A *light*
    mirror (M = 2m) is essential here: it makes the reflection order
    matter, so the two composite paths fly apart instead of staying
    degenerate the way they do under a wall-like mirror.
    """
    cfg = SystemConfig(
        particle1=Body(5.0, 1.0, -15.0, 3.0),
        mirror=Body(10.0, 0.0, 0.0, 1.5),
        particle2=Body(5.0, -1.0, 15.0, 3.0),
    )
    st = WavegroupState.from_config(cfg)
    t = 70.0  # bounces happen near t = 15; by now the five terms are far apart
    for path in PathId:
        lo, hi = path_box(st, path, t, nsigma=1.0)
        center = 0.5 * (np.asarray(lo) + np.asarray(hi))
        probe = center + np.array([[0.0, 0.0, 0.0], [0.4, 0.1, -0.3]])
        pdf, _ = wavegroup_pdf(st, probe, t)
        term = st.config.amplitudes[path] * path_term(st, path, probe, t)
        np.testing.assert_allclose(
            pdf, np.abs(term) ** 2, rtol=1e-8,
            err_msg=f"path {path.name} support is not pure",
        )


def test_envelope_box_covers_path_boxes():
    st = WavegroupState.from_config(SEQUENTIAL)
    for t in (0.0, 8.0, 20.0):
        lo, hi = envelope_box(st, t)
        for path in PathId:
            plo, phi = path_box(st, path, t)
            assert np.all(np.asarray(plo) >= np.asarray(lo) - 1e-9)
            assert np.all(np.asarray(phi) <= np.asarray(hi) + 1e-9)


def test_wide_packet_recovers_plane_wave_fringes():
    """sigma_x >> 100 fringe periods: local fringe period -> pi*hbar/(m|V-v|)."""
    cfg = SystemConfig(
        particle1=Body(1.0, 1.0, -50.0, 300.0),
        mirror=Body(1e6, 0.0, 0.0, 2.0),
        particle2=Body(1.0, -1.0, 5000.0, 50.0),
        amplitudes=(1.0, -1.0, 0.0, 0.0, 0.0),
    )
    st = WavegroupState.from_config(cfg)
    field = sample_grid(st, [Axis(0, -40.0, -10.0, 2048)], {1: 0.0, 2: 5000.0}, 0.0)
    period = analysis.fringe_period(field.values, field.axes[0].step)
    want = fringe_spacing(1.0, 1.0, 0.0)
    assert period is not None
    assert abs(period - want) / want < 0.005


# ---------------------------------------------------------------------------
# grids


def test_sample_grid_single_cell_matches_pdf():
    st = WavegroupState.from_config(SEQUENTIAL)
    field = sample_grid(st, [Axis(0, -4.0, -4.0, 1)], {1: 0.2, 2: 15.0}, 3.0)
    want, _ = wavegroup_pdf(st, np.array([[-4.0, 0.2, 15.0]]), 3.0)
    assert field.values.shape == (1,)
    assert field.values[0] == pytest.approx(want[0], rel=1e-14)


def test_sample_grid_threads_deterministic():
    st = WavegroupState.from_config(SEQUENTIAL)
    axes = [Axis(0, -9.0, -1.0, 64), Axis(1, -1.5, 1.5, 32)]
    f1 = sample_grid(st, axes, {2: 14.0}, 8.0, threads=1)
    f4 = sample_grid(st, axes, {2: 14.0}, 8.0, threads=4)
    assert np.array_equal(f1.values, f4.values)


def test_sample_grid_cell_cap():
    st = WavegroupState.from_config(SEQUENTIAL)
    axes = [Axis(0, -9.0, -1.0, 1 << 10),
            Axis(1, -1.5, 1.5, 1 << 10),
            Axis(2, 9.0, 15.0, 1 << 10)]
    with pytest.raises(GridError, match="cap"):
        sample_grid(st, axes, {}, 0.0)


def test_sample_grid_warns_when_underresolved():
    st = WavegroupState.from_config(SEQUENTIAL)
    with pytest.warns(UserWarning, match="samples per fringe period"):
        sample_grid(st, [Axis(0, -9.0, -1.0, 4)], {1: 0.0, 2: 14.0}, 8.0)


# ---------------------------------------------------------------------------
# norms (adaptive quadrature over the ordered domain)


def test_norm_single_path_unit():
    st = WavegroupState.from_config(CONTAINED)
    assert norm(st, 0.0, abs_tol=1e-6) == pytest.approx(1.0, abs=1e-6)


def test_norm_t_invariant_while_contained():
    st = WavegroupState.from_config(CONTAINED)
    values = [norm(st, t, abs_tol=1e-5) for t in (0.0, 0.75, 1.5)]
    assert max(values) - min(values) < 1e-4


def test_norm_five_path_stable_through_bounce():
    """Total domain probability holds still while particle 1 reflects."""
    st = WavegroupState.from_config(SEQUENTIAL)
    values = [norm(st, t, abs_tol=3e-4) for t in (2.0, 7.0, 8.0, 9.0)]
    for v in values:
        assert 0.0 < v <= 5.0
    assert max(values) - min(values) < 1e-3


# ---------------------------------------------------------------------------
# leakage diagnostics


def test_initial_leakage_small_when_separated():
    assert initial_leakage(CONTAINED) < 1e-6
    assert initial_leakage(SEQUENTIAL) < 1e-2


def test_initial_leakage_grows_when_impaled():
    near = SystemConfig(
        particle1=Body(1.0, 0.5, -1.0, 1.2),
        mirror=Body(500.0, 0.0, 0.0, 0.5),
        particle2=Body(1.0, -0.5, 9.0, 1.0),
    )
    far = SystemConfig(
        particle1=Body(1.0, 0.5, -12.0, 1.2),
        mirror=Body(500.0, 0.0, 0.0, 0.5),
        particle2=Body(1.0, -0.5, 9.0, 1.0),
    )
    assert initial_leakage(near) > 0.1
    assert initial_leakage(far) < initial_leakage(CONTAINED) * 10 + 1e-9
    assert initial_leakage(far) < 1e-9
