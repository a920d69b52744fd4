"""Shared fixtures.

Two of them are expensive and session-scoped so the cost is paid once:

* ``preset_results`` — a caching runner for the bundled scenario presets
  (the fig5 marginals take ~1.5 min together).
* ``heavy_mirror_run`` — the 512x512 split-step reference collision used by
  the oracle-equivalence assertions (several minutes of FFT stepping).

Both are lazy: running only the cheap unit-test files never triggers them.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from corrint.kinematics import collide
from corrint.model import Body, SystemConfig, config_hash
from corrint.oracle import (
    BarrierModel,
    GridSpec2D,
    evolve_2body,
    expectation_velocities,
    wall_offset_1d,
)
from corrint.scenario import run_scenario
from corrint.wavegroup import GaussianPacket1D


@pytest.fixture(scope="session")
def preset_results(tmp_path_factory):
    """Factory: preset_results(name) -> (ScenarioResult, out_dir), cached."""
    cache = {}

    def get(name, rerun=False):
        key = (name, rerun)
        if key not in cache:
            out = tmp_path_factory.mktemp(f"{name}{'_rerun' if rerun else ''}")
            cache[key] = (run_scenario(name, out_dir=str(out)), out)
        return cache[key]

    return get


class HeavyMirrorRun:
    """The criterion-grade reference collision and everything derived from it.

    Particle (m=2, v=+1) against a near-static mirror 1000x heavier, with a
    barrier sitting exactly on the stiffness bounds (V0 = 1e3 x KE,
    w = fringe/10 within rounding).  Snapshots: t=0 (initial), t=18 (overlap
    of incident and reflected parts), t=34 (fully separated).
    """

    def __init__(self):
        self.m1, self.mm = 2.0, 2000.0
        self.v1, self.vm = 1.0, 0.0
        self.config = SystemConfig(
            particle1=Body(self.m1, self.v1, -17.5, 3.0),
            mirror=Body(self.mm, self.vm, 0.0, 0.9),
            # particle 2 parked far away and barely moving: the run only
            # models the (x1, X) pair, but the analytic comparison needs a
            # legal three-body config.
            particle2=Body(1.0, -0.01, 300.0, 10.0),
            amplitudes=(1.0, -1.0, 0.0, 0.0, 0.0),
        )
        self.barrier = BarrierModel(1000.0, 0.15)
        self.dt = 2e-3
        self.grid = GridSpec2D((-40.0, 4.0), (-6.6, 6.6), 512, 512,
                               self.dt, 17000)
        self.t_overlap, self.t_final = 18.0, 34.0

        p1 = GaussianPacket1D(self.m1, self.m1 * self.v1, -17.5, 3.0)
        pm = GaussianPacket1D(self.mm, 0.0, 0.0, 0.9)
        self.run = evolve_2body(
            p1, pm, self.grid, self.barrier,
            [0.0, self.t_overlap, self.t_final],
            config_hash_bytes=config_hash(self.config),
        )
        mu = self.m1 * self.mm / (self.m1 + self.mm)
        self.u_w, self.r_abs = wall_offset_1d(
            self.barrier, mu, mu * abs(self.v1 - self.vm)
        )
        self.velocities_final = expectation_velocities(
            self.run.psis[2], self.grid, self.m1, self.mm
        )
        self.v1_expected, self.vm_expected = collide(
            self.m1, self.mm, self.v1, self.vm
        )

    @property
    def field_overlap(self):
        return self.run.fields[1]

    @property
    def steps_total(self) -> int:
        return self.grid.steps


@pytest.fixture(scope="session")
def heavy_mirror_run():
    return HeavyMirrorRun()


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow", action="store_true", default=False,
        help="also run tests marked slow (full 3-body oracle, ~several min)",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running cross-validation")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
