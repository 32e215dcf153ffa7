"""Shared fixtures plus the acceptance-criteria reporting hook."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import wavetomo as wt

settings.register_profile(
    "suite",
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per criterion, then enforce it."""

    def record(name: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        assert ok, line

    return record


@pytest.fixture(scope="session")
def grid64():
    return wt.GridSpec(n_points=64, x_extent=24.0)


@pytest.fixture(scope="session")
def grid128():
    return wt.GridSpec(n_points=128, x_extent=24.0)


@pytest.fixture(scope="session")
def gauss128(grid128):
    """Unit-width Gaussian at the origin, the suite's workhorse state."""
    return wt.density_from_pure(wt.make_gaussian(1.0, 0.0, 0.0, grid128))


@pytest.fixture(scope="session")
def offset_gauss128(grid128):
    return wt.density_from_pure(wt.make_gaussian(1.3, 0.4, -0.7, grid128))


def random_mixed_state(grid, rng, rank=3):
    """Low-rank mixture of displaced Gaussians, well confined to the grid."""
    parts = []
    weights = rng.uniform(0.2, 1.0, size=rank)
    for _ in range(rank):
        psi = wt.make_gaussian(
            l_coh=rng.uniform(0.7, 1.6),
            x_center=rng.uniform(-2.0, 2.0),
            p_center=rng.uniform(-1.5, 1.5),
            grid=grid,
        )
        parts.append(wt.density_from_pure(psi))
    return wt.mix(parts, weights / weights.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)
