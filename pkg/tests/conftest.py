import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sqg_front_lab.spectral import Field, Grid1D

os.environ.setdefault("SQG_LAB_THREADS", "1")

settings.register_profile("lab", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture
def torus():
    return Grid1D(64, 2 * np.pi)


@pytest.fixture
def line():
    return Grid1D(256, 50.0)


def random_band_limited(grid, rng, kmax=None, real=True):
    """Random field with modes up to ``kmax`` (index), zero mean."""
    kmax = grid.n // 4 if kmax is None else kmax
    spec = np.zeros(grid.n, dtype=complex)
    idx = np.arange(1, kmax + 1)
    c = rng.normal(size=kmax) + 1j * rng.normal(size=kmax)
    spec[idx] = c
    if real:
        spec[-idx] = np.conj(c)
    else:
        spec[-idx] = rng.normal(size=kmax) + 1j * rng.normal(size=kmax)
    return Field.from_spectrum(grid, spec, real=real)


def bump(grid, amp=1.0, width=2.0, center=0.0, k=0.0):
    z = (grid.x - center) / width
    return Field(grid, values=amp * np.exp(-z * z) * np.cos(k * (grid.x - center)))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
