import numpy as np
import pytest

from flatnormals.core import CameraIntrinsics, DepthImage

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def K320():
    return CameraIntrinsics(fx=500.0, fy=500.0, cx=160.0, cy=120.0, width=320, height=240)


def smooth_random_depth(rng, K, speckle=0.0):
    """Random smooth surface (tilted plane plus low-frequency bumps), optional holes."""
    v, u = np.mgrid[0:K.height, 0:K.width].astype(float)
    z = 1.5 + rng.uniform(0.5, 1.5)
    z = z + rng.uniform(-2e-3, 2e-3) * (u - K.cx) + rng.uniform(-2e-3, 2e-3) * (v - K.cy)
    for _ in range(3):
        fu, fv = rng.uniform(0.02, 0.12, size=2)
        z = z + rng.uniform(0.01, 0.05) * np.sin(fu * u + rng.uniform(0, 6)) * np.cos(fv * v + rng.uniform(0, 6))
    valid = rng.random(z.shape) >= speckle
    return DepthImage(np.where(valid, z, 0.0), valid)
