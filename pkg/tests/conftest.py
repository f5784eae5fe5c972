import numpy as np
import pytest

from capwave.spectral import GridSpec, forward_transform


@pytest.fixture
def grid64():
    return GridSpec(64, 2.0 * np.pi)


@pytest.fixture
def grid32():
    return GridSpec(32, 2.0 * np.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def centered_gaussian(grid, width_fraction=0.1, k=(0.0, 0.0), amplitude=1.0,
                      center=(0.0, 0.0)):
    """Localized modulated bump, the workhorse test field."""
    X1, X2 = grid.coords
    w = width_fraction * grid.box_length
    env = np.exp(-((X1 - center[0]) ** 2 + (X2 - center[1]) ** 2) / (2.0 * w**2))
    carrier = np.cos(k[0] * X1 + k[1] * X2) if (k[0] or k[1]) else 1.0
    return forward_transform(amplitude * env * carrier, grid)
