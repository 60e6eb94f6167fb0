import numpy as np
import pytest

from envcorr.channel import ChannelParams, Detector, TapConfig

ETA_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
GAMMA_GRID = (0.2, 0.5, 0.8, 1.0)
V_GRID = (1.0, 5.0, 25.0)


def grid_points():
    return [
        (eta, gamma, v) for eta in ETA_GRID for gamma in GAMMA_GRID for v in V_GRID
    ]


@pytest.fixture
def weak_coupling():
    """The reference strongly transmitting, very noisy channel."""
    return ChannelParams(0.9, 25.0), TapConfig(0.92, Detector.HETERODYNE)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
