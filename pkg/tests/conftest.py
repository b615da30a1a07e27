import numpy as np
import pytest

from omscatter.params import MechanicalInitState, ModelParams, Truncation, WavepacketParams


@pytest.fixture
def mixed_params():
    """Moderate couplings exercising both squeeze and displacement terms."""
    return ModelParams(omega_m=1.0, g1=0.4, g2=0.05, gamma_c=0.1)


@pytest.fixture
def linear_params():
    return ModelParams(omega_m=1.0, g1=0.0, g2=0.0, gamma_c=0.1)


@pytest.fixture
def narrow_wavepacket():
    return WavepacketParams(delta1=0.0, delta2=0.0, epsilon=0.01)


@pytest.fixture
def ground_state():
    return MechanicalInitState.ground()
