"""Two-photon scattering spectra of mixed cavity optomechanical systems."""

from .params import (
    BandwidthError,
    ConfigError,
    ConvergenceError,
    MechanicalInitState,
    ModelParams,
    Truncation,
    WavepacketParams,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthError",
    "ConfigError",
    "ConvergenceError",
    "MechanicalInitState",
    "ModelParams",
    "Truncation",
    "WavepacketParams",
    "__version__",
]
