"""Parameter types shared across the model, spectrum, and oracle code."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


class ConvergenceError(RuntimeError):
    """A numerical result failed its convergence or consistency check."""


class BandwidthError(ConvergenceError):
    """The discretized continuum is too narrow for the requested input."""


@dataclass(frozen=True)
class ModelParams:
    """Constants of the optomechanical system.

    All quantities are angular frequencies in one consistent unit system;
    ``omega_m`` sets the scale (presets use omega_m = 1).  ``g1`` and ``g2``
    are the linear and quadratic single-photon coupling strengths,
    ``gamma_c`` the cavity-field decay rate (gamma_c = 2*pi*xi**2 in terms
    of the photon-hopping strength xi).  ``omega_c`` is only required for
    absolute (lab-frame) energies and is carried for serialization.
    """

    omega_m: float = 1.0
    g1: float = 0.0
    g2: float = 0.0
    gamma_c: float = 0.1
    omega_c: float | None = None

    def __post_init__(self):
        if not self.omega_m > 0:
            raise ConfigError("model.omega_m: must be > 0")
        if not self.gamma_c > 0:
            raise ConfigError("model.gamma_c: must be > 0")
        # r_m must stay real for the two-photon subspace m = 0, 1, 2
        for m in (1, 2):
            if 1.0 + 4.0 * self.g2 * m / self.omega_m <= 0.0:
                raise ConfigError(
                    f"model.g2: 1 + 4*g2*m/omega_m must be positive for m={m} "
                    "(squeeze factor undefined)"
                )

    @property
    def xi(self) -> float:
        """Cavity-continuum coupling strength, gamma_c = 2*pi*xi**2."""
        return math.sqrt(self.gamma_c / (2.0 * math.pi))


@dataclass(frozen=True)
class WavepacketParams:
    """Two-photon Lorentzian input: detunings delta1, delta2 and width epsilon."""

    delta1: float
    delta2: float
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("wavepacket.epsilon: must be > 0")


@dataclass(frozen=True)
class MechanicalInitState:
    """Initial mechanical state: pure amplitudes or mixed-state probabilities.

    ``weights[n0]`` is the amplitude c_n0 (kind="pure") or the probability
    P_n0 (kind="mixed") of the number state ``n0``.
    """

    kind: str
    weights: tuple

    _NORM_TOL = 1e-12

    def __post_init__(self):
        if self.kind not in ("pure", "mixed"):
            raise ConfigError(f"state.kind: {self.kind!r} is not 'pure' or 'mixed'")
        if len(self.weights) == 0:
            raise ConfigError("state.weights: must not be empty")
        object.__setattr__(self, "weights", tuple(complex(w) for w in self.weights))
        if self.kind == "pure":
            total = sum(abs(w) ** 2 for w in self.weights)
        else:
            for n0, w in enumerate(self.weights):
                if w.imag != 0.0 or w.real < 0.0:
                    raise ConfigError(
                        f"state.weights[{n0}]: mixed-state probabilities must be real >= 0"
                    )
            total = sum(w.real for w in self.weights)
        if abs(total - 1.0) > self._NORM_TOL:
            raise ConfigError(
                f"state.weights: must be normalized to 1 (got {total!r})"
            )

    @property
    def max_n0(self) -> int:
        return len(self.weights) - 1

    @classmethod
    def ground(cls) -> "MechanicalInitState":
        return cls(kind="pure", weights=(1.0,))

    @classmethod
    def number(cls, n0: int) -> "MechanicalInitState":
        return cls(kind="pure", weights=(0.0,) * n0 + (1.0,))


@dataclass(frozen=True)
class Truncation:
    """Fock-space truncation bounds for the scattering sums."""

    j_max: int = 12
    fock_max: int = 12
    n0_max: int = 8

    def __post_init__(self):
        for name in ("j_max", "fock_max", "n0_max"):
            if getattr(self, name) < 0:
                raise ConfigError(f"truncation.{name}: must be >= 0")

    @property
    def table_index(self) -> int:
        """Largest Fock index any overlap table must cover."""
        return max(self.j_max, self.fock_max, self.n0_max)

    def doubled(self) -> "Truncation":
        return Truncation(2 * self.j_max, 2 * self.fock_max, self.n0_max)
