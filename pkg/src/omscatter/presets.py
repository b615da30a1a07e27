"""Built-in parameter-study presets (fig2a..fig5c families).

Each preset fixes the coupling strengths, cavity decay, input wavepacket,
and output grids for one panel of the standard parameter studies: the fig2
family scans the couplings with a narrow wavepacket driven at the shifted
resonance, fig3 scans the quadratic coupling, fig4 the linear coupling, and
fig5 the cavity decay rate, all with a wide wavepacket.  Captions that do
not state the input detunings or the mechanical state are resolved to
delta1 = delta2 = 0 and the mechanical ground state; this assumption is
recorded in the output metadata.
"""
from __future__ import annotations

from .io import GridSpec, OracleSpec, RunConfig
from .params import MechanicalInitState, ModelParams, Truncation, WavepacketParams
from .spectrum import delta_shift

PRESET_IDS = (
    "fig2a", "fig2b", "fig2c",
    "fig3a", "fig3b", "fig3c",
    "fig4a", "fig4b", "fig4c",
    "fig5a", "fig5b", "fig5c",
)

# (g1, g2, gamma_c, epsilon) in units of omega_m
_COUPLINGS = {
    "fig2a": (0.2, 0.08, 0.1, 0.01),
    "fig2b": (0.2, 0.01, 0.1, 0.01),
    "fig2c": (0.4, 0.01, 0.1, 0.01),
    "fig3a": (0.8, 0.01, 0.02, 2.0),
    "fig3b": (0.8, 0.05, 0.02, 2.0),
    "fig3c": (0.8, 0.10, 0.02, 2.0),
    "fig4a": (0.01, 0.05, 0.02, 2.0),
    "fig4b": (0.1, 0.05, 0.02, 2.0),
    "fig4c": (0.5, 0.05, 0.02, 2.0),
    "fig5a": (0.5, 0.02, 0.01, 2.0),
    "fig5b": (0.5, 0.02, 0.1, 2.0),
    "fig5c": (0.5, 0.02, 0.8, 2.0),
}

_ZOOM_HALF_WIDTH = 0.15
_ZOOM_POINTS = 201


def build(preset_id: str, omega_m: float = 1.0) -> RunConfig:
    """RunConfig for one preset id; raises KeyError for unknown ids."""
    if preset_id not in _COUPLINGS:
        raise KeyError(f"unknown preset {preset_id!r}; choose from {', '.join(PRESET_IDS)}")
    g1, g2, gamma_c, eps = _COUPLINGS[preset_id]
    model = ModelParams(
        omega_m=omega_m, g1=g1 * omega_m, g2=g2 * omega_m, gamma_c=gamma_c * omega_m
    )
    assumptions = []
    family = preset_id[:4]
    if family == "fig2":
        detuning = -delta_shift(model)
        grid = GridSpec(-1.5 * omega_m, 1.5 * omega_m, 401)
        diagonal = None
        zoom = None
        if preset_id == "fig2c":
            # zoom on the elastic peak at (delta1, delta2): the input pair
            # energy is delta1 + delta2, so the ridge sits on that anti-diagonal
            zoom = GridSpec(
                detuning - _ZOOM_HALF_WIDTH * omega_m,
                detuning + _ZOOM_HALF_WIDTH * omega_m,
                _ZOOM_POINTS,
            )
    else:
        detuning = 0.0
        assumptions.append("input detunings not stated; using delta1 = delta2 = 0")
        grid = GridSpec(-3.0 * omega_m, 3.0 * omega_m, 301) if family == "fig3" else None
        diagonal = GridSpec(-3.0 * omega_m, 3.0 * omega_m, 1201)
        zoom = None
        if family in ("fig4", "fig5"):
            assumptions.append("mechanical state not stated; using the ground state")
    wavepacket = WavepacketParams(delta1=detuning, delta2=detuning, epsilon=eps * omega_m)
    return RunConfig(
        model=model,
        wavepacket=wavepacket,
        state=MechanicalInitState.ground(),
        grid=grid,
        diagonal=diagonal,
        zoom=zoom,
        truncation=Truncation(),
        oracle=OracleSpec(),
        preset_id=preset_id,
        assumptions=tuple(assumptions),
    )
