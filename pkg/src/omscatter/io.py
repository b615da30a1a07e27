"""Run configuration and the CSV/JSON output formats.

All floating-point values in CSV files are written with 17 significant
digits; JSON payloads are serialized with sorted keys and carry the full
run configuration, so identical configurations produce identical bytes.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .params import (
    ConfigError,
    MechanicalInitState,
    ModelParams,
    Truncation,
    WavepacketParams,
)
from .spectrum import ResonanceLine, SpectrumGrid

SCHEMA = "omscatter/1"
_FLOAT = "%.17g"


@dataclass(frozen=True)
class GridSpec:
    """Uniform axis specification [lo, hi] with the given number of points."""

    lo: float
    hi: float
    points: int

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi <= self.lo:
            raise ConfigError(f"grid: need finite lo < hi, got [{self.lo}, {self.hi}]")
        if self.points < 2:
            raise ConfigError(f"grid.points: need >= 2, got {self.points}")

    def axis(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)


@dataclass(frozen=True)
class OracleSpec:
    """Settings of the time-domain validation run.

    ``half_bandwidth`` defaults to the widest band whose recurrence time
    still exceeds the integration span; ``t_final`` defaults to 20/gamma_c;
    ``window`` (comparison region) defaults to the inner half of the band.
    """

    n_modes: int = 201
    n_b: int = 6
    half_bandwidth: float | None = None
    t_final: float | None = None
    dt: float | None = None
    coverage_min: float = 0.99
    window: tuple | None = None
    n_bins: int = 41
    recurrence_safety: float = 1.2

    def __post_init__(self):
        if self.n_modes < 3 or self.n_modes % 2 == 0:
            raise ConfigError(f"oracle.n_modes: need an odd integer >= 3, got {self.n_modes}")
        if self.n_b < 0:
            raise ConfigError("oracle.n_b: must be >= 0")
        if self.n_bins < 2:
            raise ConfigError("oracle.n_bins: must be >= 2")

    def resolve_t_final(self, model: ModelParams) -> float:
        return self.t_final if self.t_final is not None else 20.0 / model.gamma_c

    def resolve_bandwidth(self, model: ModelParams, epsilon: float | None = None) -> float:
        """Default band: the widest mode spacing that both stays faithful until
        t_final (recurrence) and resolves the input linewidth."""
        if self.half_bandwidth is not None:
            return self.half_bandwidth
        t_final = self.resolve_t_final(model)
        spacing = 2.0 * math.pi / (self.recurrence_safety * t_final)
        if epsilon is not None:
            spacing = min(spacing, epsilon)
        return 0.5 * spacing * (self.n_modes - 1)

    def resolve_window(self, model: ModelParams, epsilon: float | None = None) -> tuple:
        if self.window is not None:
            return tuple(self.window)
        half = 0.5 * self.resolve_bandwidth(model, epsilon)
        return (-half, half)


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs, validated up front and echoed into outputs."""

    model: ModelParams
    wavepacket: WavepacketParams
    state: MechanicalInitState = field(default_factory=MechanicalInitState.ground)
    grid: GridSpec | None = None
    diagonal: GridSpec | None = None
    zoom: GridSpec | None = None
    truncation: Truncation = field(default_factory=Truncation)
    oracle: OracleSpec = field(default_factory=OracleSpec)
    preset_id: str | None = None
    assumptions: tuple = ()

    def __post_init__(self):
        if self.state.max_n0 > self.truncation.n0_max:
            raise ConfigError(
                f"state.weights: initial state reaches n0={self.state.max_n0}, "
                f"above truncation.n0_max={self.truncation.n0_max}"
            )

    def to_dict(self) -> dict:
        def spec(g):
            return None if g is None else {"lo": g.lo, "hi": g.hi, "points": g.points}

        return {
            "schema": SCHEMA,
            "preset": self.preset_id,
            "assumptions": list(self.assumptions),
            "model": {
                "omega_m": self.model.omega_m,
                "g1": self.model.g1,
                "g2": self.model.g2,
                "gamma_c": self.model.gamma_c,
                "omega_c": self.model.omega_c,
            },
            "wavepacket": {
                "delta1": self.wavepacket.delta1,
                "delta2": self.wavepacket.delta2,
                "epsilon": self.wavepacket.epsilon,
            },
            "state": {
                "kind": self.state.kind,
                "weights": [[w.real, w.imag] for w in self.state.weights],
            },
            "grid": spec(self.grid),
            "diagonal": spec(self.diagonal),
            "zoom": spec(self.zoom),
            "truncation": asdict(self.truncation),
            "oracle": {
                "n_modes": self.oracle.n_modes,
                "n_b": self.oracle.n_b,
                "half_bandwidth": self.oracle.half_bandwidth,
                "t_final": self.oracle.t_final,
                "dt": self.oracle.dt,
                "coverage_min": self.oracle.coverage_min,
                "window": None if self.oracle.window is None else list(self.oracle.window),
                "n_bins": self.oracle.n_bins,
                "recurrence_safety": self.oracle.recurrence_safety,
            },
        }


def _get(section: dict, field_name: str, path: str, kind, default=None, required=False):
    if field_name not in section:
        if required:
            raise ConfigError(f"{path}.{field_name}: missing required field")
        return default
    value = section[field_name]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, kind):
        raise ConfigError(f"{path}.{field_name}: expected {kind.__name__}, got {value!r}")
    return value


def config_from_dict(doc: dict) -> RunConfig:
    """Validate a configuration document; ConfigError names the bad field."""
    if not isinstance(doc, dict):
        raise ConfigError("config: document must be a JSON object")

    if "preset" in doc and doc["preset"]:
        from . import presets

        try:
            base = presets.build(doc["preset"])
        except KeyError as exc:
            raise ConfigError(f"preset: {exc.args[0]}") from None
        return base

    msec = doc.get("model", {})
    if not isinstance(msec, dict):
        raise ConfigError("model: expected an object")
    model = ModelParams(
        omega_m=_get(msec, "omega_m", "model", float, 1.0),
        g1=_get(msec, "g1", "model", float, 0.0),
        g2=_get(msec, "g2", "model", float, 0.0),
        gamma_c=_get(msec, "gamma_c", "model", float, 0.1),
        omega_c=_get(msec, "omega_c", "model", float, None),
    )

    wsec = doc.get("wavepacket")
    if not isinstance(wsec, dict):
        raise ConfigError("wavepacket: missing required section")
    wavepacket = WavepacketParams(
        delta1=_get(wsec, "delta1", "wavepacket", float, required=True),
        delta2=_get(wsec, "delta2", "wavepacket", float, required=True),
        epsilon=_get(wsec, "epsilon", "wavepacket", float, required=True),
    )

    ssec = doc.get("state", {"kind": "pure", "weights": [1.0]})
    if not isinstance(ssec, dict):
        raise ConfigError("state: expected an object")
    raw_weights = ssec.get("weights", [1.0])
    weights = []
    for i, w in enumerate(raw_weights):
        if isinstance(w, (int, float)):
            weights.append(complex(w))
        elif isinstance(w, (list, tuple)) and len(w) == 2:
            weights.append(complex(w[0], w[1]))
        else:
            raise ConfigError(f"state.weights[{i}]: expected number or [re, im] pair")
    state = MechanicalInitState(kind=ssec.get("kind", "pure"), weights=tuple(weights))

    def grid_spec(name):
        sec = doc.get(name)
        if sec is None:
            return None
        if not isinstance(sec, dict):
            raise ConfigError(f"{name}: expected an object")
        return GridSpec(
            lo=_get(sec, "min", name, float, required=True),
            hi=_get(sec, "max", name, float, required=True),
            points=_get(sec, "points", name, int, 301),
        )

    tsec = doc.get("truncation", {})
    truncation = Truncation(
        j_max=_get(tsec, "j_max", "truncation", int, 12),
        fock_max=_get(tsec, "fock_max", "truncation", int, 12),
        n0_max=_get(tsec, "n0_max", "truncation", int, 8),
    )

    osec = doc.get("oracle", {})
    window = osec.get("window")
    if window is not None:
        if not (isinstance(window, (list, tuple)) and len(window) == 2):
            raise ConfigError("oracle.window: expected [lo, hi]")
        window = (float(window[0]), float(window[1]))
    oracle = OracleSpec(
        n_modes=_get(osec, "n_modes", "oracle", int, 201),
        n_b=_get(osec, "n_b", "oracle", int, 6),
        half_bandwidth=_get(osec, "half_bandwidth", "oracle", float, None),
        t_final=_get(osec, "t_final", "oracle", float, None),
        dt=_get(osec, "dt", "oracle", float, None),
        coverage_min=_get(osec, "coverage_min", "oracle", float, 0.99),
        window=window,
        n_bins=_get(osec, "n_bins", "oracle", int, 41),
    )

    return RunConfig(
        model=model,
        wavepacket=wavepacket,
        state=state,
        grid=grid_spec("grid"),
        diagonal=grid_spec("diagonal"),
        zoom=grid_spec("zoom"),
        truncation=truncation,
        oracle=oracle,
        assumptions=tuple(doc.get("assumptions", ())),
    )


def read_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON ({exc})") from None
    return config_from_dict(doc)


# --- writers ----------------------------------------------------------------

def _dump_json(doc: dict, path: Path):
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def write_grid(grid: SpectrumGrid, out: Path, stem: str, config: RunConfig, source: str):
    """CSV (dp, dq, S rows) plus a JSON document with axes and provenance."""
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    with csv_path.open("w") as fh:
        fh.write("dp,dq,S\n")
        for i, dp in enumerate(grid.p_axis):
            row = grid.values[i]
            for k, dq in enumerate(grid.q_axis):
                fh.write(f"{_FLOAT % dp},{_FLOAT % dq},{_FLOAT % row[k]}\n")
    doc = {
        "schema": SCHEMA,
        "source": source,
        "config": config.to_dict(),
        "metadata": _sanitize(grid.metadata),
        "p_axis": [float(x) for x in grid.p_axis],
        "q_axis": [float(x) for x in grid.q_axis],
        "values": [[float(v) for v in row] for row in grid.values],
    }
    _dump_json(doc, out / f"{stem}.json")
    return csv_path


def write_diagonal(rows: np.ndarray, out: Path, stem: str, config: RunConfig, source: str):
    """CSV (delta, S rows) plus the matching JSON document."""
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    with csv_path.open("w") as fh:
        fh.write("delta,S\n")
        for delta, s in rows:
            fh.write(f"{_FLOAT % delta},{_FLOAT % s}\n")
    doc = {
        "schema": SCHEMA,
        "source": source,
        "config": config.to_dict(),
        "delta": [float(x) for x in rows[:, 0]],
        "S": [float(x) for x in rows[:, 1]],
    }
    _dump_json(doc, out / f"{stem}.json")
    return csv_path


def write_resonances(lines: list[ResonanceLine], out: Path, stem: str, config: RunConfig):
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema": SCHEMA,
        "config": config.to_dict(),
        "lines": [
            {
                "channel": ln.channel,
                "orientation": ln.orientation,
                "position": ln.position,
                "quantum_numbers": ln.quantum_numbers,
            }
            for ln in lines
        ],
    }
    path = out / f"{stem}.json"
    _dump_json(doc, path)
    return path


def write_fc_table(table, out: Path, stem: str, config: RunConfig):
    """CSV dump with columns m, j, n, s, re, im."""
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.csv"
    with path.open("w") as fh:
        fh.write("m,j,n,s,re,im\n")
        for m in range(table.max_m + 1):
            for n in range(table.max_m + 1):
                block = table.block(m, n)
                for j in range(table.max_index + 1):
                    for s in range(table.max_index + 1):
                        v = block[j, s]
                        fh.write(f"{m},{j},{n},{s},{_FLOAT % v.real},{_FLOAT % v.imag}\n")
    return path


def write_comparison(report: dict, out: Path, stem: str, config: RunConfig):
    out.mkdir(parents=True, exist_ok=True)
    doc = {"schema": SCHEMA, "config": config.to_dict(), "report": _sanitize(report)}
    path = out / f"{stem}.json"
    _dump_json(doc, path)
    return path


def write_manifest(doc: dict, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    path = out / "manifest.json"
    _dump_json({"schema": SCHEMA, **_sanitize(doc)}, path)
    return path


def _sanitize(obj):
    """Make numpy scalars/arrays JSON-serializable."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
