"""Eigen-energies, scattering-amplitude channels, and joint spectra.

The long-time two-photon amplitude splits into four channels: direct
reflection (c1), single-photon scattering (c2), successive single-photon
scattering (c3), and genuine two-photon scattering through the two-photon
manifold (c4).  Each channel is symmetrized in the input detunings
(delta1 <-> delta2) and the total additionally in the output detunings
(dp <-> dq).  The time-dependent phase exp(-i (dp+dq+j*omega_m) t) of the
long-time solution is set to 1 throughout: it depends only on (j, dp, dq),
never on the initial phonon number, so it cancels in every spectrum formula.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fock import FCTable, fc_table, squeeze_factor
from .params import (
    ConvergenceError,
    MechanicalInitState,
    ModelParams,
    Truncation,
    WavepacketParams,
)


def eigen_energy(m: int, j: int, params: ModelParams, frame: str = "rotating") -> float:
    """Eigen-energy of the m-photon, j-phonon manifold state.

    frame="rotating" removes the bare cavity energy m*omega_c; frame="lab"
    includes it and requires params.omega_c.
    """
    if frame not in ("lab", "rotating"):
        raise ValueError(f"frame must be 'lab' or 'rotating', got {frame!r}")
    if j < 0:
        raise ValueError("phonon index must be >= 0")
    om = params.omega_m
    r = squeeze_factor(m, params)
    e2r = math.exp(2.0 * r)
    energy = (
        -params.g1 ** 2 * math.exp(-4.0 * r) / om * m ** 2
        + j * om * e2r
        + 0.5 * om * (e2r - 1.0)
    )
    if frame == "lab":
        if params.omega_c is None:
            raise ValueError("lab-frame energies require model.omega_c")
        energy += m * params.omega_c
    return energy


def delta_shift(params: ModelParams) -> float:
    """Mechanical ground-state shift from single-photon squeezing/displacement."""
    om = params.omega_m
    r1 = squeeze_factor(1, params)
    return params.g1 ** 2 * math.exp(-4.0 * r1) / om - 0.5 * om * (math.exp(2.0 * r1) - 1.0)


def nu_shift(params: ModelParams) -> float:
    """Mechanical ground-state shift from two-photon squeezing/displacement."""
    om = params.omega_m
    r2 = squeeze_factor(2, params)
    return 4.0 * params.g1 ** 2 * math.exp(-4.0 * r2) / om - 0.5 * om * (math.exp(2.0 * r2) - 1.0)


def normalization_g(wp: WavepacketParams) -> float:
    """Normalization constant of the symmetrized two-photon Lorentzian."""
    eps = wp.epsilon
    gap2 = (wp.delta1 - wp.delta2) ** 2
    return eps / math.pi / math.sqrt(1.0 + 4.0 * eps ** 2 / (gap2 + 4.0 * eps ** 2))


@dataclass(frozen=True)
class AmplitudeBreakdown:
    """Channel amplitudes at one (n0, j, dp, dq) point.

    c1..c4 carry the internal delta1<->delta2 symmetrization; ``total`` is
    G * [(c1+c2+c3+c4)(dp, dq) + (same)(dq, dp)] with the long-time phase
    factor replaced by 1.
    """

    n0: int
    j: int
    dp: float
    dq: float
    c1: complex
    c2: complex
    c3: complex
    c4: complex
    total: complex


class _ChannelEvaluator:
    """Vectorized channel sums for one ModelParams/WavepacketParams pair.

    All Fock sums run up to ``trunc`` (inclusive); evaluation is a pure
    function of its arguments and reads only the immutable overlap table.
    """

    def __init__(self, params: ModelParams, wp: WavepacketParams, fc: FCTable, trunc: int):
        if fc.max_index < trunc:
            raise ValueError(
                f"overlap table covers indices <= {fc.max_index}, need {trunc}"
            )
        self.params = params
        self.wp = wp
        self.trunc = trunc
        n = trunc + 1
        self.t01 = fc.block(0, 1)[:n, :n]  # <j | s~(1)>
        self.t10 = fc.block(1, 0)[:n, :n]  # <j~(1) | s>
        self.t12 = fc.block(1, 2)[:n, :n]  # <j~(1) | s~(2)>
        self.t21 = fc.block(2, 1)[:n, :n]  # <j~(2) | s~(1)>
        self.e1 = np.array([eigen_energy(1, s, params) for s in range(n)])
        self.e2 = np.array([eigen_energy(2, s, params) for s in range(n)])
        self.g = normalization_g(wp)

    def channels(self, dp, dq, n0: int, j: int, d1: float, d2: float):
        """Channel amplitudes c1..c4 at points (dp, dq) for input detunings (d1, d2)."""
        p = self.params
        eps = self.wp.epsilon
        gc = p.gamma_c
        om = p.omega_m
        ie = 1j * eps
        dp = np.asarray(dp, dtype=float)
        dq = np.asarray(dq, dtype=float)

        c1 = np.zeros(dp.shape, dtype=complex)
        if j == n0:
            c1 += 1.0 / ((dp - d1 + ie) * (dq - d2 + ie))

        sig = dp + dq
        m1 = dq[..., None] - self.e1 + j * om + 0.5j * gc
        m2 = dq - d1 + (j - n0) * om + ie
        m3 = sig - d1 - d2 + (j - n0) * om + 2.0j * eps
        m4 = sig[..., None] - d1 - self.e1 + j * om + 1j * (eps + 0.5 * gc)
        m5 = dq[..., None] - d1 + (j - np.arange(self.trunc + 1)) * om + ie
        m6 = sig[..., None] + j * om - self.e2 + 1j * gc

        f2 = self.t01[j, :] * self.t10[:, n0]
        c2 = (-1j * gc) * (f2 / m1).sum(axis=-1) / (m2 * (dp - d2 + ie))

        p1 = self.t01[j, :] / m1          # sum over s is folded into matmuls
        u4 = self.t10[:, n0] / m4         # sum over l likewise
        c3 = (-gc * gc) * (((p1 @ self.t10) / m5) * (u4 @ self.t01.T)).sum(axis=-1) / m3
        c4 = (-2.0 * gc * gc) * (((p1 @ self.t12) * (u4 @ self.t21.T)) / m6).sum(axis=-1) / m3
        return c1, c2, c3, c4

    def channels_symmetrized(self, dp, dq, n0: int, j: int):
        """c1..c4 with the delta1 <-> delta2 swap applied to c2, c3, c4.

        The direct channel c1 carries no such term: for the product form the
        input symmetrization is supplied by the dp <-> dq swap of the total.
        """
        d1, d2 = self.wp.delta1, self.wp.delta2
        c1, c2, c3, c4 = self.channels(dp, dq, n0, j, d1, d2)
        if d1 == d2:
            return c1, 2.0 * c2, 2.0 * c3, 2.0 * c4
        _, s2, s3, s4 = self.channels(dp, dq, n0, j, d2, d1)
        return c1, c2 + s2, c3 + s3, c4 + s4

    def channel_sum(self, dp, dq, n0: int, j: int):
        return sum(self.channels_symmetrized(dp, dq, n0, j))

    def total(self, dp, dq, n0: int, j: int):
        """Symmetrized amplitude G*[c(dp,dq) + c(dq,dp)] (phase factor = 1)."""
        dp = np.asarray(dp, dtype=float)
        dq = np.asarray(dq, dtype=float)
        direct = self.channel_sum(dp, dq, n0, j)
        if dp.shape == dq.shape and np.array_equal(dp, dq):
            mirrored = direct
        else:
            mirrored = self.channel_sum(dq, dp, n0, j)
        return self.g * (direct + mirrored)


def _evaluator(params, wp, fc, trunc) -> _ChannelEvaluator:
    if fc is None:
        fc = fc_table(params, max(trunc, 12))
    return _ChannelEvaluator(params, wp, fc, trunc)


def amplitude_breakdown(
    n0: int,
    j: int,
    dp: float,
    dq: float,
    params: ModelParams,
    wp: WavepacketParams,
    fc: FCTable | None = None,
    trunc: int = 12,
    check_tol: float | None = None,
) -> AmplitudeBreakdown:
    """Channel amplitudes and symmetrized total at one point.

    With ``check_tol`` set, the total is recomputed at twice the Fock
    truncation and a warning is emitted if |total| moves by more than
    check_tol relatively.
    """
    ev = _evaluator(params, wp, fc, trunc)
    pt_p = np.array([float(dp)])
    pt_q = np.array([float(dq)])
    c1, c2, c3, c4 = (c[0] for c in ev.channels_symmetrized(pt_p, pt_q, n0, j))
    total = complex(ev.total(pt_p, pt_q, n0, j)[0])
    if check_tol is not None:
        ev2 = _evaluator(params, wp, None, 2 * trunc)
        total2 = complex(ev2.total(pt_p, pt_q, n0, j)[0])
        scale = max(abs(total), abs(total2))
        if scale > 0 and abs(total2 - total) > check_tol * scale:
            warnings.warn(
                f"amplitude at (dp={dp}, dq={dq}) not converged: doubling the "
                f"Fock truncation {trunc} moved |total| by "
                f"{abs(total2 - total) / scale:.2e} relative",
                stacklevel=2,
            )
    return AmplitudeBreakdown(
        n0=n0, j=j, dp=float(dp), dq=float(dq),
        c1=complex(c1), c2=complex(c2), c3=complex(c3), c4=complex(c4), total=total,
    )


def _spectrum_for_points(dp, dq, state, ev: _ChannelEvaluator, trunc: Truncation):
    """S at arbitrary point arrays; sums j <= j_max and the initial-state weights."""
    weights = np.asarray(state.weights)
    n0_values = [n0 for n0, w in enumerate(weights) if w != 0]
    out = np.zeros(np.asarray(dp).shape, dtype=float)
    for j in range(trunc.j_max + 1):
        if state.kind == "pure":
            acc = np.zeros(np.asarray(dp).shape, dtype=complex)
            for n0 in n0_values:
                acc += weights[n0] * ev.total(dp, dq, n0, j)
            out += np.abs(acc) ** 2
        else:
            for n0 in n0_values:
                out += weights[n0].real * np.abs(ev.total(dp, dq, n0, j)) ** 2
    return out


def spectrum_point(
    dp: float,
    dq: float,
    state: MechanicalInitState,
    params: ModelParams,
    wp: WavepacketParams,
    fc: FCTable | None = None,
    trunc: Truncation = Truncation(),
) -> float:
    """Joint scattering spectrum S(dp, dq) for the given initial mechanical state."""
    ev = _evaluator(params, wp, fc, max(trunc.fock_max, trunc.j_max, state.max_n0))
    val = _spectrum_for_points(np.array([dp]), np.array([dq]), state, ev, trunc)
    return float(val[0])


@dataclass(frozen=True)
class SpectrumGrid:
    """Rectangular S(dp, dq) grid with full provenance metadata."""

    p_axis: np.ndarray
    q_axis: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.p_axis, self.q_axis, self.values):
            arr.setflags(write=False)


def _check_grid_convergence(points, state, params, wp, trunc, tol):
    """Truncation check at a few probe points: doubled Fock sums must agree."""
    ev1 = _evaluator(params, wp, None, max(trunc.fock_max, trunc.j_max, state.max_n0))
    t2 = trunc.doubled()
    ev2 = _evaluator(params, wp, None, max(t2.fock_max, t2.j_max, state.max_n0))
    dp = np.array([pt[0] for pt in points])
    dq = np.array([pt[1] for pt in points])
    s1 = _spectrum_for_points(dp, dq, state, ev1, trunc)
    s2 = _spectrum_for_points(dp, dq, state, ev2, t2)
    scale = max(float(np.max(s1)), float(np.max(s2)), 1e-300)
    rel = float(np.max(np.abs(s2 - s1))) / scale
    if rel > tol:
        raise ConvergenceError(
            f"Fock truncation {trunc} not converged: doubling changed probe "
            f"spectrum values by {rel:.2e} relative (tolerance {tol})"
        )
    return rel


def spectrum_grid(
    p_axis: np.ndarray,
    q_axis: np.ndarray,
    state: MechanicalInitState,
    params: ModelParams,
    wp: WavepacketParams,
    trunc: Truncation = Truncation(),
    fc: FCTable | None = None,
    convergence_tol: float | None = 5e-3,
    metadata: dict | None = None,
    row_chunk: int = 64,
    threads: int = 1,
) -> SpectrumGrid:
    """Evaluate S on the Cartesian grid p_axis x q_axis.

    For identical axes the dp<->dq exchange symmetry is exploited: the
    one-sided channel sum is computed once per (n0, j) and combined with its
    transpose, which also makes the stored matrix symmetric to the bit.
    With ``convergence_tol`` set, the Fock truncation is first validated at
    the grid corners and center (ConvergenceError on failure).
    """
    p_axis = np.asarray(p_axis, dtype=float)
    q_axis = np.asarray(q_axis, dtype=float)
    if p_axis.ndim != 1 or q_axis.ndim != 1:
        raise ValueError("grid axes must be one-dimensional")
    if np.any(~np.isfinite(p_axis)) or np.any(~np.isfinite(q_axis)):
        raise ValueError("grid axes must be finite")
    if np.any(np.diff(p_axis) <= 0) or np.any(np.diff(q_axis) <= 0):
        raise ValueError("grid axes must be strictly increasing")

    conv_rel = None
    if convergence_tol is not None:
        probes = [
            (p_axis[0], q_axis[0]),
            (p_axis[0], q_axis[-1]),
            (p_axis[-1], q_axis[0]),
            (p_axis[-1], q_axis[-1]),
            (p_axis[len(p_axis) // 2], q_axis[len(q_axis) // 2]),
        ]
        conv_rel = _check_grid_convergence(probes, state, params, wp, trunc, convergence_tol)

    ev = _evaluator(params, wp, fc, max(trunc.fock_max, trunc.j_max, state.max_n0))
    weights = np.asarray(state.weights)
    n0_values = [n0 for n0, w in enumerate(weights) if w != 0]
    symmetric = p_axis.shape == q_axis.shape and np.array_equal(p_axis, q_axis)

    np_, nq = len(p_axis), len(q_axis)
    values = np.zeros((np_, nq), dtype=float)

    def one_sided(n0, j, row_values, col_values):
        """Channel sum c on the row_values x col_values mesh, in row chunks.

        Chunks are independent and may run on a thread pool; each writes its
        own output slice, so results never depend on completion order.
        """
        csum = np.empty((len(row_values), len(col_values)), dtype=complex)

        def fill(lo):
            hi = min(lo + row_chunk, len(row_values))
            mesh_p = np.repeat(row_values[lo:hi], len(col_values))
            mesh_q = np.tile(col_values, hi - lo)
            try:
                csum[lo:hi] = ev.channel_sum(mesh_p, mesh_q, n0, j).reshape(hi - lo, -1)
            except Exception as exc:
                raise ConvergenceError(
                    f"grid evaluation failed on rows dp in "
                    f"[{row_values[lo]}, {row_values[hi - 1]}]: {exc}"
                ) from exc

        starts = range(0, len(row_values), row_chunk)
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(fill, starts))
        else:
            for lo in starts:
                fill(lo)
        return csum

    for j in range(trunc.j_max + 1):
        if state.kind == "pure":
            acc = np.zeros((np_, nq), dtype=complex)
        for n0 in n0_values:
            csum = one_sided(n0, j, p_axis, q_axis)
            if symmetric:
                total = ev.g * (csum + csum.T)
            else:
                # mirrored term c(dq, dp) needs its own mesh sweep
                total = ev.g * (csum + one_sided(n0, j, q_axis, p_axis).T)
            if state.kind == "pure":
                acc += weights[n0] * total
            else:
                values += weights[n0].real * np.abs(total) ** 2
        if state.kind == "pure":
            values += np.abs(acc) ** 2

    meta = dict(metadata or {})
    meta.setdefault("truncation", {
        "j_max": trunc.j_max, "fock_max": trunc.fock_max, "n0_max": trunc.n0_max,
    })
    if conv_rel is not None:
        meta["truncation"]["probe_relative_change"] = conv_rel
    return SpectrumGrid(p_axis=p_axis, q_axis=q_axis, values=values, metadata=meta)


def diagonal_spectrum(
    axis: np.ndarray,
    state: MechanicalInitState,
    params: ModelParams,
    wp: WavepacketParams,
    trunc: Truncation = Truncation(),
    fc: FCTable | None = None,
) -> np.ndarray:
    """S along dp = dq = delta; returns rows (delta, S)."""
    axis = np.asarray(axis, dtype=float)
    ev = _evaluator(params, wp, fc, max(trunc.fock_max, trunc.j_max, state.max_n0))
    values = _spectrum_for_points(axis, axis, state, ev, trunc)
    return np.column_stack([axis, values])


# --- resonance-line predictions ---------------------------------------------

@dataclass(frozen=True)
class ResonanceLine:
    """A predicted emission line in the (dp, dq) plane.

    orientation="axis" means dq = position (and, by exchange symmetry, the
    mirror dp = position); orientation="antidiagonal" means dp + dq = position.
    """

    channel: str
    orientation: str
    position: float
    quantum_numbers: dict


def resonance_lines(
    params: ModelParams,
    n0: int = 0,
    j_max: int = 8,
    s_max: int = 8,
) -> list[ResonanceLine]:
    """Enumerate predicted emission lines for an initial phonon number n0.

    Single-photon channels produce axis-parallel lines at
    s*omega_m*e^{2 r1} - j*omega_m - delta; the two-photon channel adds
    axis lines at s'*omega_m*e^{2 r2} - s*omega_m*e^{2 r1} + delta - nu and
    anti-diagonal lines at dp + dq = s'*omega_m*e^{2 r2} - j*omega_m - nu.
    """
    om = params.omega_m
    e1 = om * math.exp(2.0 * squeeze_factor(1, params))
    e2 = om * math.exp(2.0 * squeeze_factor(2, params))
    dshift = delta_shift(params)
    nshift = nu_shift(params)
    lines = []
    for s in range(s_max + 1):
        for j in range(j_max + 1):
            pos = s * e1 - j * om - dshift
            lines.append(ResonanceLine("C2", "axis", pos, {"s": s, "j": j}))
            lines.append(ResonanceLine("C3", "axis", pos, {"l": s, "s_prime": j}))
    for sp in range(s_max + 1):
        for s in range(s_max + 1):
            pos = sp * e2 - s * e1 + dshift - nshift
            lines.append(ResonanceLine("C4", "axis", pos, {"s_prime": sp, "s": s}))
        for j in range(j_max + 1):
            pos = sp * e2 - j * om - nshift
            lines.append(ResonanceLine("C4", "antidiagonal", pos, {"s_prime": sp, "j": j}))
    return lines
