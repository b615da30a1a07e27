"""Peak detection and resonance-line matching on computed spectra."""
from __future__ import annotations

import numpy as np
from scipy import ndimage, signal

from .spectrum import ResonanceLine, SpectrumGrid


def local_maxima_2d(grid: SpectrumGrid, min_rel_height: float = 0.0) -> list[dict]:
    """Strict 8-neighborhood local maxima of a grid.

    A point qualifies when strictly greater than all eight neighbors;
    connected plateaus of equal value that dominate their surroundings are
    collapsed to their centroid.  Maxima below ``min_rel_height`` times the
    global maximum are dropped.
    """
    v = grid.values
    vmax = float(v.max())
    if vmax <= 0:
        return []
    # candidate plateaus: points not exceeded by any neighbor
    footprint = np.ones((3, 3), dtype=bool)
    local_max = v >= ndimage.maximum_filter(v, footprint=footprint, mode="nearest")
    labels, n_lab = ndimage.label(local_max)
    peaks = []
    for lab in range(1, n_lab + 1):
        mask = labels == lab
        height = float(v[mask][0]) if np.all(v[mask] == v[mask][0]) else float(v[mask].max())
        if height < min_rel_height * vmax:
            continue
        # the plateau must strictly dominate its boundary ring
        ring = ndimage.binary_dilation(mask, structure=footprint) & ~mask
        if ring.any() and float(v[ring].max()) >= height:
            continue
        ci, ck = ndimage.center_of_mass(mask)
        i, k = int(round(ci)), int(round(ck))
        peaks.append({
            "dp": float(np.interp(ci, np.arange(len(grid.p_axis)), grid.p_axis)),
            "dq": float(np.interp(ck, np.arange(len(grid.q_axis)), grid.q_axis)),
            "value": height,
            "index": (i, k),
        })
    peaks.sort(key=lambda pk: -pk["value"])
    return peaks


def peaks_1d(
    axis: np.ndarray,
    values: np.ndarray,
    min_prominence_frac: float = 0.02,
) -> list[dict]:
    """Significant local maxima of a 1D cut (prominence relative to the max)."""
    vmax = float(np.max(values))
    if vmax <= 0:
        return []
    idx, props = signal.find_peaks(values, prominence=min_prominence_frac * vmax)
    return [
        {"delta": float(axis[i]), "value": float(values[i]), "prominence": float(pr)}
        for i, pr in zip(idx, props["prominences"])
    ]


def line_distance(dp: float, dq: float, line: ResonanceLine) -> float:
    """Euclidean distance from a point to a predicted line (or its mirror)."""
    if line.orientation == "axis":
        return min(abs(dp - line.position), abs(dq - line.position))
    if line.orientation == "antidiagonal":
        return abs(dp + dq - line.position) / np.sqrt(2.0)
    raise ValueError(f"unknown line orientation {line.orientation!r}")


def match_peaks_to_lines(
    peaks: list[dict],
    lines: list[ResonanceLine],
    tol: float,
) -> list[dict]:
    """Annotate each peak with its nearest predicted line and match verdict."""
    out = []
    for pk in peaks:
        best = min(lines, key=lambda ln: line_distance(pk["dp"], pk["dq"], ln))
        dist = line_distance(pk["dp"], pk["dq"], best)
        out.append({
            **pk,
            "distance": float(dist),
            "matched": bool(dist <= tol),
            "line": {
                "channel": best.channel,
                "orientation": best.orientation,
                "position": best.position,
                "quantum_numbers": best.quantum_numbers,
            },
        })
    return out


def sideband_peak_count(
    diagonal: np.ndarray,
    spacing: float,
    min_prominence_frac: float = 0.05,
    spacing_tol: float = 0.35,
) -> int:
    """Number of significant diagonal-cut maxima on a ladder of the given spacing.

    Counts peaks whose nearest significant neighbor sits one ``spacing`` away
    (within ``spacing_tol`` relative), the signature of a resolved phonon
    sideband ladder; an isolated single peak counts as 1.
    """
    pks = peaks_1d(diagonal[:, 0], diagonal[:, 1], min_prominence_frac)
    if len(pks) <= 1:
        return len(pks)
    pos = np.array(sorted(pk["delta"] for pk in pks))
    gaps = np.diff(pos)
    on_ladder = np.abs(gaps / spacing - np.round(gaps / spacing)) <= spacing_tol
    good = np.round(gaps / spacing) >= 1
    count = 1 + int(np.sum(on_ladder & good))
    return count


def has_subpeak_structure(
    diagonal: np.ndarray,
    sideband_spacing: float,
    min_prominence_frac: float = 0.065,
    gap_frac: float = 0.45,
) -> bool:
    """Whether any sideband of a diagonal cut resolves into sub-structure.

    Sub-structure means two maxima closer together than ``gap_frac`` of a
    sideband spacing with both resolved at ``min_prominence_frac`` of the
    global maximum (the weaker member's prominence doubles as the depth of
    the dip between them, so interference dips register as well).  At the
    resolution boundary (sub-line splitting equal to the cavity linewidth)
    the verdict follows this threshold; merged shoulders stay below it.
    """
    pks = peaks_1d(diagonal[:, 0], diagonal[:, 1], min_prominence_frac)
    pos = np.array(sorted(pk["delta"] for pk in pks))
    if len(pos) < 2:
        return False
    return bool(np.any(np.diff(pos) < gap_frac * sideband_spacing))
