"""Squeezed-displaced number states and their generalized overlaps.

The mechanical eigenstates conditioned on ``m`` intracavity photons are
``S(r_m) D(alpha_m) |j>`` with a photon-number dependent squeeze factor and
displacement.  Everything the scattering amplitudes need reduces to the
overlap matrices ``<j~(m)|s~(n)>``, computed here in closed form and,
independently, from truncated matrix exponentials of the generators.
"""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, gammaln

from .params import ConvergenceError, ModelParams

# Below this |r| the squeezed closed form (which divides by sinh r) is
# switched to the pure-displacement formula; the neglected squeezing then
# contributes less than ~1e-8 per Fock quantum.
SQUEEZE_EPS = 1e-8

# Hard cap on Fock indices; factorial-scale intermediates stay finite in
# float64 well past 60 but degrade slowly, so refuse silly requests.
MAX_INDEX = 120


def squeeze_factor(m: int, params: ModelParams) -> float:
    """Squeeze factor r_m = ln(1 + 4*g2*m/omega_m)/4 of the m-photon manifold."""
    if m < 0:
        raise ValueError(f"photon number must be >= 0, got {m}")
    x = 1.0 + 4.0 * params.g2 * m / params.omega_m
    if x <= 0.0:
        raise ValueError(f"squeeze factor undefined: 1 + 4*g2*m/omega_m = {x} <= 0")
    return 0.25 * math.log(x)


def displacement(m: int, params: ModelParams) -> float:
    """Displacement alpha_m = -g1 * exp(-3 r_m) * m / omega_m."""
    return -params.g1 * math.exp(-3.0 * squeeze_factor(m, params)) * m / params.omega_m


@dataclass(frozen=True)
class SqueezeDisplace:
    """Squeeze/displacement data of one photon-number manifold.

    ``mu = cosh R`` and ``nu_s = exp(-i theta) sinh R`` with ``r = R e^{i theta}``;
    the model produces real r, so theta is 0 or pi and nu_s = sinh r.
    """

    m: int
    r: float
    alpha: float
    R: float
    theta: float
    mu: float
    nu_s: complex


def squeeze_displace(m: int, params: ModelParams) -> SqueezeDisplace:
    r = squeeze_factor(m, params)
    alpha = displacement(m, params)
    R = abs(r)
    theta = 0.0 if r >= 0.0 else math.pi
    return SqueezeDisplace(
        m=m, r=r, alpha=alpha, R=R, theta=theta,
        mu=math.cosh(R), nu_s=complex(math.sinh(r)),
    )


def hermite_complex(n: int, z: complex) -> complex:
    """Physicists' Hermite polynomial H_n at a complex argument (recurrence)."""
    if n < 0:
        raise ValueError("Hermite order must be >= 0")
    return _hermite_table(n, complex(z))[n]


def _hermite_table(nmax: int, z: complex) -> np.ndarray:
    """H_0..H_nmax at z via H_{n+1} = 2 z H_n - 2 n H_{n-1}."""
    h = np.empty(nmax + 1, dtype=complex)
    h[0] = 1.0
    if nmax >= 1:
        h[1] = 2.0 * z
    for n in range(1, nmax):
        h[n + 1] = 2.0 * z * h[n] - 2.0 * n * h[n - 1]
    return h


def _check_index(nmax: int):
    if nmax > MAX_INDEX:
        raise ValueError(f"Fock index {nmax} exceeds supported maximum {MAX_INDEX}")


def displaced_overlap_matrix(alpha: complex, nmax: int) -> np.ndarray:
    """Overlaps <bra| D(alpha) |ket> for all bra, ket <= nmax.

    D(alpha) = exp(alpha b^dag - alpha* b); rows index the bra state.
    """
    _check_index(nmax)
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    n = np.arange(nmax + 1)
    lf = gammaln(n + 1.0)  # log n!
    out = np.empty((nmax + 1, nmax + 1), dtype=complex)
    pref = cmath.exp(-0.5 * x)
    for b in range(nmax + 1):
        for k in range(nmax + 1):
            if b >= k:
                amp = alpha ** (b - k)
                lag = eval_genlaguerre(k, b - k, x)
                ratio = math.exp(0.5 * (lf[k] - lf[b]))
            else:
                amp = (-alpha.conjugate()) ** (k - b)
                lag = eval_genlaguerre(b, k - b, x)
                ratio = math.exp(0.5 * (lf[b] - lf[k]))
            out[b, k] = pref * ratio * amp * lag
    return out


def sd_overlap_matrix(r: float, alpha: complex, nmax: int) -> np.ndarray:
    """Overlaps <bra| S(r) D(alpha) |ket> for all bra, ket <= nmax.

    S(r) = exp[r (b^2 - b^dag^2)/2] with real r.  Uses the Hermite-polynomial
    closed form of the squeezed-displaced number-state inner product; all
    fractional complex powers are taken on the principal branch (validated
    against the matrix-exponential oracle over the physical parameter range).
    For |r| < SQUEEZE_EPS the formula is singular and the displaced branch
    is used instead.
    """
    _check_index(nmax)
    if abs(r) < SQUEEZE_EPS:
        return displaced_overlap_matrix(alpha, nmax)

    alpha = complex(alpha)
    R = abs(r)
    mu = math.cosh(R)
    nu = complex(math.sinh(r))  # exp(-i theta) sinh R with theta in {0, pi}
    nuc = nu.conjugate()

    z1 = alpha / np.sqrt(2.0 * mu * nu + 0j)
    z2 = (alpha * nuc - alpha.conjugate() * mu) / np.sqrt(-2.0 * mu * nuc + 0j)
    h1 = _hermite_table(nmax, complex(z1))
    h2 = _hermite_table(nmax, complex(z2))

    idx = np.arange(nmax + 1)
    lf = gammaln(idx + 1.0)

    # k-sum factors, arranged so the whole table is one matrix product:
    #   M[s, j] = pref_s * pref_j * sum_k A[k] B1[s, k] B2[j, k]
    A = np.power(2.0, idx) * np.power(2.0 * mu * nu + 0j, -0.5 * idx)
    B1 = np.zeros((nmax + 1, nmax + 1), dtype=complex)  # perm(s, k) H1[s-k]
    B2 = np.zeros((nmax + 1, nmax + 1), dtype=complex)  # binom(j, k) (-nu*/2mu)^{(j-k)/2} H2[j-k]
    pow_j = np.power(-nuc / (2.0 * mu) + 0j, 0.5 * idx)
    for k in range(nmax + 1):
        t = idx[k:] - k
        B1[k:, k] = np.exp(lf[k:] - lf[t]) * h1[t]
        B2[k:, k] = np.exp(lf[k:] - lf[k] - lf[t]) * pow_j[t] * h2[t]

    ksum = (B1 * A[None, :]) @ B2.T  # rows s, cols j

    pref_s = np.exp(-0.5 * lf) * np.power(nu / (2.0 * mu) + 0j, 0.5 * idx)
    pref_j = np.exp(-0.5 * lf)
    w = cmath.exp(-0.5 * abs(alpha) ** 2 + (nuc / (2.0 * mu)) * alpha ** 2) / math.sqrt(mu)
    out = w * pref_s[:, None] * ksum * pref_j[None, :]
    if not np.all(np.isfinite(out)):
        raise OverflowError(
            f"squeezed-displaced overlap overflowed at nmax={nmax}, r={r}, alpha={alpha}"
        )
    return out


def overlap_closed_form(s: int, j: int, r: float, alpha: complex) -> complex:
    """Single overlap <s| S(r) D(alpha) |j> (s labels the bra)."""
    if s < 0 or j < 0:
        raise ValueError("Fock indices must be >= 0")
    return complex(sd_overlap_matrix(r, alpha, max(s, j))[s, j])


def _effective_args(m: int, n: int, params: ModelParams) -> tuple[float, complex]:
    """Squeeze/displacement of S(r)D(a) connecting the m- and n-photon bases."""
    sm = squeeze_displace(m, params)
    sn = squeeze_displace(n, params)
    dr = sn.r - sm.r
    dalpha = sn.alpha - sm.alpha * math.exp(dr)
    return dr, dalpha


def fc_overlap(m: int, j: int, n: int, s: int, params: ModelParams) -> complex:
    """Generalized Franck-Condon overlap <j~(m)|s~(n)>."""
    dr, dalpha = _effective_args(m, n, params)
    return overlap_closed_form(j, s, dr, dalpha)


def fc_overlap_block(m: int, n: int, params: ModelParams, nmax: int) -> np.ndarray:
    """Matrix of <j~(m)|s~(n)> for all j, s <= nmax (rows index j)."""
    dr, dalpha = _effective_args(m, n, params)
    return sd_overlap_matrix(dr, dalpha, nmax)


@dataclass(frozen=True)
class FCTable:
    """Cached overlap blocks <j~(m)|s~(n)> for m, n <= 2 and j, s <= max_index.

    Immutable once built; the arrays are marked read-only and may be shared
    freely across threads.
    """

    params: ModelParams
    max_index: int
    blocks: dict = field(repr=False)

    max_m: int = 2

    def block(self, m: int, n: int) -> np.ndarray:
        """Overlap matrix with rows j (m-photon basis) and columns s (n-photon)."""
        return self.blocks[(m, n)]

    def entry(self, m: int, j: int, n: int, s: int) -> complex:
        return complex(self.blocks[(m, n)][j, s])


@functools.lru_cache(maxsize=16)
def fc_table(params: ModelParams, max_index: int) -> FCTable:
    """Build (or fetch the cached) overlap table for the given parameters."""
    blocks = {}
    for m in range(3):
        for n in range(3):
            blk = fc_overlap_block(m, n, params, max_index)
            blk.setflags(write=False)
            blocks[(m, n)] = blk
    return FCTable(params=params, max_index=max_index, blocks=blocks)


# --- independent truncated-matrix oracle -----------------------------------

def _lowering(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, dim)), 1)


def _sd_operator(r: float, alpha: complex, dim: int) -> np.ndarray:
    """S(r) D(alpha) as a dense matrix on a dim-dimensional Fock space."""
    b = _lowering(dim)
    bd = b.T.conj()
    S = expm(0.5 * r * (b @ b - bd @ bd))
    D = expm(alpha * bd - np.conjugate(alpha) * b)
    return S @ D


def oracle_overlap_block(
    m: int,
    n: int,
    params: ModelParams,
    nmax: int,
    dim: int | None = None,
    tol: float = 1e-10,
) -> np.ndarray:
    """Matrix of <j~(m)|s~(n)> from truncated matrix exponentials.

    Builds S(r)D(alpha) for both manifolds on a dim-dimensional Fock space
    and reads off the (j, s) <= nmax corner of U_m^dag U_n.  The result is
    recomputed at twice the dimension; if the two disagree beyond ``tol``
    the truncation has not converged and ConvergenceError is raised.
    """
    if dim is None:
        dim = 4 * nmax + 40
    sm = squeeze_displace(m, params)
    sn = squeeze_displace(n, params)

    def corner(d):
        um = _sd_operator(sm.r, sm.alpha, d)
        un = _sd_operator(sn.r, sn.alpha, d)
        return (um.T.conj() @ un)[: nmax + 1, : nmax + 1]

    coarse = corner(dim)
    fine = corner(2 * dim)
    err = float(np.max(np.abs(fine - coarse)))
    if err > tol:
        raise ConvergenceError(
            f"matrix oracle not converged: dim {dim}->{2*dim} moved result by {err:.3e}"
        )
    return fine


def oracle_overlap(
    m: int,
    j: int,
    n: int,
    s: int,
    params: ModelParams,
    dim: int | None = None,
    tol: float = 1e-10,
) -> complex:
    """Single overlap <j~(m)|s~(n)> from the truncated-matrix oracle."""
    block = oracle_overlap_block(m, n, params, max(j, s), dim=dim, tol=tol)
    return complex(block[j, s])
