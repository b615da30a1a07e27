import math

import numpy as np
import pytest

from omscatter import fock
from omscatter.params import ConfigError, ModelParams

SWEEP_G1 = (0.1, 0.4, 0.8)
SWEEP_G2 = (0.01, 0.05, 0.1)


def test_squeeze_factor_values():
    p = ModelParams(g1=0.0, g2=0.05, gamma_c=0.1)
    assert fock.squeeze_factor(0, p) == 0.0
    assert fock.squeeze_factor(1, p) == pytest.approx(math.log(1.2) / 4.0, abs=1e-15)
    p0 = ModelParams(g1=0.3, g2=0.0, gamma_c=0.1)
    assert fock.squeeze_factor(2, p0) == 0.0


def test_squeeze_factor_domain():
    with pytest.raises(ValueError):
        fock.squeeze_factor(-1, ModelParams(gamma_c=0.1))
    # g2 < 0 is legal while 1 + 4 g2 m stays positive, the constructor rejects worse
    with pytest.raises(ConfigError):
        ModelParams(g2=-0.2, gamma_c=0.1)


def test_displacement_values():
    assert fock.displacement(0, ModelParams(g1=0.7, g2=0.03, gamma_c=0.1)) == 0.0
    p = ModelParams(g1=0.5, g2=0.0, gamma_c=0.1)
    assert fock.displacement(1, p) == pytest.approx(-0.5, abs=1e-15)
    p2 = ModelParams(g1=0.2, g2=0.01, gamma_c=0.1)
    r2 = math.log(1.08) / 4.0
    assert fock.displacement(2, p2) == pytest.approx(-0.4 * math.exp(-3.0 * r2), abs=1e-15)


def test_squeeze_displace_invariants():
    for g1 in SWEEP_G1:
        for g2 in SWEEP_G2:
            p = ModelParams(g1=g1, g2=g2, gamma_c=0.1)
            for m in range(3):
                sd = fock.squeeze_displace(m, p)
                assert sd.mu ** 2 - abs(sd.nu_s) ** 2 == pytest.approx(1.0, abs=1e-12)
            sd0 = fock.squeeze_displace(0, p)
            assert sd0.r == 0.0 and sd0.alpha == 0.0


def test_hermite_low_orders():
    assert fock.hermite_complex(0, 2.3 - 0.4j) == 1.0
    assert fock.hermite_complex(1, 1.5j) == 2.0 * 1.5j
    z = 0.5 + 0.5j
    assert fock.hermite_complex(3, z) == pytest.approx(8.0 * z ** 3 - 12.0 * z, abs=1e-13)


@pytest.mark.parametrize("n", range(2, 14))
def test_hermite_recurrence_identity(n):
    z = complex(0.37, -1.21)
    hn1 = fock.hermite_complex(n + 1, z)
    hn = fock.hermite_complex(n, z)
    hnm = fock.hermite_complex(n - 1, z)
    assert hn1 == pytest.approx(2.0 * z * hn - 2.0 * n * hnm, rel=1e-13)


def test_overlap_closed_form_identity_and_coherent():
    assert fock.overlap_closed_form(0, 0, 0.0, 0.0) == pytest.approx(1.0)
    # vacuum-coherent overlap exp(-|alpha|^2 / 2)
    assert fock.overlap_closed_form(0, 0, 0.0, 0.3) == pytest.approx(
        math.exp(-0.045), abs=1e-12
    )


def test_overlap_closed_form_vs_oracle_single():
    p = ModelParams(g1=0.0, g2=0.0, gamma_c=0.1)
    # bare squeeze-displace comparison through the operator route
    val = fock.overlap_closed_form(2, 0, 0.1, 0.2)
    b = fock._lowering(60)
    import scipy.linalg as la

    op = la.expm(0.05 * (b @ b - b.T @ b.T)) @ la.expm(0.2 * (b.T - b))
    assert val == pytest.approx(op[2, 0], abs=1e-10)


def test_overlap_small_r_branch_continuity():
    # displaced branch (r below threshold) must meet the squeezed form smoothly
    lo = fock.overlap_closed_form(3, 1, 9.9e-9, 0.4)
    hi = fock.overlap_closed_form(3, 1, 1.1e-8, 0.4)
    assert lo == pytest.approx(hi, abs=1e-7)


def test_fc_overlap_equal_photon_number_is_identity(mixed_params):
    for m in range(3):
        for j in range(6):
            for s in range(6):
                expected = 1.0 if j == s else 0.0
                assert fock.fc_overlap(m, j, m, s, mixed_params) == pytest.approx(
                    expected, abs=1e-12
                )


def test_fc_overlap_trivial_couplings():
    p = ModelParams(g1=0.0, g2=0.0, gamma_c=0.1)
    for m in range(3):
        for n in range(3):
            blk = fock.fc_overlap_block(m, n, p, 6)
            assert np.allclose(blk, np.eye(7), atol=1e-14)


def test_fc_overlap_matches_oracle_point():
    p = ModelParams(g1=0.8, g2=0.05, gamma_c=0.1)
    cf = fock.fc_overlap(1, 0, 2, 0, p)
    orc = fock.oracle_overlap(1, 0, 2, 0, p)
    assert cf == pytest.approx(orc, abs=1e-8)


def test_oracle_displaced_vacuum_special_case():
    p = ModelParams(g1=0.5, g2=0.0, gamma_c=0.1)
    # pure displacement: |<0|D(alpha_1)|0>| = exp(-alpha^2/2) with alpha_1 = -0.5
    val = fock.oracle_overlap(0, 0, 1, 0, p)
    assert val == pytest.approx(math.exp(-0.125), abs=1e-10)


def test_oracle_identity():
    p = ModelParams(g1=0.3, g2=0.02, gamma_c=0.1)
    assert fock.oracle_overlap(0, 0, 0, 0, p) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("g1", SWEEP_G1)
@pytest.mark.parametrize("g2", SWEEP_G2)
def test_closed_form_vs_oracle_blocks(g1, g2):
    p = ModelParams(g1=g1, g2=g2, gamma_c=0.1)
    for m in range(3):
        for n in range(3):
            cf = fock.fc_overlap_block(m, n, p, 6)
            orc = fock.oracle_overlap_block(m, n, p, 6)
            assert np.max(np.abs(cf - orc)) < 1e-8


def test_conjugation_symmetry(mixed_params):
    for m in range(3):
        for n in range(3):
            ab = fock.fc_overlap_block(m, n, mixed_params, 8)
            ba = fock.fc_overlap_block(n, m, mixed_params, 8)
            assert np.max(np.abs(ab - ba.conj().T)) < 1e-12


def test_completeness_monotone(mixed_params):
    blk = fock.fc_overlap_block(0, 1, mixed_params, 40)
    partial = np.cumsum(np.abs(blk[2, :]) ** 2)
    assert np.all(np.diff(partial) >= 0.0)
    assert partial[-1] >= 1.0 - 1e-8


def test_fc_table_cached_and_readonly(mixed_params):
    t1 = fock.fc_table(mixed_params, 12)
    t2 = fock.fc_table(ModelParams(omega_m=1.0, g1=0.4, g2=0.05, gamma_c=0.1), 12)
    assert t1 is t2
    with pytest.raises(ValueError):
        t1.block(0, 1)[0, 0] = 99.0
    assert t1.entry(0, 1, 1, 2) == t1.block(0, 1)[1, 2]


def test_index_cap():
    with pytest.raises(ValueError):
        fock.sd_overlap_matrix(0.05, 0.1, fock.MAX_INDEX + 1)
