import numpy as np
import pytest

from viscowave.linalg_core import min_eigenvalue, spectral_norm
from viscowave.medium import reference_medium_b_proportional, sample_directions
from viscowave.planewave import (
    ZASSENHAUS_RADIUS,
    attenuation_bound,
    constant_eigvec_check,
    k_matrix,
    matrix_wave,
    modal_solve,
    pick_test_k,
    propagator,
    quasi_elastic_expand,
    scalar_channel,
    zassenhaus_split,
)
from viscowave.bernstein import upper_half_grid

E1 = np.array([1.0, 0.0, 0.0])
DIRS = sample_directions(10)


def test_k_matrix_elastic(elastic):
    for p in (0.3, 2.0):
        np.testing.assert_allclose(k_matrix(elastic, E1, p), np.diag([p / np.sqrt(3), p, p]), atol=1e-15)


def test_k_matrix_wavefront_limit(medium_a):
    K = k_matrix(medium_a, E1, 1e8) / 1e8
    np.testing.assert_allclose(K.real, np.diag([0.5, 1 / np.sqrt(1.5), 1 / np.sqrt(1.5)]), atol=1e-6)


def test_k_matrix_density_scaling(medium_a):
    from viscowave.medium import RelaxationModel
    heavy = RelaxationModel(4.0, medium_a.ginf, medium_a.terms)
    p = 0.5 - 1.5j
    np.testing.assert_allclose(k_matrix(heavy, E1, p), 2.0 * k_matrix(medium_a, E1, p), atol=1e-14)


def test_k_squared_solves_eigenproblem(medium_b):
    # K^2 = rho p^2 Q_n^{-1}
    from viscowave.medium import acoustic_tensor
    n, p = DIRS[4], 0.4 - 2.0j
    K = k_matrix(medium_b, n, p)
    np.testing.assert_allclose(K @ K @ acoustic_tensor(medium_b, n, p), p**2 * np.eye(3), atol=1e-12)


def test_k_real_axis_psd(medium_b):
    for p in (1e-2, 1.0, 1e2):
        K = k_matrix(medium_b, DIRS[2], p)
        assert np.abs(K.imag).max() < 1e-12 * np.abs(K).max()
        assert min_eigenvalue(K.real) >= 0


def test_pick_k(medium_a, medium_b):
    grid = upper_half_grid(8, 8)
    for m in (medium_a, medium_b):
        assert pick_test_k(m, DIRS[7], grid).passed


def test_modal_elastic(elastic):
    modes = modal_solve(elastic, E1, 1.0)
    np.testing.assert_allclose([m.phase_speed for m in modes], [1, 1, np.sqrt(3)], rtol=1e-14)
    assert all(m.attenuation == 0 for m in modes)
    assert modes[0].multiplicity == 2 and modes[0].eigenspace_dim == 2
    assert modes[2].multiplicity == 1
    np.testing.assert_allclose(np.abs(modes[2].polarization), E1, atol=1e-14)


def test_modal_frequency_limits(medium_a):
    lo = [m.phase_speed for m in modal_solve(medium_a, E1, 1e-2)]
    hi = [m.phase_speed for m in modal_solve(medium_a, E1, 1e4)]
    np.testing.assert_allclose(lo, [1, 1, np.sqrt(3)], rtol=1e-3)
    np.testing.assert_allclose(hi, [np.sqrt(1.5), np.sqrt(1.5), 2.0], rtol=1e-3)


def test_modal_invariants(medium_b):
    for n in DIRS:
        for w in (1e-2, 1.0, 1e3):
            K = k_matrix(medium_b, n, -1j * w)
            K2 = K @ K
            for m in modal_solve(medium_b, n, w):
                assert m.attenuation >= -1e-10
                assert m.inv_speed > 0
                v = m.polarization
                assert np.linalg.norm(K2 @ v - m.kappa**2 * v) <= 1e-9 * np.linalg.norm(K2, 2)
                assert m.residual <= 1e-9
                # Rayleigh-quotient variant agrees in sign
                assert m.rq_attenuation >= -1e-10 and m.rq_inv_speed > 0


def test_modal_sorted(medium_b):
    speeds = [m.phase_speed for m in modal_solve(medium_b, DIRS[1], 2.0)]
    assert speeds == sorted(speeds)


def test_modal_conjugate_closure(medium_b):
    n = DIRS[5]
    pos = modal_solve(medium_b, n, 1.7)
    neg = modal_solve(medium_b, n, -1.7)
    for a, b in zip(pos, neg):
        assert b.kappa == pytest.approx(np.conj(a.kappa), rel=1e-12)
        assert b.phase_speed == pytest.approx(a.phase_speed, rel=1e-12)


def test_modal_zero_frequency(medium_a):
    with pytest.raises(ValueError):
        modal_solve(medium_a, E1, 0.0)


def test_matrix_wave_elastic(elastic):
    d = matrix_wave(elastic, DIRS[3], 2.5)
    assert np.all(d.Amat == 0)
    np.testing.assert_allclose(d.Cmat, d.B_inf, rtol=1e-15, atol=0)
    assert d.a0 == 0


def test_matrix_wave_reconstruction(medium_b):
    for n in DIRS:
        d = matrix_wave(medium_b, n, 0.8)
        K = k_matrix(medium_b, n, -0.8j)
        np.testing.assert_allclose(d.operator, K, atol=1e-12)
        assert min_eigenvalue(d.Cmat) >= -1e-10
        assert min_eigenvalue(d.Amat) >= -1e-10
        assert d.a0 == pytest.approx(np.linalg.eigvalsh(d.Amat)[0])
        np.testing.assert_allclose(np.sort(d.c_eigs), d.c_eigs)


def test_matrix_wave_high_frequency_limit(medium_a, medium_b):
    for m in (medium_a, medium_b):
        d = matrix_wave(m, DIRS[6], 1e4)
        assert np.abs(d.Cmat - d.B_inf).max() <= 1e-3


def test_matrix_wave_order(medium_a):
    d1, d2 = matrix_wave(medium_a, E1, 0.5), matrix_wave(medium_a, E1, 2.0)
    assert min_eigenvalue(d1.Cmat - d2.Cmat) >= -1e-12
    assert min_eigenvalue(d2.Amat - d1.Amat) >= -1e-12


def test_matrix_wave_rejects_nonpositive(medium_a):
    with pytest.raises(ValueError):
        matrix_wave(medium_a, E1, 0.0)


def test_propagator_basic(medium_b, elastic):
    d = matrix_wave(medium_b, DIRS[0], 1.0)
    np.testing.assert_allclose(propagator(d, 0.0), np.eye(3), atol=1e-15)
    de = matrix_wave(elastic, DIRS[0], 3.0)
    for y in (0.5, 5.0, 50.0):
        assert spectral_norm(propagator(de, y)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        propagator(d, -1.0)


def test_attenuation_bound_sampled(medium_b, rng):
    for _ in range(20):
        w = 10 ** rng.uniform(-2, 3)
        n = DIRS[rng.integers(len(DIRS))]
        d = matrix_wave(medium_b, n, w)
        y = rng.uniform(0, 5) / max(d.a0, 1e-3)
        norm, bound = attenuation_bound(d, y)
        assert norm <= bound * (1 + 1e-9)


def test_zassenhaus_commuting(medium_a):
    d = matrix_wave(medium_a, E1, 1.3)
    for y in (0.1, 1.0, 10.0):
        z = zassenhaus_split(d, y)
        assert z.residual <= 1e-12 and z.residual_reversed <= 1e-12
    assert zassenhaus_split(d, 0.0).residual == 0.0


def test_zassenhaus_proportional_variant_commutes():
    m = reference_medium_b_proportional()
    d = matrix_wave(m, DIRS[4], 1.0)
    assert np.abs(d.Cmat @ d.Amat - d.Amat @ d.Cmat).max() < 1e-12
    assert zassenhaus_split(d, 0.5).residual < 1e-12


def test_zassenhaus_orders(medium_b):
    d = matrix_wave(medium_b, DIRS[4], 1.0)
    scale = spectral_norm(d.omega * d.Cmat + d.Amat)
    y = 0.2 / scale
    r1 = zassenhaus_split(d, y).residual / zassenhaus_split(d, y / 2).residual
    r2 = zassenhaus_split(d, y, 2).residual / zassenhaus_split(d, y / 2, 2).residual
    assert 3.5 <= r1 <= 4.5
    assert 7.0 <= r2 <= 9.0
    assert zassenhaus_split(d, y).convergent
    assert not zassenhaus_split(d, 2 * ZASSENHAUS_RADIUS / scale).convergent
    with pytest.raises(ValueError):
        zassenhaus_split(d, y, 3)


def test_quasi_elastic_commuting(medium_a):
    d = matrix_wave(medium_a, E1, 0.7)
    q = quasi_elastic_expand(d, E1, 2.0)
    assert q.c_error <= 1e-12 and q.a_error <= 1e-12
    # e1 is the longitudinal mode only
    assert np.count_nonzero(np.abs(q.c_coeffs) > 1e-14) == 1
    assert q.degenerate_c


def test_quasi_elastic_medium_b(medium_b, rng):
    d = matrix_wave(medium_b, DIRS[8], 1.5)
    y = 0.3 / spectral_norm(d.omega * d.Cmat + d.Amat)
    a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    a /= np.linalg.norm(a)
    q = quasi_elastic_expand(d, a, y)
    assert q.c_error <= 2 * q.zassenhaus_residual
    assert q.a_error <= 2 * q.zassenhaus_residual
    with pytest.raises(ValueError):
        quasi_elastic_expand(d, np.zeros(3), y)


def test_constant_eigvec_medium_a(medium_a):
    omegas = np.geomspace(1e-2, 1e2, 7)
    rep = constant_eigvec_check(medium_a, E1, omegas)
    assert rep.constant.all()
    assert all(p.passed for p in rep.pick)
    assert np.all(rep.inv_speed > 0) and np.all(rep.attenuation >= 0)
    V = rep.constant_vectors()
    # eigenvectors span e1 and the shear plane
    assert np.max(np.abs(V[0])) == pytest.approx(1.0)


def test_constant_eigvec_medium_b(medium_b):
    rep = constant_eigvec_check(medium_b, DIRS[4], np.geomspace(1e-2, 1e2, 7))
    assert not rep.has_constant
    assert rep.drift.min() > 1e-6
    with pytest.raises(ValueError):
        constant_eigvec_check(medium_b, DIRS[4], [1.0, 2.0])


def test_scalar_channel_matches_closed_form(medium_a):
    shear = scalar_channel(medium_a, E1, [0.0, 1.0, 0.0])
    for p in (0.5, 2.0 + 1.0j):
        mu = 1 + 0.5 * p / (p + 1)
        assert shear(p) == pytest.approx(p / np.sqrt(mu), rel=1e-13)
