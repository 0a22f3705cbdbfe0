import numpy as np
import pytest

from jostscat import DomainError, degeneracy, make_channel
from jostscat.channels import (projector_coefficients, projector_matrix,
                               projector_matrix_alt, projector_trace,
                               solid_angle, sphere_quadrature)


class TestMakeChannel:
    def test_lowest_three_dim(self):
        ch = make_channel(3, 0.5, +1)
        assert ch.kappa == +1 and ch.L == 1.0 and ch.l == 1
        assert ch.lambda_N == 0.5 and ch.a_N == 0.0
        assert ch.degeneracy == 2

    def test_four_dim(self):
        ch = make_channel(4, 1.0, -1)
        assert ch.kappa == -1.5
        assert ch.L == pytest.approx(0.5)
        assert ch.l == 0
        assert ch.a_N == pytest.approx(-0.5)
        assert ch.lambda_N == pytest.approx(1.0)
        assert ch.degeneracy == 2

    def test_higher_three_dim(self):
        ch = make_channel(3, 1.5, -1)
        assert ch.kappa == -2 and ch.L == 1.0 and ch.l == 1
        assert ch.degeneracy == 4

    def test_lowest_negative_kappa_is_physical(self):
        # kappa = -1: the s-wave channel; orbital momentum comes out zero
        ch = make_channel(3, 0.5, -1)
        assert ch.kappa == -1 and ch.l == 0

    def test_invalid_level(self):
        with pytest.raises(DomainError):
            make_channel(3, 1.0, +1)

    def test_below_minimum(self):
        with pytest.raises(DomainError):
            make_channel(5, 0.5, +1)

    def test_partner_indices(self):
        ch = make_channel(3, 1.5, +1)
        assert ch.L_minus == pytest.approx(1.0)
        assert ch.l_minus == 1


class TestDegeneracy:
    def test_reference_values(self):
        assert degeneracy(3, 0.5) == 2
        assert degeneracy(3, 2.5) == 6
        assert degeneracy(5, 1.5) == 4

    @pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
    def test_exact_positive_integers(self, N):
        lam = N / 2.0 - 1.0
        for k in range(6):
            d = degeneracy(N, lam + k)
            assert isinstance(d, int) and d > 0

    def test_trace_normalization_general_N(self):
        # Omega_N * Tr Pi(n, n) must equal the degeneracy in any dimension
        for N in (3, 4, 5, 6):
            lam = N / 2.0 - 1.0
            for k in range(3):
                for xi in (+1, -1):
                    J = lam + k
                    try:
                        ch = make_channel(N, J, xi)
                    except DomainError:
                        continue
                    val = solid_angle(N) * projector_trace(ch, 1.0)
                    assert val == pytest.approx(ch.degeneracy, rel=1e-12)


class TestProjectors:
    def test_coefficients_lowest_channel(self):
        ch = make_channel(3, 0.5, +1)
        c_scalar, c_spin = projector_coefficients(ch, 1.0)
        assert c_spin == pytest.approx(1.0 / (4 * np.pi), rel=1e-14)
        assert c_scalar == 0.0          # index -1 convention

    def test_coefficients_finite(self):
        for J, xi in ((0.5, 1), (1.5, 1), (1.5, -1), (2.5, -1)):
            ch = make_channel(3, J, xi)
            for t in np.linspace(-1, 1, 7):
                cs, cp = projector_coefficients(ch, t)
                assert np.isfinite(cs) and np.isfinite(cp)

    def test_two_projector_forms_agree(self):
        rng = np.random.default_rng(3)
        for J, xi in ((0.5, 1), (1.5, 1), (1.5, -1), (2.5, +1)):
            ch = make_channel(3, J, xi)
            for _ in range(4):
                tau = rng.normal(size=3); tau /= np.linalg.norm(tau)
                v = rng.normal(size=3); v /= np.linalg.norm(v)
                P1 = projector_matrix(ch, tau, v)
                P2 = projector_matrix_alt(ch, tau, v)
                assert np.allclose(P1, P2, atol=1e-12)

    def test_orthogonality_on_sphere(self):
        # int dOmega(n) Pi_a(w, n) Pi_b(n, v) = delta_ab Pi_a(w, v), N=3, J <= 5/2
        pts, wts = sphere_quadrature(28, 56)
        w_dir = np.array([0.0, 0.3, np.sqrt(1 - 0.09)])
        v_dir = np.array([0.5, -0.1, np.sqrt(1 - 0.26)])
        chans = [make_channel(3, J, xi)
                 for J in (0.5, 1.5, 2.5) for xi in (+1, -1)
                 if not (J == 0.5 and xi == -1)]
        for ca in chans:
            Pa = np.array([projector_matrix(ca, w_dir, n) for n in pts])
            for cb in chans:
                Pb = np.array([projector_matrix(cb, n, v_dir) for n in pts])
                prod = np.einsum("k,kij,kjl->il", wts, Pa, Pb)
                if ca is cb:
                    ref = projector_matrix(ca, w_dir, v_dir)
                else:
                    ref = np.zeros((2, 2), dtype=complex)
                assert np.max(np.abs(prod - ref)) < 1e-6

    def test_trace_integral_matches_degeneracy(self):
        # angular-spin trace at coincident directions integrates to the degeneracy
        pts, wts = sphere_quadrature(20, 40)
        for J in (0.5, 1.5, 2.5):
            for xi in (+1, -1):
                try:
                    ch = make_channel(3, J, xi)
                except DomainError:
                    continue
                tot = sum(w * np.trace(projector_matrix(ch, n, n)).real
                          for n, w in zip(pts, wts))
                assert tot == pytest.approx(ch.degeneracy, abs=1e-8)
