import numpy as np
import pytest
from scipy.special import eval_legendre, roots_legendre

from jostscat import DomainError
from jostscat.specfun import (chi, chi_deriv, gegenbauer, kernel_weight_p,
                              legendre_q_degree, legendre_s, riccati_bessel,
                              triangle)


class TestChi:
    def test_degree_zero_is_exponential(self):
        assert chi(0, 1.3) == pytest.approx(np.exp(-1.3), rel=1e-14)

    def test_degree_one_closed_form(self):
        # K_{3/2} reduction: chi_1(x) = e^{-x} (1 + 1/x)
        assert chi(1, 1.0) == pytest.approx(np.exp(-1.0) * 2.0, rel=1e-14)

    def test_large_argument_decay(self):
        assert abs(chi(0, 600.0)) < 1e-200

    def test_matches_bessel_backend_for_integer_degree(self):
        from scipy.special import kv
        for l in (2, 3, 5):
            for x in (0.3, 1.0, 4.0):
                ref = np.sqrt(2 * x / np.pi) * kv(l + 0.5, x)
                assert chi(l, x) == pytest.approx(ref, rel=1e-12)

    def test_half_integer_degree(self):
        from scipy.special import kv
        assert chi(0.5, 2.0) == pytest.approx(np.sqrt(4.0 / np.pi) * kv(1.0, 2.0), rel=1e-12)

    def test_monotone_decrease(self):
        xs = np.linspace(0.2, 8.0, 50)
        for l in (0, 1, 3):
            vals = chi(l, xs)
            assert np.all(np.diff(vals.real) < 0)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            chi(0, -1.0)

    def test_overflow_guard(self):
        with pytest.raises(DomainError):
            chi(300, 1e-8)

    def test_derivative_identity(self):
        # d/dx chi_l = -chi_{l-1} - (l/x) chi_l, checked by central differences
        h = 1e-6
        for l in (1, 2):
            x = 1.7
            fd = (chi(l, x + h) - chi(l, x - h)) / (2 * h)
            assert chi_deriv(l, x) == pytest.approx(fd, rel=1e-8)


class TestRiccatiBessel:
    def test_degree_zero_is_sine(self):
        x = np.linspace(0.1, 10, 25)
        assert np.allclose(riccati_bessel(0, x), np.sin(x), rtol=0, atol=1e-13)

    def test_degree_one_closed_form(self):
        # sin(x)/x - cos(x); at x = pi this equals 1
        assert riccati_bessel(1, np.pi) == pytest.approx(1.0, rel=1e-13)

    def test_regular_at_origin(self):
        assert abs(riccati_bessel(0, 1e-8)) < 1e-7

    def test_domain_error(self):
        with pytest.raises(DomainError):
            riccati_bessel(0, 0.0)


class TestLegendreS:
    def test_q0_closed_form(self):
        assert legendre_s(0, 0, 2.0) == pytest.approx(0.5 * np.log(3.0), rel=1e-12)

    def test_q1_recurrence(self):
        q0 = 0.5 * np.log(3.0)
        assert legendre_s(1, 0, 2.0) == pytest.approx(2.0 * q0 - 1.0, rel=1e-11)

    @pytest.mark.parametrize("j", [0, 1, 2])
    def test_matches_classical_q(self, j):
        # classical second-kind values from the closed recurrence at modest degree
        for Z in (1.3, 2.0, 5.0):
            q = [0.5 * np.log((Z + 1) / (Z - 1))]
            q.append(Z * q[0] - 1.0)
            for n in range(1, 3):
                q.append(((2 * n + 1) * Z * q[n] - n * q[n - 1]) / (n + 1))
            assert legendre_s(j, 0, Z) == pytest.approx(q[j], rel=1e-10)

    def test_decay_at_large_argument(self):
        assert abs(legendre_s(2, 0, 1e6)) < 1e-17

    def test_cut_domain_error(self):
        with pytest.raises(DomainError):
            legendre_s(0, 0, 0.9)

    def test_nonzero_order_lattice(self):
        # order -1 (five dimensions): S^{-1}_{l+1} finite and positive at Z > 1
        val = legendre_s(2, -1.0, 1.7)
        assert np.isfinite(val) and val > 0

    def test_complex_degree_path(self):
        nu = 1.5 + 0.5j
        val = legendre_q_degree(nu, 2.0)
        assert np.isfinite(val.real) and np.isfinite(val.imag)
        # sanity: real degree through the same series matches the lattice path
        assert legendre_q_degree(2.0, 2.0) == pytest.approx(legendre_s(2, 0, 2.0), rel=1e-10)


class TestKernelWeight:
    def test_order_zero_reductions(self):
        assert kernel_weight_p(0, 0, 0.37) == pytest.approx(1.0, abs=1e-15)
        assert kernel_weight_p(1, 0, 0.4) == pytest.approx(0.4, rel=1e-14)
        assert kernel_weight_p(2, 0, 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_matches_scipy_legendre(self):
        T = np.linspace(1.01, 6.0, 13)
        for j in (1, 2, 5):
            assert np.allclose(kernel_weight_p(j, 0, T), eval_legendre(j, T), rtol=1e-12)

    def test_complex_degree_continuity(self):
        # Laplace-integral path agrees with the polynomial at integer degree
        T = np.array([1.5, 3.0])
        poly = kernel_weight_p(2, 0, T)
        lap = kernel_weight_p(2.0 + 0.0j, 0, T)
        assert np.allclose(lap, poly, rtol=1e-10)

    def test_endpoint_singularity_signaled(self):
        with pytest.raises(DomainError):
            kernel_weight_p(1, 0.5, 1.0)

    def test_layer_collapse_order_minus_one(self):
        # int_{rho+nu}^{inf} W^{a}_j(T) (2 u rho)^{-a} chi_j(u r) du
        #   = (1/r) (r/2nu)^{a} chi_{-a}(nu r) chi_j(rho r)   at a = -1
        a = -1.0
        j, rho, nu, r = 2, 0.7, 0.9, 1.0
        tg, wg = roots_legendre(12)
        edges = np.linspace(rho + nu, rho + nu + 120.0, 500)
        tot = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            u = 0.5 * (lo + hi) + 0.5 * (hi - lo) * tg
            ww = 0.5 * (hi - lo) * wg
            T = (u * u + rho * rho - nu * nu) / (2 * u * rho)
            vals = kernel_weight_p(j, a, T) * (2 * u * rho) ** (-a)
            tot += np.sum(ww * vals * np.real(chi(j, u * r)))
        rhs = (1.0 / r) * (r / (2 * nu)) ** a * np.real(chi(-a, nu * r)) * np.real(chi(j, rho * r))
        assert tot == pytest.approx(rhs, rel=2e-7)


class TestGegenbauer:
    def test_index_zero(self):
        assert gegenbauer(0.7, 0, 0.3) == pytest.approx(1.0)

    def test_index_one(self):
        assert gegenbauer(1.0, 1, 0.5) == pytest.approx(1.0, rel=1e-14)

    def test_legendre_reduction(self):
        # C^{1/2}_l = P_l
        z = np.linspace(-1, 1, 11)
        for l in (2, 3, 5):
            assert np.allclose(gegenbauer(0.5, l, z), eval_legendre(l, z), rtol=0, atol=1e-12)

    def test_zero_polynomial_convention(self):
        assert np.all(gegenbauer(1.5, -1, np.linspace(-1, 1, 5)) == 0)

    def test_derivative_relation(self):
        # d/dz C^lam_l = 2 lam C^{lam+1}_{l-1}
        lam, l, z, h = 1.25, 4, 0.3, 1e-6
        fd = (gegenbauer(lam, l, z + h) - gegenbauer(lam, l, z - h)) / (2 * h)
        assert fd == pytest.approx(2 * lam * gegenbauer(lam + 1, l - 1, z), rel=1e-8)

    @pytest.mark.parametrize("xi", [+1, -1])
    def test_contiguous_recurrence(self, xi):
        # z C^{lam+1}_{l-1} - C^{lam+1}_{l-1-xi} = (xi / 2 lam) [l + lam(1-xi)] C^lam_l
        rng = np.random.default_rng(7)
        for lam in (0.5, 1.0, 2.5):
            for l in range(1, 11):
                z = rng.uniform(-1, 1)
                lhs = (z * gegenbauer(lam + 1, l - 1, z)
                       - gegenbauer(lam + 1, l - 1 - xi, z))
                rhs = (xi / (2 * lam)) * (l + lam * (1 - xi)) * gegenbauer(lam, l, z)
                assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(rhs)))

    def test_domain_error(self):
        with pytest.raises(DomainError):
            gegenbauer(0.0, 2, 0.5)


class TestTriangle:
    def test_values(self):
        assert triangle(1.0, 1.0, 0.0) == pytest.approx(0.0)
        assert triangle(4.0, 1.0, 1.0) == pytest.approx(0.0)
        assert triangle(3.0, 0.0, 1.5) == pytest.approx((3.0 - 1.5) ** 2)
