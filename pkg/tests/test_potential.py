import numpy as np
import pytest

from jostscat import (DomainError, SpectralWeight, ValidationError,
                      evaluate_potential, make_channel, moments,
                      relcorr_weight, weyl_transform, yukawa)
from jostscat.potential import (InteractionKind, momentum_matrix_element,
                                parse_weight_text)


class TestSpectralWeight:
    def test_mu0_inferred(self):
        w = SpectralWeight(lines=((1.0, 2.0), (0.5, 1.25)))
        assert w.mu0 == 1.25

    def test_continuum_validation(self):
        with pytest.raises(ValidationError):
            SpectralWeight(cont_nu=np.array([1.0, 0.5]), cont_sigma=np.array([1.0, 1.0]))

    def test_integrate_cap(self):
        w = yukawa(2.0, 1.0)
        assert w.integrate(lambda nu: nu, cap=0.5) == 0.0
        assert w.integrate(lambda nu: nu, cap=2.0) == pytest.approx(2.0)

    def test_linearity(self):
        w1 = yukawa(1.0, 1.0)
        w2 = yukawa(-0.5, 2.0)
        w12 = SpectralWeight(lines=((1.0, 1.0), (-0.5, 2.0)))
        r = np.linspace(0.3, 4.0, 9)
        v = evaluate_potential(w12, 3, r)
        assert np.allclose(v, evaluate_potential(w1, 3, r) + evaluate_potential(w2, 3, r),
                           rtol=1e-14)


class TestMoments:
    def test_line_moment(self):
        assert moments(yukawa(2.0, 3.0), 2) == pytest.approx(18.0)
        assert moments(yukawa(1.5, 3.0), 0) == pytest.approx(1.5)

    def test_empty(self):
        assert moments(SpectralWeight(), 3) == 0.0

    def test_continuum_exact_for_linear(self):
        # piecewise-linear sigma = nu on [1, 2]: int nu * nu dnu = 7/3
        w = SpectralWeight(cont_nu=np.array([1.0, 1.5, 2.0]),
                           cont_sigma=np.array([1.0, 1.5, 2.0]))
        assert moments(w, 1) == pytest.approx(7.0 / 3.0, rel=1e-14)


class TestEvaluatePotential:
    def test_single_yukawa(self):
        assert evaluate_potential(yukawa(1.0, 1.0), 3, 2.0) == pytest.approx(
            np.exp(-2.0) / 2.0, rel=1e-13)

    def test_empty_weight(self):
        assert evaluate_potential(SpectralWeight(), 3, 1.0) == 0.0

    def test_two_lines(self):
        w = SpectralWeight(lines=((1.0, 1.0), (-0.5, 2.0)))
        expect = np.exp(-1.0) - 0.5 * np.exp(-2.0)
        assert evaluate_potential(w, 3, 1.0) == pytest.approx(expect, rel=1e-13)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            evaluate_potential(yukawa(1.0, 1.0), 3, 0.0)

    def test_fourier_consistency(self):
        # 3-d quadrature of V(r) against a plane-wave transfer matches the
        # momentum representation to 1e-5 relative
        w = yukawa(0.8, 1.3)
        for Q in (0.5, 1.0, 2.7):
            r = np.linspace(1e-6, 60.0, 240001)
            vr = evaluate_potential(w, 3, r)
            direct = np.trapezoid(r * vr * np.sin(Q * r), r) / (2 * np.pi ** 2 * Q)
            assert direct == pytest.approx(momentum_matrix_element(w, 3, Q), rel=1e-5)


class TestWeyl:
    def test_identity_at_equal_dimension(self):
        w = SpectralWeight(cont_nu=np.linspace(1.0, 3.0, 41),
                           cont_sigma=np.exp(-(np.linspace(1.0, 3.0, 41) - 2.0) ** 2 / 0.08))
        assert weyl_transform(w, 3, 3, 0) is w

    def test_zero_density(self):
        out = weyl_transform(SpectralWeight(), 3, 5, 1)
        assert out.is_empty

    def test_three_to_five_reproduces_potential(self):
        # the transformed weight must give the same coordinate-space potential
        nu = np.linspace(1.0, 3.0, 161)
        w3 = SpectralWeight(cont_nu=nu, cont_sigma=np.exp(-(nu - 2.0) ** 2 / 0.08))
        w5 = weyl_transform(w3, 3, 5, 1)
        for r in (0.8, 1.5, 3.0):
            v3 = evaluate_potential(w3, 3, r)
            v5 = evaluate_potential(w5, 5, r)
            assert v5 == pytest.approx(v3, rel=2e-4)

    def test_convergence_bound(self):
        nu = np.linspace(1.0, 3.0, 41)
        w3 = SpectralWeight(cont_nu=nu, cont_sigma=np.ones_like(nu))
        with pytest.raises(ValidationError):
            weyl_transform(w3, 3, 5, 0)


class TestRelcorr:
    def test_line_mapping(self):
        # line (g, mu) -> line g (1 + mu^2/(2(2m)^2)) plus linear continuum
        g, mu, m = 1.0, 1.0, 1.2
        ch = make_channel(3, 0.5, +1)    # kappa = +1
        w = relcorr_weight(yukawa(g, mu), ch, m, nu_max=10.0)
        (gl, ml), = w.lines
        assert ml == mu
        assert gl == pytest.approx(g * (1 + mu ** 2 / (2 * (2 * m) ** 2)), rel=1e-12)
        # continuum: (1 + kappa) nu g / (2m)^2 above the line
        nu_test = 3.0
        sig = np.interp(nu_test, w.cont_nu, w.cont_sigma)
        assert sig == pytest.approx(2.0 * nu_test * g / (2 * m) ** 2, rel=1e-10)
        assert np.interp(0.5, w.cont_nu, w.cont_sigma, left=0.0) == pytest.approx(0.0, abs=1e-12)

    def test_kappa_minus_one_kills_continuum(self):
        ch = make_channel(3, 0.5, -1)    # kappa = -1
        w = relcorr_weight(yukawa(1.0, 1.0), ch, 1.0, nu_max=8.0)
        assert np.allclose(w.cont_sigma, 0.0, atol=1e-14)

    def test_nonrelativistic_limit(self):
        ch = make_channel(3, 0.5, +1)
        w = relcorr_weight(yukawa(1.0, 1.0), ch, 1e6, nu_max=8.0)
        (gl, ml), = w.lines
        assert gl == pytest.approx(1.0, abs=1e-10)
        assert np.max(np.abs(w.cont_sigma)) < 1e-10


class TestInteractionKind:
    def test_tags(self):
        InteractionKind("schrodinger")
        InteractionKind("dirac_vector", m=1.0)
        with pytest.raises(ValidationError):
            InteractionKind("dirac_vector")
        with pytest.raises(ValidationError):
            InteractionKind("bogus")

    def test_coupling_sign(self):
        assert InteractionKind("dirac_scalar", m=1.0).coupling_sign == -1
        assert InteractionKind("dirac_vector", m=1.0).coupling_sign == +1


class TestWeightFile:
    def test_round_trip(self):
        text = """
        # test weight
        kind dirac_vector 1.0
        mu0 1.0
        line 0.3 1.0
        cont 1.0 0.0
        cont 2.0 0.5
        cont 3.0 0.0
        """
        w, kind = parse_weight_text(text)
        assert w.lines == ((0.3, 1.0),)
        assert kind.tag == "dirac_vector" and kind.m == 1.0
        assert w.mu0 == 1.0

    def test_strict_validation(self):
        with pytest.raises(ValidationError):
            parse_weight_text("line 1.0")
        with pytest.raises(ValidationError):
            parse_weight_text("frob 1 2")
