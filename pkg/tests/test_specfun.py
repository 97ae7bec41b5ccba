"""Special functions against mpmath and closed-form identities."""

from __future__ import annotations

import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asian_spectral.errors import ConvergenceError, PoleError, UnderflowWarning
from asian_spectral.specfun import (
    FunctionAccuracy,
    bessel_k_imag,
    gamma_upper,
    gamma_weight,
    kummer_u,
    laguerre,
    log_gamma,
    whittaker_m,
    whittaker_w,
)

mp.mp.dps = 30


def rel(a, b):
    return abs(complex(a) - complex(b)) / max(abs(complex(b)), 1e-300)


# --- log_gamma and gamma_weight -------------------------------------------------


class TestLogGamma:
    def test_unit(self):
        assert abs(log_gamma(1.0)) < 1e-14

    def test_half(self):
        assert abs(log_gamma(0.5) - 0.5 * math.log(math.pi)) < 1e-13

    def test_modulus_one_plus_i(self):
        val = math.exp(2.0 * log_gamma(1.0 + 1.0j).real)
        assert val == pytest.approx(math.pi / math.sinh(math.pi), rel=1e-12)
        assert val == pytest.approx(0.2720290, abs=1e-7)

    @pytest.mark.parametrize("z", [0.3 + 0.0j, -2.7 + 0.1j, -0.5 + 15j, 3.0 - 40j, 25.0 + 1j, 1e-3 + 0.0j])
    def test_against_mpmath(self, z):
        want = complex(mp.loggamma(mp.mpc(z.real, z.imag)))
        assert abs(complex(log_gamma(z)) - want) <= 1e-12 * max(1.0, abs(want))

    @pytest.mark.parametrize("z", [0.0, -1.0, -2.0, -7.0])
    def test_poles(self, z):
        with pytest.raises(PoleError):
            log_gamma(z)

    def test_vectorized(self):
        z = np.array([0.5, 1.5 + 2j, 4.0])
        out = log_gamma(z)
        assert out.shape == (3,)
        for zi, oi in zip(z, out):
            assert oi == pytest.approx(complex(log_gamma(complex(zi))), abs=1e-15)


class TestGammaWeight:
    def test_identity_nu2(self):
        assert gamma_weight(2.0, 0.0) == pytest.approx(1.0, rel=1e-14)

    def test_nu0_u2(self):
        assert gamma_weight(0.0, 2.0) == pytest.approx(math.pi / math.sinh(math.pi), rel=1e-12)

    def test_oracle(self):
        want = float(abs(mp.gamma(mp.mpc(-0.3, 0.5))) ** 2)
        assert gamma_weight(-0.6, 1.0) == pytest.approx(want, rel=1e-12)

    @pytest.mark.parametrize("nu", [0.0, -2.0, -4.0])
    def test_pole_at_zero_u(self, nu):
        with pytest.raises(PoleError):
            gamma_weight(nu, 0.0)

    def test_reflection_sweep(self):
        y = np.linspace(0.1, 30.0, 300)
        # |Gamma(iy)|^2 y sinh(pi y) = pi, with gamma_weight(0, u) = |Gamma(iu/2)|^2
        vals = gamma_weight(0.0, 2.0 * y) * y * np.sinh(np.pi * y)
        assert np.max(np.abs(vals / np.pi - 1.0)) < 1e-10


# --- Bessel K of imaginary order ---------------------------------------------


class TestBesselKImag:
    def test_k0_at_one(self):
        assert bessel_k_imag(0.0, 1.0) == pytest.approx(0.4210244382, rel=1e-10)

    def test_even_in_order(self):
        assert bessel_k_imag(-1.0, 1.0) == bessel_k_imag(1.0, 1.0)

    def test_u2_z3_against_integral(self):
        want = float(mp.quad(lambda t: mp.exp(-3 * mp.cosh(t)) * mp.cos(2 * t), [0, 2, 5, 8]))
        assert bessel_k_imag(2.0, 3.0) == pytest.approx(want, rel=1e-10)

    @pytest.mark.parametrize("u,z", [(0.0, 1e-3), (5.0, 0.01), (40.0, 0.5), (40.0, 50.0), (12.3, 12.3),
                                     (0.5, 30.0), (25.0, 3.0)])
    def test_against_mpmath(self, u, z):
        want = float(mp.besselk(mp.mpc(0, u), z).real)
        assert rel(bessel_k_imag(u, z), want) < 1e-9

    def test_real_output(self):
        out = bessel_k_imag(np.linspace(0.0, 40.0, 41), 2.0)
        assert out.dtype == np.float64

    def test_underflow_flagged(self):
        with pytest.warns(UnderflowWarning):
            v = bessel_k_imag(1.0, 900.0)
        assert v == 0.0

    @settings(max_examples=30, deadline=None)
    @given(u=st.floats(0.0, 40.0), z=st.floats(0.01, 50.0))
    def test_symmetry_property(self, u, z):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnderflowWarning)
            assert bessel_k_imag(u, z) == bessel_k_imag(-u, z)


# --- Tricomi U and Whittaker functions ---------------------------------------


class TestKummerU:
    def test_power_identity(self):
        assert kummer_u(1.5, 2.5, 2.0).real == pytest.approx(2.0**-1.5, rel=1e-12)

    def test_u111(self):
        assert kummer_u(1.0, 1.0, 1.0).real == pytest.approx(math.e * gamma_upper(0.0, 1.0), rel=1e-10)

    def test_small_z(self):
        want = complex(mp.hyperu(0.3, 0.7, 0.01))
        assert rel(kummer_u(0.3, 0.7, 0.01), want) < 1e-10

    @pytest.mark.parametrize("a,b,z", [
        (0.5 + 3j, 1 + 6j, 2.0), (-1.2 + 0.5j, 2.0, 5.0), (2.0, 3.0, 0.2), (1.7 - 10j, 1 - 20j, 40.0),
        (-3.5, -6.0, 1.3), (0.25, 4.0, 100.0),
    ])
    def test_against_mpmath(self, a, b, z):
        want = complex(mp.hyperu(a, b, z))
        assert rel(kummer_u(a, b, z), want) < 1e-9

    def test_integer_b_continuity(self):
        # no special case at integer b: values just off the integer agree with it
        exact = complex(kummer_u(0.7 + 0.3j, 3.0, 1.5))
        near = complex(kummer_u(0.7 + 0.3j, 3.0 + 1e-9, 1.5))
        assert rel(near, exact) < 1e-8
        assert rel(exact, complex(mp.hyperu(0.7 + 0.3j, 3, 1.5))) < 1e-10

    def test_reports_unreachable_tolerance(self):
        with pytest.raises(ConvergenceError):
            whittaker_w(-0.3, 25j, 150.0, FunctionAccuracy(rel_tol=1e-15))


class TestWhittakerW:
    def test_w0half(self):
        assert whittaker_w(0.0, 0.5, 2.0).real == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_incomplete_gamma_form(self):
        # e^{1/2} Gamma(2, 1) = 1.6487213 * 0.7357589 = 1.2130613
        want = math.exp(0.5) * 2.0 * math.exp(-1.0)
        assert whittaker_w(0.5, 1.0, 1.0).real == pytest.approx(want, rel=1e-12)
        assert whittaker_w(0.5, 1.0, 1.0).real == pytest.approx(1.6487213 * 0.7357589, abs=2e-7)

    def test_imaginary_mu_is_real(self):
        assert abs(whittaker_w(0.8, 0.5j, 1.0).imag) <= 1e-14

    def test_mu_symmetry(self):
        assert rel(whittaker_w(-1.2, 0.7 + 2j, 3.0), whittaker_w(-1.2, -0.7 - 2j, 3.0)) < 1e-11

    @pytest.mark.parametrize("kappa,mu,z", [
        (0.8, 0.5j, 1.0), (-1.2, 7.5j, 0.3), (1.3, 20j, 2.0), (-0.3, 0.25, 8.0), (1.75, 2.3, 0.7),
        (-1.5, 0.5j, 16.0), (0.8, 11j, 60.0),
    ])
    def test_against_mpmath(self, kappa, mu, z):
        want = complex(mp.whitw(kappa, mu, z))
        assert rel(whittaker_w(kappa, mu, z), want) < 1e-9

    @pytest.mark.parametrize("kappa,mu,z", [(0.3, 0.35, 1.5), (-0.8, 1.2j, 4.0), (1.1, 0.7 + 0.5j, 0.6)])
    def test_m_combination(self, kappa, mu, z):
        # W = Gamma(-2mu)/Gamma(1/2-mu-kappa) M_{k,mu} + Gamma(2mu)/Gamma(1/2+mu-kappa) M_{k,-mu}
        mu = complex(mu)
        g = lambda s: complex(mp.gamma(s))
        combo = (g(-2 * mu) / g(0.5 - mu - kappa) * complex(whittaker_m(kappa, mu, z))
                 + g(2 * mu) / g(0.5 + mu - kappa) * complex(whittaker_m(kappa, -mu, z)))
        assert rel(whittaker_w(kappa, mu, z), combo) < 1e-10

    def test_vectorized_shapes(self):
        z = np.linspace(0.5, 5.0, 7)
        out = whittaker_w(0.3, 2j, z)
        assert out.shape == z.shape
        assert out[3] == pytest.approx(complex(whittaker_w(0.3, 2j, z[3])), rel=1e-14)


# --- Laguerre and incomplete gamma --------------------------------------------


class TestLaguerre:
    def test_degree_zero(self):
        assert laguerre(0, -3.3, 7.0) == 1.0

    def test_degree_one(self):
        assert laguerre(1, 0.5, 0.25) == pytest.approx(1.25, rel=1e-15)

    @pytest.mark.parametrize("alpha,z", [(-0.6, 0.3), (2.5, 4.0), (-1.4, 1e-3)])
    def test_explicit_low_degree(self, alpha, z):
        l2 = z * z / 2 - (alpha + 2) * z + (alpha + 1) * (alpha + 2) / 2
        l3 = (-z**3 / 6 + (alpha + 3) * z * z / 2 - (alpha + 2) * (alpha + 3) * z / 2
              + (alpha + 1) * (alpha + 2) * (alpha + 3) / 6)
        assert laguerre(2, alpha, z) == pytest.approx(l2, rel=1e-13)
        assert laguerre(3, alpha, z) == pytest.approx(l3, rel=1e-13)

    def test_against_mpmath(self):
        assert laguerre(7, -3.6, 2.2) == pytest.approx(float(mp.laguerre(7, -3.6, 2.2)), rel=1e-12)


class TestGammaUpper:
    def test_a1(self):
        assert gamma_upper(1.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_a2(self):
        assert gamma_upper(2.0, 1.0) == pytest.approx(0.7357589, abs=1e-7)

    def test_half_erfc(self):
        assert gamma_upper(0.5, 0.25) == pytest.approx(math.sqrt(math.pi) * math.erfc(0.5), rel=1e-13)

    @pytest.mark.parametrize("a,z", [(-1.0, 2.0), (-2.6, 0.3), (0.0, 5.0), (7.5, 1.0), (1.2, 40.0), (-0.4, 0.01)])
    def test_against_mpmath(self, a, z):
        assert gamma_upper(a, z) == pytest.approx(float(mp.gammainc(a, z)), rel=1e-12)

    def test_recurrence(self):
        worst = 0.0
        for a in np.linspace(0.1, 10.0, 12):
            for z in np.linspace(0.1, 20.0, 12):
                lhs = gamma_upper(a + 1.0, z)
                rhs = a * gamma_upper(a, z) + z**a * math.exp(-z)
                worst = max(worst, abs(lhs - rhs) / abs(lhs))
        assert worst < 1e-12

    def test_overflow_flagged(self):
        with pytest.raises(OverflowError):
            gamma_upper(400.0, 1e-3)

    def test_domain(self):
        with pytest.raises(ValueError):
            gamma_upper(1.0, 0.0)


def test_accuracy_validation():
    with pytest.raises(ValueError):
        FunctionAccuracy(rel_tol=0.0)
    with pytest.raises(ValueError):
        FunctionAccuracy(rel_tol=1e-2)
    with pytest.raises(ValueError):
        FunctionAccuracy(abs_floor=-1.0)
