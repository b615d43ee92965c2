import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from multisd.errors import DomainError
from multisd.kernels import (SERIES_CUTOFF, T0_CLOSED_FORM, T1_CAP, T1_REFERENCE_HATS, T1_REFERENCE_MAJ,
                             AlphaWeights, KernelParams, G_alpha, G_alpha_t, G_integral_rep, P_poly, Q_poly,
                             constants_report, critical_t0, critical_t1, critical_x0, delta_P, delta_Q,
                             e_kernel, g_kernel, h_kernel, h_multi, laplace_of_m, loggamma_levy_rep_check,
                             m_measure, mellin_ratio, t1_argmax, t_plus_P, t_plus_Q)
from multisd.numerics import DEFAULT_GRID, integrate
from multisd.theta import ScalarFunction, theta_c

# mpmath at 50 digits: e_t(u) = e^{-tu}/(1 - e^{-u}), g = a e_t(u) - e_t(u/a), h = e_t(u) - e_t(u/a)
E_REF = [(0.5, 1e-07, 9999999.999999996), (0.5, 1e-05, 99999.99999958332), (0.5, 0.0003, 3333.333320833334),
         (0.5, 0.05, 19.997916818566377), (0.5, 1.0, 0.9595173756674719), (0.5, 7.5, 0.02353076035177737),
         (0.5, 40.0, 2.061153622438558e-09), (0.5, 300.0, 7.175095973164411e-66),
         (0.9, 1e-07, 9999999.600000005), (0.9, 1e-05, 99999.60000038333), (0.9, 0.0003, 3332.9333448338734),
         (0.9, 0.05, 19.601931534457613), (0.9, 1.0, 0.6431837314294155), (0.9, 7.5, 0.0011715275743817619),
         (0.9, 40.0, 2.319522830243567e-16), (0.9, 300.0, 5.50161108174042e-118)]
G_REF = [(0.6, 0.5, 1e-07, 4.444444444444439e-09), (0.6, 0.5, 1e-05, 4.444444444395474e-07),
         (0.6, 0.5, 0.0003, 1.3333333201111112e-05), (0.6, 0.5, 0.05, 0.002221610205018411),
         (0.6, 0.5, 1.0, 0.03991319130490418), (0.6, 0.5, 7.5, 0.012187994880678872),
         (0.6, 0.5, 40.0, 1.2366888352253394e-09), (0.6, 0.5, 300.0, 4.3050575838986463e-66),
         (0.3, 1.0, 1e-07, 0.3499999747222222), (0.3, 1.0, 1e-05, 0.3499974722222223),
         (0.3, 1.0, 0.0003, 0.3499241666680443), (0.3, 1.0, 0.05, 0.3373674848223085),
         (0.3, 1.0, 1.0, 0.1375993054707624), (0.3, 1.0, 7.5, 0.00016601711863758282),
         (0.3, 1.0, 40.0, 1.2745062765874766e-18), (0.3, 1.0, 300.0, 1.544460066723604e-131),
         (1.7, 0.8, 1e-07, -0.20999999962941168), (1.7, 0.8, 1e-05, -0.2099999629400933),
         (1.7, 0.8, 0.0003, -0.2099988872604421), (1.7, 0.8, 0.05, -0.20978768851557747),
         (1.7, 0.8, 1.0, -0.1962330877244698), (1.7, 0.8, 7.5, -0.02546610622428131),
         (1.7, 0.8, 40.0, -6.684110912408809e-09), (1.7, 0.8, 300.0, -4.873464972333925e-62)]
H_REF = [(0.6, 0.2, 1e-07, 4000000.0), (0.6, 0.2, 1e-05, 39999.99999997778), (0.6, 0.2, 0.0003, 1333.333332667947),
         (0.6, 0.2, 0.05, 7.999924582320729), (0.6, 0.2, 1.0, 0.4118326839312725),
         (0.6, 0.2, 7.5, 0.14116833371896323), (0.6, 0.2, 40.0, 0.00033384303111019906),
         (0.6, 0.2, 300.0, 8.756510762696491e-27), (0.3, 0.1, 1e-07, 6999999.999999992),
         (0.3, 0.1, 1e-05, 69999.99999910555), (0.3, 0.1, 0.0003, 2333.333306505461),
         (0.3, 0.1, 0.05, 13.995684080039421), (0.3, 0.1, 1.0, 0.6883932591969418),
         (0.3, 0.1, 7.5, 0.39054295725126603), (0.3, 0.1, 40.0, 0.018314019291941864),
         (0.3, 0.1, 300.0, 9.357622968840158e-14)]
# Gamma(t)^(n-1) d^lam Gamma(lam+t) / prod Gamma(a_k lam + t)
MR_REF = [((0.5, 0.5), 0.5, 0.3, 0.8740445704547053), ((0.5, 0.5), 0.5, 2.0, 0.75),
          ((0.5, 0.5), 0.5, 17.0, 0.7123199958667565), ((0.5, 0.5), 1.0, 0.3, 0.8373555177091251),
          ((0.5, 0.5), 1.0, 2.0, 0.5), ((0.5, 0.5), 1.0, 17.0, 0.19069204900535586),
          ((0.2, 0.3, 0.5), 2.0, 0.3, 0.7465515424644492), ((0.2, 0.3, 0.5), 2.0, 2.0, 0.21546324831177696),
          ((0.2, 0.3, 0.5), 2.0, 17.0, 0.0036454233961470623)]
GAT_REF = [(0.3, 0.5, 0.1, 0.9688928230351667), (0.3, 0.5, 5.0, 0.8041579642481443),
           (0.3, 0.5, 80.0, 0.7858244744930165), (0.3, 2.0, 0.1, 0.965161522394157),
           (0.3, 2.0, 5.0, 0.3558815083552454), (0.3, 2.0, 80.0, 0.030848088406202522),
           (0.7, 0.5, 0.1, 0.9795820382597786), (0.7, 0.5, 5.0, 0.9067010259561292),
           (0.7, 0.5, 80.0, 0.9015925103879565), (0.7, 2.0, 0.1, 0.9759799837435494),
           (0.7, 2.0, 5.0, 0.5484273703929471), (0.7, 2.0, 80.0, 0.17864693353527167),
           (2.5, 0.5, 0.1, 1.1768353892831167), (2.5, 0.5, 5.0, 1.6526947828642833),
           (2.5, 0.5, 80.0, 1.6799543946138171), (2.5, 2.0, 0.1, 1.2433325493494245),
           (2.5, 2.0, 5.0, 56.769336906455955), (2.5, 2.0, 80.0, 19767.369956701743)]

X = DEFAULT_GRID.values()


def nonincreasing(v, tol=1e-10):
    return bool(np.all(np.diff(v) <= tol))


class TestParams:
    def test_alpha_weights(self):
        a = AlphaWeights((0.3, 0.7))
        assert a.d_alpha == pytest.approx(0.3 ** 0.3 * 0.7 ** 0.7, rel=1e-15)
        assert AlphaWeights((1.0,)).d_alpha == 1.0

    @pytest.mark.parametrize("w", [(), (0.5, 0.6), (1.2, -0.2), (0.0, 1.0), (0.9,)])
    def test_invalid_weights(self, w):
        with pytest.raises(DomainError):
            AlphaWeights(w)

    @pytest.mark.parametrize("n", [2, 5, 12])
    def test_geometric(self, n):
        a = AlphaWeights.geometric(n)
        assert len(a) == n and math.fsum(a.weights) == pytest.approx(1.0, abs=1e-15)
        assert all(a.weights[i] == pytest.approx(2 * a.weights[i + 1]) for i in range(n - 2))

    @pytest.mark.parametrize("args", [(1.0, 0.5), (0.0, 0.5), (0.5, -0.1)])
    def test_kernel_params(self, args):
        with pytest.raises(DomainError):
            KernelParams(*args)


class TestEKernel:
    @pytest.mark.parametrize("t, u, ref", E_REF)
    def test_oracle(self, t, u, ref):
        assert e_kernel(t)(u) == pytest.approx(ref, rel=1e-12)

    def test_examples(self):
        assert e_kernel(1.0)(math.log(2)) == pytest.approx(1.0, rel=1e-15)
        assert 1e-8 * e_kernel(0.3)(1e-8) == pytest.approx(1.0, abs=1e-6)
        # closed form e^{-1/2}/(1 - e^{-1}) = 0.959517..., the oracle value
        assert e_kernel(0.5)(1.0) == pytest.approx(math.exp(-0.5) / -math.expm1(-1.0), rel=1e-15)
        assert abs(e_kernel(0.5)(1.0) - 0.959572) > 5e-5

    def test_domain(self):
        with pytest.raises(DomainError):
            e_kernel(0.5)(0.0)

    @pytest.mark.parametrize("t", [0.0, 0.15, 0.5, 1.0, 3.0])
    def test_continuous_at_crossover(self, t):
        e = e_kernel(t)
        mp.mp.dps = 40
        for u in (SERIES_CUTOFF * (1 - 1e-9), SERIES_CUTOFF * (1 + 1e-9)):
            ref = mp.exp(-t * mp.mpf(u)) / (1 - mp.exp(-mp.mpf(u)))
            assert e(u) == pytest.approx(float(ref), rel=1e-13)

    @pytest.mark.parametrize("t", [0.12, 0.5, 0.9])
    def test_derivatives(self, t):
        e = e_kernel(t)
        e.check_derivatives(probes=(0.05, 0.5, 2.0, 9.0))
        mp.mp.dps = 30
        for j in (1, 3, 6):
            for u in (0.2, 3.0):
                ref = mp.diff(lambda v: mp.exp(-t * v) / (1 - mp.exp(-v)), u, j)
                assert e.derivative(j, u) == pytest.approx(float(ref), rel=1e-9)

    def test_monotone_in_grid(self):
        assert nonincreasing(e_kernel(0.9)(X), 0.0)


class TestGHKernels:
    @pytest.mark.parametrize("a, t, u, ref", G_REF)
    def test_g_oracle(self, a, t, u, ref):
        assert g_kernel(a, t)(u) == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("a, t, u, ref", H_REF)
    def test_h_oracle(self, a, t, u, ref):
        assert h_kernel(a, t)(u) == pytest.approx(ref, rel=1e-10)

    def test_g_limit_at_zero(self):
        assert g_kernel(0.6, 0.8)(1e-9) == pytest.approx(0.4 * 0.3, abs=1e-6)

    @pytest.mark.parametrize("a, t", [(0.3, 1.0), (0.7, 0.5), (0.5, 2.0)])
    def test_g_integral(self, a, t):
        val = integrate(g_kernel(a, t), (0.0, math.inf), 1e-12).value
        assert val == pytest.approx(-a * math.log(a), abs=1e-9)

    def test_sign_boundary(self):
        assert g_kernel(0.6, 0.5)(X).min() >= -1e-10
        assert g_kernel(0.6, 0.49)(np.array([1e-4, 1e-3])).max() < 0

    @pytest.mark.parametrize("a", [0.2, 0.5, 0.8])
    def test_sign_boundary_panel(self, a):
        assert g_kernel(a, 0.5)(X).min() >= -1e-10
        assert g_kernel(a, 0.45)(X).min() < 0

    @pytest.mark.parametrize("a", [0.3, 0.6, 0.9])
    def test_monotonicity_boundary_panel(self, a):
        assert nonincreasing(g_kernel(a, T0_CLOSED_FORM)(X))
        assert not nonincreasing(g_kernel(a, T0_CLOSED_FORM - 0.02)(X))

    def test_h_monotonicity(self):
        assert nonincreasing(h_kernel(0.6, 0.2)(X))
        assert not nonincreasing(h_kernel(0.6, 0.10)(X))

    @given(st.floats(1e-5, 200.0), st.floats(0.05, 0.95), st.floats(0.0, 2.0))
    def test_h_is_theta_alpha_of_e(self, u, a, t):
        e = e_kernel(t)
        assert h_kernel(a, t)(u) == pytest.approx(theta_c(e, a)(u), rel=1e-12, abs=1e-12 * e(u))

    @given(st.floats(1e-5, 200.0), st.floats(0.05, 0.95), st.floats(0.0, 2.0))
    def test_g_antisymmetry(self, u, a, t):
        e = e_kernel(t)
        gt = ScalarFunction(lambda v: np.asarray(v) * e(v), 0, (), "g_t")
        rhs = -theta_c(gt, 1.0 / a)(u) / u
        assert g_kernel(a, t)(a * u) == pytest.approx(rhs, rel=1e-9, abs=1e-10 * e(a * u))

    @given(st.floats(1e-5, 200.0), st.floats(0.05, 0.95), st.floats(0.0, 2.0))
    def test_g_scaling(self, u, a, t):
        lhs = g_kernel(a, t)(u)
        assert lhs == pytest.approx(-a * g_kernel(1.0 / a, t)(u / a), rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("f", [lambda: g_kernel(0.4, 0.7), lambda: h_kernel(0.4, 0.7),
                                   lambda: h_multi(AlphaWeights((0.2, 0.3, 0.5)), 0.7)])
    def test_derivatives(self, f):
        f().check_derivatives(probes=(0.05, 0.5, 2.0, 9.0))


class TestHMulti:
    @given(st.floats(1e-5, 200.0), st.lists(st.floats(0.05, 1.0), min_size=2, max_size=5), st.floats(0.01, 2.0))
    def test_sum_of_g(self, u, raw, t):
        w = np.array(raw) / sum(raw)
        w[-1] = 1.0 - w[:-1].sum()
        if np.any(w <= 0) or np.any(w >= 1):
            return
        a = AlphaWeights(tuple(w))
        total = sum(g_kernel(ak, t)(u) for ak in a.weights)
        scale = e_kernel(t)(u) + sum(e_kernel(t)(u / ak) for ak in a.weights)
        assert abs(h_multi(a, t)(u) - total) <= 1e-12 * scale

    def test_positive_at_half(self):
        assert h_multi(AlphaWeights((0.5, 0.5)), 0.5)(X).min() >= -1e-10

    def test_decreasing_at_t0(self):
        assert nonincreasing(h_multi(AlphaWeights((0.3, 0.7)), T0_CLOSED_FORM)(X))


class TestMMeasure:
    def test_branches(self):
        m = m_measure(AlphaWeights((0.5, 0.5)), 1.0)
        assert m(0.5) == 0 and m(1.5) == 1

    @pytest.mark.parametrize("w", [(0.5, 0.5), (0.3, 0.7)])
    def test_bounds_at_t_one(self, w):
        v = m_measure(AlphaWeights(w), 1.0)(np.linspace(0, 200, 20001))
        assert v.min() >= 0 and v.max() <= 2

    def test_negative_for_small_t(self):
        assert m_measure(AlphaWeights((0.3, 0.7)), 0.4)(np.linspace(0, 200, 20001)).min() < 0

    def test_only_two_weights(self):
        with pytest.raises(DomainError):
            m_measure(AlphaWeights((0.2, 0.3, 0.5)), 1.0)

    @pytest.mark.parametrize("w", [(0.5, 0.5), (0.3, 0.7)])
    @pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
    def test_laplace_transform_is_h_over_u(self, w, u):
        a = AlphaWeights(w)
        assert laplace_of_m(a, 1.0, u) == pytest.approx(h_multi(a, 1.0)(u) / u, abs=1e-6)


class TestGammaRatios:
    @pytest.mark.parametrize("a, t, lam, ref", GAT_REF)
    def test_G_alpha_t_oracle(self, a, t, lam, ref):
        assert G_alpha_t(a, t, lam) == pytest.approx(ref, rel=1e-12)

    def test_G_alpha_t_examples(self):
        assert G_alpha_t(0.5, 1.0, 1.0) == pytest.approx(math.sqrt(0.5) / (math.sqrt(math.pi) / 2), rel=1e-14)
        for a in (0.2, 0.7, 3.0):
            assert G_alpha_t(a, 0.8, 0.0) == pytest.approx(1.0, abs=1e-15)

    def test_G_alpha(self):
        assert G_alpha(0.5, 2.0) == pytest.approx(math.gamma(2.0) ** 0.5 / math.gamma(1.0), rel=1e-14)
        with pytest.raises(DomainError):
            G_alpha(0.5, 0.0)

    @given(st.floats(0.05, 0.95), st.floats(0.2, 5.0), st.floats(0.0, 50.0))
    def test_reflection(self, a, t, lam):
        assert G_alpha_t(a, t, lam) * G_alpha_t(1.0 / a, t, a * lam) ** a == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("a, t, lam", [(0.5, 1.0, 1.0), (0.7, 0.5, 3.0), (0.3, 2.0, 0.25)])
    def test_integral_representation(self, a, t, lam):
        assert abs(G_integral_rep(a, t, lam) - G_alpha_t(a, t, lam)) <= 1e-6

    def test_integral_representation_at_zero(self):
        assert G_integral_rep(0.4, 1.0, 0.0) == 1.0

    @pytest.mark.parametrize("w, t, lam, ref", MR_REF)
    def test_mellin_ratio_oracle(self, w, t, lam, ref):
        assert mellin_ratio(AlphaWeights(w), t, lam) == pytest.approx(ref, rel=1e-12)

    def test_mellin_ratio_trivial(self):
        assert mellin_ratio(AlphaWeights((0.3, 0.7)), 0.8, 0.0) == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(mellin_ratio(AlphaWeights((1.0,)), 0.7, np.linspace(0, 30, 7)), 1.0,
                                   atol=1e-14)

    def test_mellin_ratio_half_half_closed_form(self):
        v = mellin_ratio(AlphaWeights((0.5, 0.5)), 0.5, 2.0)
        assert v == pytest.approx(math.gamma(0.5) * 0.25 * math.gamma(2.5) / math.gamma(1.5) ** 2, rel=1e-14)

    @given(st.floats(0.5, 3.0), st.floats(0.0, 40.0))
    def test_mellin_ratio_bounded_by_one(self, t, lam):
        assert 0 < mellin_ratio(AlphaWeights((0.25, 0.75)), t, lam) <= 1 + 1e-14


class TestPolynomials:
    def test_P_nonnegative_at_t0(self):
        x = np.geomspace(1e-4, 50, 4000)
        p = P_poly(x, T0_CLOSED_FORM)
        assert np.all(p >= -1e-12 * x * np.expm1(x) ** 2)

    def test_Q_signs(self):
        assert Q_poly(X, 0.2).min() >= 0
        x = X[X > critical_x0()]
        assert Q_poly(x, 0.10).min() < 0

    def test_P_roots(self):
        x = np.geomspace(1e-2, 30, 50)
        np.testing.assert_allclose(P_poly(x, t_plus_P(x)) / (x * np.expm1(x) ** 2), 0.0, atol=1e-9)

    def test_Q_roots(self):
        x = np.linspace(critical_x0() + 1e-3, 50, 60)
        np.testing.assert_allclose(Q_poly(x, t_plus_Q(x)), 0.0, atol=1e-13)

    def test_discriminants(self):
        x = np.array([0.5, 2.0, 6.0])
        em = np.expm1(x)
        np.testing.assert_allclose(delta_P(x), 16 * np.exp(x) * em ** 2 * (np.sinh(x / 2) ** 2 - (x / 2) ** 2),
                                   rtol=1e-12)
        np.testing.assert_allclose(delta_Q(x), 1 - 4 * x ** 2 * np.exp(x) / em ** 2, rtol=1e-12, atol=1e-15)
        assert delta_Q(critical_x0()) == pytest.approx(0.0, abs=1e-14)

    def test_t_plus_P(self):
        assert t_plus_P(1e-6) == pytest.approx(T0_CLOSED_FORM, abs=1e-6)
        assert nonincreasing(t_plus_P(np.geomspace(1e-4, 30, 3000)), 0.0)

    def test_t_plus_Q_at_x0(self):
        x0 = critical_x0()
        assert t_plus_Q(x0) == pytest.approx((1 - 2 * x0 / math.expm1(x0)) / (2 * x0), rel=1e-12)
        assert t_plus_Q(T1_CAP) < 0.02

    def test_t_plus_Q_domain(self):
        with pytest.raises(DomainError):
            t_plus_Q(2.0)


class TestConstants:
    def test_t0(self):
        assert abs(critical_t0() - (0.5 + 1 / (2 * math.sqrt(3)))) <= 1e-8

    def test_x0(self):
        x0 = critical_x0()
        assert abs(x0 - 4.35463796993) <= 1e-8 and abs(math.sinh(x0 / 2) - x0) <= 1e-10

    def test_t1(self):
        t1 = critical_t1()
        assert abs(t1 - 0.15160) <= 2e-4
        assert abs(t1 - T1_REFERENCE_HATS) <= 1e-11
        assert abs(t1 - T1_REFERENCE_MAJ) > 1e-4
        assert 5.2 < t1_argmax() < 5.5

    def test_t1_dense_grid_oracle(self):
        x = np.linspace(critical_x0() * (1 + 1e-12), T1_CAP, 1_000_000)
        assert critical_t1() >= float(np.max(t_plus_Q(x))) - 1e-15
        assert critical_t1() - float(np.max(t_plus_Q(x))) <= 1e-12

    def test_t1_characterizes_Q(self):
        t1 = critical_t1()
        assert Q_poly(X, t1 + 1e-6).min() >= -1e-10
        assert Q_poly(X, t1 - 1e-3).min() < 0

    def test_report(self):
        rep = constants_report()
        assert set(rep) == {"t0", "x0", "t1"}
        d = rep["t1"].to_json()
        assert d["reference_values"] == [T1_REFERENCE_MAJ, T1_REFERENCE_HATS]
        assert len(d["abs_diffs"]) == 2 and d["achieving_x"] == pytest.approx(t1_argmax())


class TestLogGammaRepresentation:
    @pytest.mark.parametrize("t, lam", [(1.0, 1.0), (0.5, 3.0), (2.0, 0.25), (0.1, 10.0)])
    def test_small_deviation(self, t, lam):
        assert loggamma_levy_rep_check(t, lam) <= 1e-7

    def test_zero(self):
        assert loggamma_levy_rep_check(0.7, 0.0) == 0.0
