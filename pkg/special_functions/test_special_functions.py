import unittest
import cmath
import math
import os
import sys
import tempfile

import numpy as np
from scipy.special import i0, j0

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exceptions import ConfigError, DomainError, PreconditionError
from models import MultiIndex
from special_functions import (
    KernelEvaluator,
    eval_E,
    eval_E_asymptotic,
    eval_E_mellin_barnes,
    eval_series_function,
    kernel_evaluator,
    moment_check,
    series_evaluator,
)
from special_functions.properties import (
    e1_imaginary_ratio,
    kernel_asymptotic_ratio,
    kernel_log_ratio,
    matching_scan,
    negative_ray_bound,
)
from special_functions.series import asymptotic_ratio
from weights import make_denjoy_weight
from weights.raw import RawGammaWeight


def log_weight():
    return make_denjoy_weight(MultiIndex(alphas=[(1, 1.0)]))


class TestSeries(unittest.TestCase):
    """Power series of the comparison functions"""

    def test_borel_exponential(self):
        """gamma(n+1) = n! gives E(z) = e^z"""
        w = RawGammaWeight("borel")
        z = 3 + 4j
        result = eval_series_function(series_evaluator(w, "E"), z, 1e-13)
        self.assertLess(abs(result.value / cmath.exp(z) - 1), 1e-12)
        self.assertEqual(result.method, "series")

    def test_mittag_leffler_cosh(self):
        """alpha = 2 gives E(x) = cosh(sqrt(x))"""
        w = RawGammaWeight("mittag_leffler", params={"alpha": 2.0})
        result = eval_E(w, 9.0, 1e-13)
        self.assertLess(abs(result.value / math.cosh(3.0) - 1), 1e-12)

    def test_borel_e1_bessel(self):
        """E1 of the Borel weight is sum z^n / (n!)^2 = I0(2 sqrt z)"""
        w = RawGammaWeight("borel")
        result = eval_E(w, 2.0, 1e-13, kind="E1")
        self.assertLess(abs(result.value.real / i0(2 * math.sqrt(2.0)) - 1), 1e-11)

    def test_borel_e1_heavy_cancellation(self):
        """E1(-x) = J0(2 sqrt x) survives forty digits of cancellation"""
        w = RawGammaWeight("borel")
        result = eval_E(w, -2500.0, 1e-10, kind="E1")
        self.assertLess(abs(result.value.real / j0(100.0) - 1), 1e-8)

    def test_value_at_zero(self):
        """E(0) = 1 / L(1)"""
        w = log_weight()
        result = eval_E(w, 0.0)
        self.assertAlmostEqual(result.log_magnitude, -math.log(math.log(1 + math.e)), places=13)

    def test_tolerance_floor(self):
        """tol below 1e-14 is a precondition error"""
        with self.assertRaises(PreconditionError):
            eval_series_function(series_evaluator(log_weight(), "E"), 1.0, 1e-15)

    def test_unknown_kind(self):
        """Only E, E1, Etilde and Estar exist"""
        with self.assertRaises(ConfigError):
            series_evaluator(log_weight(), "F")

    def test_etilde_coefficients_finite(self):
        """eps = 0 for a constant weight is clamped, so the coefficients stay finite"""
        se = series_evaluator(RawGammaWeight("constant", params={"c": 2.0}), "Etilde")
        coeffs = se.log_coefficients(np.arange(50, dtype=float))
        self.assertTrue(np.all(np.isfinite(coeffs)))

    def test_conjugate_symmetry(self):
        """Real coefficients: E(conj z) = conj E(z)"""
        w = log_weight()
        a = eval_E(w, 1.5 + 0.8j)
        b = eval_E(w, 1.5 - 0.8j)
        self.assertAlmostEqual(a.log_magnitude, b.log_magnitude, places=12)
        self.assertAlmostEqual(a.phase, -b.phase, places=12)

    def test_mellin_barnes_matches_series(self):
        """Off the positive ray the Mellin-Barnes integral reproduces the series"""
        w = log_weight()
        se = series_evaluator(w, "E")
        for z in [3 * cmath.exp(2j * math.pi / 3), 2.5j, -2.5]:
            series = eval_series_function(se, z, 1e-12).value
            integral = eval_E_mellin_barnes(w, z).value
            self.assertLess(abs(integral / series - 1), 1e-8, f"z={z}")

    def test_dispatch_left_half_plane(self):
        """eval_E away from the positive ray agrees with the series"""
        w = log_weight()
        z = complex(-1.5, 2.598)
        result = eval_E(w, z, 1e-10)
        self.assertEqual(result.method, "quadrature")
        series = eval_series_function(series_evaluator(w, "E"), z, 1e-12).value
        self.assertLess(abs(result.value / series - 1), 1e-8)

    def test_negative_ray_bounded(self):
        """|E(-r)| <= 10 for r in [1, 1e6]"""
        bound = negative_ray_bound(log_weight(), np.logspace(0, 6, 13))
        self.assertIsNotNone(bound)
        self.assertLessEqual(bound, 10.0)

    def test_e1_imaginary_axis(self):
        """log|E1(ix)| is comparable to Lambda(x) eps(x)"""
        w = log_weight()
        for x in [1e3, 1e4]:
            ratio = e1_imaginary_ratio(w, x)
            self.assertTrue(0.2 <= ratio <= 5.0, f"x={x}: {ratio}")


class TestAsymptotic(unittest.TestCase):
    """Saddle-point main term of E"""

    def test_positive_ray_ratio(self):
        """r E(r) over the main term lies in [0.5, 2] and approaches 1"""
        w = log_weight()
        ratios = [asymptotic_ratio(w, rho) for rho in [1e3, 1e4, 1e5]]
        for r in ratios:
            self.assertTrue(0.5 <= r <= 2.0, f"ratios={ratios}")
        gaps = [abs(r - 1) for r in ratios]
        self.assertTrue(gaps[0] >= gaps[1] >= gaps[2], f"ratios={ratios}")

    def test_bounded_branch(self):
        """On the negative ray the bounded branch E = -1/z is reported"""
        result = eval_E_asymptotic(log_weight(), -50.0)
        self.assertAlmostEqual(result.log_magnitude, -math.log(50.0), places=12)
        self.assertAlmostEqual(result.value.real, 1 / 50.0, places=12)

    def test_conjugate(self):
        """The asymptotic result at conj z is the conjugate"""
        w = log_weight()
        a = eval_E_asymptotic(w, 20 * cmath.exp(0.05j))
        b = eval_E_asymptotic(w, 20 * cmath.exp(-0.05j))
        self.assertAlmostEqual(a.log_magnitude, b.log_magnitude, places=10)
        self.assertAlmostEqual(a.phase, -b.phase, places=10)


class TestBorelKernel(unittest.TestCase):
    """Kernel of the Borel weight, K(t) = e^{-t}"""

    @classmethod
    def setUpClass(cls):
        cls.ke = kernel_evaluator(RawGammaWeight("borel"))

    def test_exponential(self):
        """K(t) = e^{-t} within 1e-6"""
        for t in [0.1, 1.0, 5.0, 10.0]:
            result = self.ke.eval_K(t)
            self.assertEqual(result.method, "quadrature")
            self.assertLess(abs(math.exp(result.log_magnitude + t) - 1), 1e-6, f"t={t}")

    def test_quadrature_up_to_cache_end(self):
        """Between t_asym and the cache end K stays on quadrature and the main term agrees within 10%"""
        self.ke.ensure_cache()
        self.assertIsNotNone(self.ke.t_asym)
        for t in np.geomspace(self.ke.t_asym, self.ke.t_hi, 5)[1:-1]:
            result = self.ke.eval_K(float(t))
            self.assertEqual(result.method, "quadrature")
            gap = math.expm1(result.log_magnitude - self.ke.asymptotic_log_K(float(t)))
            self.assertLess(abs(gap), 0.1, f"t={t}")

    def test_first_moment(self):
        """int e^{-t} dt = 1 to 1e-10"""
        self.assertLess(moment_check(self.ke, 0), 1e-10)

    def test_complex_argument(self):
        """K(z) = e^{-z} off the positive ray"""
        for z in [2 * cmath.exp(0.5j), 5 * cmath.exp(1.0j), 3 * cmath.exp(-0.8j)]:
            value = self.ke.eval_K_complex(z).value
            self.assertLess(abs(value / cmath.exp(-z) - 1), 1e-6, f"z={z}")

    def test_moment_cap(self):
        """n = 13 is outside the desk-scale range"""
        with self.assertRaises(PreconditionError):
            moment_check(self.ke, 13)

    def test_nonpositive_t(self):
        """K is evaluated for t > 0 only"""
        with self.assertRaises(DomainError):
            self.ke.eval_K(0.0)

    def test_cache_roundtrip(self):
        """A written cache loads back into a fresh evaluator; another weight's cache is refused"""
        with tempfile.TemporaryDirectory() as tmp:
            path = self.ke.export_csv(os.path.join(tmp, "kernel.csv"))
            fresh = KernelEvaluator(RawGammaWeight("borel"))
            self.assertTrue(fresh.load_csv(path))
            np.testing.assert_allclose(fresh.log_abs, self.ke.log_abs, rtol=1e-12, atol=1e-12)
            other = KernelEvaluator(RawGammaWeight("mittag_leffler", params={"alpha": 2.0}))
            self.assertFalse(other.load_csv(path))


class TestKernelSupport(unittest.TestCase):
    """Weights without a usable kernel"""

    def test_constant_weight(self):
        """A constant weight has no saddle point"""
        with self.assertRaises(ConfigError):
            KernelEvaluator(RawGammaWeight("constant", params={"c": 2.0}))

    def test_table_weight(self):
        """Tabulated weights have no complex continuation"""
        w = RawGammaWeight("table", table=[0.0, 0.0, 0.7, 1.8, 3.2])
        with self.assertRaises(ConfigError):
            KernelEvaluator(w)

    def test_unknown_kind(self):
        with self.assertRaises(ConfigError):
            KernelEvaluator(log_weight(), kind="K2")


class TestMittagLefflerKernel(unittest.TestCase):
    """alpha = 2: K(t) = t^{-1/2} e^{-sqrt t} / 2"""

    @classmethod
    def setUpClass(cls):
        cls.w = RawGammaWeight("mittag_leffler", params={"alpha": 2.0})
        cls.ke = kernel_evaluator(cls.w)

    def test_closed_form(self):
        """Quadrature matches the closed form"""
        for t in [0.5, 2.0, 10.0]:
            direct = math.exp(self.ke.eval_K(t).log_magnitude)
            exact = float(self.w.closed_form_kernel(t))
            self.assertLess(abs(direct / exact - 1), 1e-6, f"t={t}")


class TestLogWeightKernel(unittest.TestCase):
    """Kernel of L = log(rho + e)"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()
        cls.ke = kernel_evaluator(cls.w).ensure_cache()

    def test_moments(self):
        """int t^n K dt = gamma(n+1) within 1e-3 for n <= 8"""
        for n in range(9):
            self.assertLess(moment_check(self.ke, n), 1e-3, f"n={n}")

    def test_log_ratio_at_cache_end(self):
        """log K(t) / (-c eps(c)) lies in [0.8, 1.2] at the largest cached t"""
        ratio = kernel_log_ratio(self.ke)
        self.assertTrue(0.8 <= ratio <= 1.2, f"{ratio}")

    def test_asymptotic_ratios(self):
        """K over its main term lies in [0.5, 2] and approaches 1 as the saddle grows"""
        ratios = [kernel_asymptotic_ratio(self.ke, rho) for rho in [1e3, 1e4, 1e5]]
        for r in ratios:
            self.assertTrue(0.5 <= r <= 2.0, f"ratios={ratios}")
        gaps = [abs(r - 1) for r in ratios]
        self.assertTrue(gaps[0] >= gaps[1] >= gaps[2], f"ratios={ratios}")

    def test_beyond_cache_is_asymptotic(self):
        """Past the cache the saddle-point main term is returned"""
        result = self.ke.eval_K(2 * self.ke.t_hi)
        self.assertEqual(result.method, "asymptotic")
        self.assertLess(result.log_magnitude, self.ke.log_abs[-1])

    def test_matching_scan(self):
        """Some delta1 <= 0.1 keeps E(delta1 t) E(0.7 t) |K(t)| bounded and flat"""
        scan = matching_scan(self.ke)
        self.assertIsNotNone(scan["delta1"])
        self.assertTrue(math.isfinite(scan["sup"]))


class TestDualQuotientKernel(unittest.TestCase):
    """K* of L = log^2, built from the quotient L / L~"""

    @classmethod
    def setUpClass(cls):
        cls.w = make_denjoy_weight(MultiIndex(alphas=[(1, 2.0)]))
        cls.ke = kernel_evaluator(cls.w, "Kstar").ensure_cache()

    def test_moments(self):
        """The low moments of K* reproduce the quotient moment sequence"""
        for n in range(3):
            self.assertLess(moment_check(self.ke, n), 1e-2, f"n={n}")

    def test_value_finite(self):
        """K*(1) is finite"""
        self.assertTrue(math.isfinite(self.ke.eval_K(1.0).log_magnitude))


if __name__ == '__main__':
    unittest.main()
