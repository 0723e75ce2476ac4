import unittest
import cmath
import math
import os
import sys
import tempfile

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exceptions import ConfigError, DivergentIntegrandError, PreconditionError
from models import MultiIndex
from saddle_geometry import Contour, build_contour, psi_radius
from special_functions import eval_E, kernel_evaluator
from transforms import (
    EntireRep,
    Jet,
    geometric_jet,
    inverse_singular,
    load_jet,
    moment_sum,
    pole_jet,
    polynomial_jet,
    regular_transform,
    regular_transform_pm,
    regularity_probe,
    save_jet,
    singular_transform,
    stability_probe,
)
from transforms.jet import log_gamma_ratio_jet
from weights import make_denjoy_weight
from weights.raw import RawGammaWeight


def log_weight():
    return make_denjoy_weight(MultiIndex(alphas=[(1, 1.0)]))


def log_squared_weight():
    return make_denjoy_weight(MultiIndex(alphas=[(1, 2.0)]))


class TestJet(unittest.TestCase):
    """Jet storage and files"""

    def test_json_roundtrip_with_zero(self):
        """Zero coefficients are written as null and read back as -inf"""
        jet = Jet.from_values([1.0, 0.0, -2.5, 1j], provenance="sampled")
        with tempfile.TemporaryDirectory() as tmp:
            path = save_jet(jet, os.path.join(tmp, "jet.json"))
            back = load_jet(path)
        self.assertEqual(back.provenance, "sampled")
        self.assertEqual(back.log_mag[1], -math.inf)
        np.testing.assert_allclose(back.values(), jet.values())

    def test_malformed_file(self):
        """A file without coefficients is a config error"""
        with self.assertRaises(ConfigError):
            Jet.from_json('{"provenance": "sampled"}')

    def test_nonfinite_rejected(self):
        """NaN magnitudes violate the finite-entries invariant"""
        with self.assertRaises(ValueError):
            Jet(log_mag=[0.0, float("nan")], phase=[0.0, 0.0])

    def test_unknown_provenance(self):
        with self.assertRaises(ValueError):
            Jet(log_mag=[0.0], phase=[0.0], provenance="measured")

    def test_geometric_closed_form(self):
        """pole_jet(2) stores a_n = 2^{-(n+1)} and the ratio 1/2"""
        jet = pole_jet(2.0, n_terms=10)
        self.assertAlmostEqual(jet.values()[3].real, 2.0 ** -4)
        self.assertEqual(jet.ratio(), 0.5)


class TestSingularTransform(unittest.TestCase):
    """S_L and its inverse"""

    def test_unit_jet(self):
        """(1, 0, 0, ...) rescales to b_0 = 1/L(1)"""
        w = log_weight()
        rep = singular_transform(polynomial_jet([1.0, 0.0, 0.0]), w)
        self.assertAlmostEqual(rep.log_b[0], -math.log(math.log(1 + math.e)), places=12)
        self.assertTrue(np.all(np.isinf(rep.log_b[1:])))

    def test_geometric_jet_entire(self):
        """a_n = 1 under the log weight gives an entire F"""
        rep = singular_transform(geometric_jet(1.0, 1.0, 128), log_weight())
        self.assertTrue(rep.entire)

    def test_gamma_jet_has_unit_radius(self):
        """a_n = gamma(n+1) gives b_n = 1: radius 1, flagged as not entire"""
        w = log_weight()
        n = np.arange(64, dtype=float)
        jet = Jet(log_mag=list(w.log_gamma_int(n + 1)), phase=[0.0] * 64)
        rep = singular_transform(jet, w)
        self.assertFalse(rep.entire)
        self.assertAlmostEqual(rep.radius, 1.0, places=8)

    def test_roundtrip(self):
        """inverse_singular undoes singular_transform in log space"""
        w = log_weight()
        rng = np.random.default_rng(3)
        jet = Jet.from_values(rng.normal(size=20) + 1j * rng.normal(size=20))
        back = inverse_singular(singular_transform(jet, w))
        np.testing.assert_allclose(back.log_mag, jet.log_mag, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(back.phase, jet.phase)

    def test_inverse_of_reciprocal_gamma(self):
        """b_n = 1/gamma(n+1) comes back as a_n = 1"""
        w = log_weight()
        n = np.arange(16, dtype=float)
        rep = EntireRep(w, -w.log_gamma_int(n + 1), np.zeros(16), n)
        np.testing.assert_allclose(inverse_singular(rep).log_mag, 0.0, atol=1e-12)

    def test_single_coefficient(self):
        """A one-term rep b_0 = c maps to a_0 = c gamma(1)"""
        w = log_weight()
        rep = EntireRep(w, [math.log(3.0)], [0.0], [0.0])
        jet = inverse_singular(rep)
        self.assertAlmostEqual(jet.values()[0].real, 3.0 * math.log(1 + math.e), places=12)

    def test_rotation(self):
        """S_{L2} of e^{in theta} gamma_2/gamma_1 is E_{L1}(z e^{i theta})"""
        w1, w2 = log_weight(), log_squared_weight()
        theta = 0.7
        jet, _ = log_gamma_ratio_jet(w2, w1, n_terms=64, theta=theta)
        rep = singular_transform(jet, w2)
        z = 1.5 * cmath.exp(0.3j)
        expected = eval_E(w1, z * cmath.exp(1j * theta), 1e-14).value
        self.assertLess(abs(rep.value(z) / expected - 1), 1e-10)


class TestBorelSummation(unittest.TestCase):
    """(gamma)-summation with gamma(n+1) = n!"""

    @classmethod
    def setUpClass(cls):
        cls.ke = kernel_evaluator(RawGammaWeight("borel"))

    def test_grandi(self):
        """1 - 1 + 1 - ... sums to 1/2"""
        result = moment_sum(geometric_jet(1.0, -1.0), self.ke)
        self.assertLess(abs(result.value - 0.5), 1e-8)
        self.assertIn("truncation_t", result.trace)

    def test_convergent_series(self):
        """sum 1/n! is summed to e"""
        n = np.arange(30)
        jet = polynomial_jet([1.0 / math.factorial(int(k)) for k in n])
        result = moment_sum(jet, self.ke)
        self.assertLess(abs(result.value - math.e), 1e-6)

    def test_zero_series(self):
        result = moment_sum(polynomial_jet([0.0, 0.0, 0.0]), self.ke)
        self.assertEqual(result.value, 0)

    def test_linearity(self):
        """moment_sum is additive and homogeneous"""
        rng = np.random.default_rng(11)
        a = rng.uniform(0.5, 1.5, size=6)
        b = rng.uniform(0.5, 1.5, size=6)
        sa = moment_sum(polynomial_jet(a), self.ke).value
        sb = moment_sum(polynomial_jet(b), self.ke).value
        sab = moment_sum(polynomial_jet(2.0 * a + 3.0 * b), self.ke).value
        self.assertLess(abs(sab - (2.0 * sa + 3.0 * sb)) / abs(sab), 1e-10)

    def test_mismatched_kernel(self):
        """A rep and a kernel from different weights are refused"""
        rep = singular_transform(geometric_jet(), log_weight())
        with self.assertRaises(PreconditionError):
            regular_transform(rep, self.ke, 0.5)


class TestLogWeightTransforms(unittest.TestCase):
    """R_L S_L under L = log(rho + e)"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()
        cls.ke = kernel_evaluator(cls.w).ensure_cache()
        cls.geometric = singular_transform(geometric_jet(1.0, 1.0), cls.w)

    def test_star_summation(self):
        """R_L S_L (sum z^n) = 1/(1 - z) off the cut [1, inf)"""
        for z in [-1.0, -5.0, 2j]:
            result = regular_transform(self.geometric, self.ke, z)
            self.assertLess(abs(result.value - 1 / (1 - z)), 1e-3, f"z={z}")

    def test_cut_diverges(self):
        """On the cut the integrand grows"""
        with self.assertRaises(DivergentIntegrandError):
            regular_transform(self.geometric, self.ke, 1.2)

    def test_analytic_roundtrip(self):
        """R_L S_L f = f for f(x) = 1/(2 - x) on [-0.9, 0.9]"""
        rep = singular_transform(pole_jet(2.0), self.w)
        for x in np.linspace(-0.9, 0.9, 11):
            result = regular_transform(rep, self.ke, float(x))
            self.assertLess(abs(result.value - 1 / (2 - x)), 1e-4, f"x={x}")

    def test_value_at_origin(self):
        """x = 0 returns a_0"""
        rep = singular_transform(pole_jet(2.0), self.w)
        self.assertLess(abs(regular_transform(rep, self.ke, 0.0).value - 0.5), 1e-10)

    def test_regularity_probe(self):
        """int E(x t) K(t) dt = 1/(1 - x) for x in {0, 0.3, 0.7}"""
        self.assertLess(regularity_probe(self.ke)["max_error"], 1e-3)

    def test_stability_probe(self):
        """The running integral of E K keeps growing"""
        self.assertTrue(stability_probe(self.ke)["growing"])


class TestContourTransforms(unittest.TestCase):
    """R_L^+- along the boundary contours"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()
        cls.ke = kernel_evaluator(cls.w).ensure_cache()
        r_max = psi_radius(cls.w, 1e5)
        cls.plus = build_contour(cls.w, "psi_plus", r_max)
        cls.minus = build_contour(cls.w, "psi_minus", r_max)
        cls.coefficients = [1.0, -0.5, 0.25, 0.3, -0.2, 0.1, 0.05]
        cls.poly = singular_transform(polynomial_jet(cls.coefficients), cls.w)

    def test_polynomial_consistency(self):
        """R^+ P = R^- P = R P = P for a degree 6 polynomial"""
        t = 0.5
        exact = sum(c * t ** n for n, c in enumerate(self.coefficients))
        plus = regular_transform_pm(self.poly, self.ke, self.plus, t).value
        minus = regular_transform_pm(self.poly, self.ke, self.minus, t).value
        real_axis = regular_transform(self.poly, self.ke, t).value
        self.assertLess(abs(plus - exact), 1e-6)
        self.assertLess(abs(minus - exact), 1e-6)
        self.assertLess(abs(real_axis - exact), 1e-6)

    def test_analytic_function(self):
        """R^+ S_L of 1/(2 - x) agrees with the real-axis transform at t = 0.5"""
        rep = singular_transform(pole_jet(2.0), self.w)
        plus = regular_transform_pm(rep, self.ke, self.plus, 0.5).value
        real_axis = regular_transform(rep, self.ke, 0.5).value
        self.assertLess(abs(plus - real_axis), 1e-3)

    def test_origin(self):
        """t = 0 gives a_0"""
        result = regular_transform_pm(self.poly, self.ke, self.plus, 0.0)
        self.assertLess(abs(result.value - 1.0), 1e-8)

    def test_wrong_role(self):
        line = Contour(role="gamma_R", nodes=np.array([1j]), weights=np.array([1.0 + 0j]), segment_ids=np.array([0]))
        with self.assertRaises(PreconditionError):
            regular_transform_pm(self.poly, self.ke, line, 0.5)


if __name__ == '__main__':
    unittest.main()
