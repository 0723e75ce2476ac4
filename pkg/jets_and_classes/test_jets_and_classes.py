import unittest
import math
import os
import sys

import numpy as np
from scipy.special import gammaln

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exceptions import ConfigError, ConstructionIncompleteError, PreconditionError
from jets_and_classes import (
    ChebyshevExpansion,
    StarDomain,
    bernstein_ellipse_check,
    carleson_ehrenpreis_ratio,
    chebyshev_expand,
    coeff_decay_report,
    disk_domain,
    geometric_bound_check,
    growth_diagnostic,
    harmonic_mean_bound,
    lacunary_counterexample_jet,
    membership_F0,
    slit_plane_domain,
    to_jet,
)
from models import MultiIndex
from transforms import Jet, geometric_jet, pole_jet, polynomial_jet, singular_transform
from transforms.jet import log_gamma_ratio_jet
from weights import make_denjoy_weight


def log_weight():
    return make_denjoy_weight(MultiIndex(alphas=[(1, 1.0)]))


def log_squared_weight():
    return make_denjoy_weight(MultiIndex(alphas=[(1, 2.0)]))


def cube_root_weight():
    """L = exp(log^{1/3}(rho + 1)), for which rho L'(rho) -> inf."""
    return make_denjoy_weight(MultiIndex(alpha0=1.0 / 3.0))


class TestChebyshev(unittest.TestCase):
    """Chebyshev expansion and coefficient decay"""

    def test_identity(self):
        """f(x) = x has c_1 = 1 and nothing else"""
        ce = chebyshev_expand(lambda x: x, n_max=8)
        expected = np.zeros(9)
        expected[1] = 1.0
        np.testing.assert_allclose(ce.coefficients, expected, atol=1e-14)

    def test_chebyshev_polynomial(self):
        """T_3 expands to c_3 = 1"""
        ce = chebyshev_expand(lambda x: 4 * x ** 3 - 3 * x, n_max=8)
        self.assertAlmostEqual(ce.coefficients[3], 1.0, places=13)
        self.assertLess(max(abs(c) for i, c in enumerate(ce.coefficients) if i != 3), 1e-13)

    def test_polynomial_recomposition(self):
        """Degree 16 polynomials are reproduced at 33 random points on a shifted interval"""
        rng = np.random.default_rng(5)
        p = rng.normal(size=17)
        ce = chebyshev_expand(lambda x: np.polyval(p, x), interval=(-1.0, 2.0), n_max=16)
        x = rng.uniform(-1.0, 2.0, size=33)
        exact = np.polyval(p, x)
        self.assertLess(np.max(np.abs(ce(x) - exact)) / np.max(np.abs(exact)), 1e-9)
        self.assertLess(ce.recomposition_error, 1e-10)

    def test_pole_geometric_decay(self):
        """1/(2 - x) has |c_n| <= 2 (2 + sqrt 3)^{-n}"""
        ce = chebyshev_expand(lambda x: 1.0 / (2.0 - x), n_max=64)
        check = geometric_bound_check(ce, 2.0, 2.0 + math.sqrt(3.0), n_max=30)
        self.assertTrue(check["passed"])
        self.assertGreater(len(check["checked"]), 20)

    def test_taylor_jet(self):
        """The Chebyshev jet of 1/(2 - x) is 2^{-(n+1)} up to the roundoff the change of basis amplifies"""
        jet = to_jet(chebyshev_expand(lambda x: 1.0 / (2.0 - x), n_max=64))
        values = jet.values().real
        exact = 2.0 ** -(np.arange(len(values)) + 1.0)
        np.testing.assert_allclose(values[:7], exact[:7], rtol=1e-6)
        np.testing.assert_allclose(values[:11], exact[:11], rtol=5e-5)

    def test_taylor_jet_drops_roundoff_terms(self):
        """Taylor terms past the resolved degree are cut instead of carrying amplified noise"""
        ce = chebyshev_expand(lambda x: 1.0 / (2.0 - x), n_max=64)
        jet = to_jet(ce)
        self.assertGreaterEqual(jet.n_terms, 11)
        self.assertLess(jet.n_terms, 30)
        self.assertLess(ce.noise_floor(), 1e-15)

    def test_taylor_jet_shifted_interval(self):
        """On [0, 2] the jet of a quadratic is recovered through the affine change of variable"""
        jet = to_jet(chebyshev_expand(lambda x: 1.0 + 2.0 * x + 3.0 * x * x, interval=(0.0, 2.0), n_max=8))
        np.testing.assert_allclose(jet.values()[:3].real, [1.0, 2.0, 3.0], atol=1e-10)

    def test_decay_report_pole(self):
        """The Lambda majorant holds for 1/(2 - x) under the log weight at delta = 1"""
        ce = chebyshev_expand(lambda x: 1.0 / (2.0 - x), n_max=64, source="1/(2-x)")
        report = coeff_decay_report(ce, log_weight())
        self.assertFalse(report["finite_support"])
        self.assertTrue(report["deltas"][1.0]["passed"])
        self.assertAlmostEqual(report["geometric_rate"], math.log(2.0 + math.sqrt(3.0)), delta=0.05)

    def test_decay_report_finite_support(self):
        """T_5 passes trivially"""
        ce = chebyshev_expand(lambda x: np.cos(5 * np.arccos(np.clip(x, -1, 1))), n_max=16)
        report = coeff_decay_report(ce, log_weight())
        self.assertTrue(report["finite_support"])
        self.assertTrue(all(d["passed"] for d in report["deltas"].values()))

    def test_decay_report_stretched_exponential(self):
        """c_n = exp(-sqrt n) breaks the log^2 majorant at delta = 1/4"""
        ce = ChebyshevExpansion(coefficients=[math.exp(-math.sqrt(n)) for n in range(200)], source="synthetic")
        report = coeff_decay_report(ce, log_squared_weight())
        self.assertFalse(report["deltas"][0.25]["passed"])

    def test_too_few_coefficients(self):
        from exceptions import InsufficientDataError
        with self.assertRaises(InsufficientDataError):
            coeff_decay_report(ChebyshevExpansion(coefficients=[1.0, 0.5, 0.25]), log_weight())

    def test_bad_degree(self):
        with self.assertRaises(ConfigError):
            chebyshev_expand(lambda x: x, n_max=0)

    def test_bernstein_ellipse(self):
        """|T_n| <= rho^n on the Bernstein ellipse"""
        for n in (3, 6, 12):
            for ratio in bernstein_ellipse_check(n).values():
                self.assertLessEqual(ratio, 1.0 + 1e-12)


class TestStarDomain(unittest.TestCase):
    """Minkowski functionals"""

    def test_disk(self):
        """On the unit disk H(w) = |w|"""
        disk = disk_domain(1.0)
        for w in [0.3 + 0.4j, -2.0, 5j]:
            self.assertAlmostEqual(disk.minkowski(w), abs(w), places=12)
        self.assertEqual(disk.minkowski(0), 0.0)

    def test_square(self):
        square = StarDomain(vertices=[(1, 1), (-1, 1), (-1, -1), (1, -1)])
        self.assertAlmostEqual(square.minkowski(0.5), 0.5, places=12)
        self.assertAlmostEqual(square.minkowski(0.5 + 0.5j), 0.5, places=12)
        self.assertAlmostEqual(square.minkowski(-3j), 3.0, places=12)
        self.assertLess(square.homogeneity_defect(), 1e-12)

    def test_slit_plane(self):
        """The star of 1/(1 - z) excludes the cut"""
        slit = slit_plane_domain(cut=1.0)
        self.assertTrue(slit.contains(-5.0))
        self.assertTrue(slit.contains(2.0 + 0.5j))
        self.assertFalse(slit.contains(2.0))
        self.assertLess(slit.homogeneity_defect(), 1e-9)

    def test_shape_required(self):
        with self.assertRaises(ValueError):
            StarDomain()


def _jet(log_mag):
    return Jet(log_mag=list(log_mag), phase=[0.0] * len(log_mag))


class TestMembershipF0(unittest.TestCase):
    """|a_n|^{1/n} = o(L(n)) under L = log(rho + e)"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()
        cls.n = np.arange(64, dtype=float)

    def test_ground_truth(self):
        n, w = self.n, self.w
        n_log_n = np.where(n > 0, n * np.log(np.maximum(n, 1.0)), 0.0)
        cases = {
            "2^n": (_jet(n * math.log(2.0)), "member"),
            "1/n!": (_jet(-gammaln(n + 1)), "member"),
            "n^n": (_jet(n_log_n), "non_member"),
            "gamma(n+1)": (_jet(w.log_gamma_int(n + 1)), "non_member"),
            "(2L(n))^n": (_jet(n * (math.log(2.0) + w.log_L_real(n))), "non_member"),
        }
        for name, (jet, expected) in cases.items():
            self.assertEqual(membership_F0(jet, w).verdict, expected, name)

    def test_lacunary_jet(self):
        """The lacunary counterexample jet is a Beurling-class jet"""
        jet, _ = lacunary_counterexample_jet(cube_root_weight(), cube_root_weight(), 3)
        self.assertEqual(membership_F0(jet, self.w).verdict, "member")

    def test_randomized(self):
        """Seeded variants of the four growth regimes"""
        rng = np.random.default_rng(2024)
        n, w = self.n, self.w
        c = rng.uniform(0.5, 3.0)
        phases = rng.uniform(-np.pi, np.pi, size=len(n))
        member_jets = [
            Jet(log_mag=list(n * math.log(c)), phase=list(phases)),
            _jet(n * math.log(rng.uniform(0.5, 3.0)) - gammaln(n + 1)),
        ]
        kappa = rng.uniform(0.5, 2.0)
        non_member_jets = [
            _jet(np.where(n > 0, n * np.log(kappa * np.maximum(n, 1.0)), 0.0)),
            _jet(n * (math.log(rng.uniform(0.5, 2.0)) + w.log_L_real(n))),
        ]
        for jet in member_jets:
            self.assertEqual(membership_F0(jet, w).verdict, "member")
        for jet in non_member_jets:
            self.assertEqual(membership_F0(jet, w).verdict, "non_member")

    def test_short_jet(self):
        with self.assertRaises(PreconditionError):
            membership_F0(_jet(np.zeros(10)), self.w)


class TestGrowthDiagnostic(unittest.TestCase):
    """Sampled growth classes"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()
        cls.E = singular_transform(geometric_jet(1.0, 1.0, 128), cls.w)
        cls.half_E = singular_transform(pole_jet(2.0, n_terms=64), cls.w)

    def test_wall_of_E(self):
        """E itself crosses the majorant E(u / 1.25)"""
        diag = growth_diagnostic(self.E, "A_interval", {"c_plus": 1.25, "c_minus": 1.25, "Y": 0.5, "u_max": 8.0})
        self.assertGreater(diag.score, 0.0)
        self.assertEqual(diag.verdict, "non_member")
        self.assertGreaterEqual(len(diag.samples), 50)

    def test_rotated_periodic_source(self):
        """S_{L2} of the rotated ratio jet stays under the log^2 majorant on |v| <= 2"""
        w1, w2 = self.w, log_squared_weight()
        jet, _ = log_gamma_ratio_jet(w2, w1, n_terms=128, theta=math.pi / 2)
        rep = singular_transform(jet, w2)
        diag = growth_diagnostic(rep, "A_interval", {"Y": 2.0, "u_max": 3.0})
        self.assertLessEqual(diag.score, 0.0)
        self.assertEqual(diag.verdict, "member")
        self.assertIn("c_plus", diag.fitted)

    def test_polynomial_bound(self):
        """|S_L T_6| <= e^{C Lambda(6)} E(|u|) Etilde(|u|/2) with C <= 10"""
        coefficients = np.polynomial.chebyshev.cheb2poly([0, 0, 0, 0, 0, 0, 1])
        rep = singular_transform(polynomial_jet(coefficients), self.w)
        diag = growth_diagnostic(rep, "poly", {"c_plus": 1.0, "c_minus": 1.0, "Y": 1.0, "delta": 0.5})
        self.assertLessEqual(diag.fitted["C"], 10.0)
        self.assertEqual(diag.verdict, "member")

    def test_monotone_in_weight(self):
        """A larger weight gives a smaller majorant, so the raw excess can only grow"""
        region = {"c_plus": 1.0, "c_minus": 1.0, "Y": 0.5, "u_max": 4.0}
        small = growth_diagnostic(self.half_E, "A_interval", region)
        large = growth_diagnostic(self.half_E, "A_interval", region, majorant_weight=log_squared_weight())
        self.assertLessEqual(small.raw_score, large.raw_score + 1e-9)

    def test_star_domain_member(self):
        """E(z/2)/2 is bounded by E(H(w) + delta |w|) on the disk of radius 2"""
        diag = growth_diagnostic(self.half_E, "A_omega_star", {"domain": disk_domain(2.0), "u_max": 8.0})
        self.assertEqual(diag.verdict, "member")

    def test_star_domain_non_member(self):
        """E itself outgrows E(|w|/2 + delta |w|)"""
        diag = growth_diagnostic(self.E, "A_omega_star", {"domain": disk_domain(2.0), "u_max": 8.0})
        self.assertEqual(diag.verdict, "non_member")
        self.assertIn("delta_worst", diag.fitted)

    def test_half_plane(self):
        diag = growth_diagnostic(self.half_E, "A_plus", {"u_max": 4.0})
        self.assertEqual(diag.class_tag, "A_plus")
        self.assertGreaterEqual(len(diag.samples), 50)
        self.assertIn("B", diag.fitted)
        self.assertTrue(all(s[1] > 0 for s in diag.samples))

    def test_sample_budget(self):
        with self.assertRaises(PreconditionError):
            growth_diagnostic(self.E, "A_interval", samples=20)

    def test_unknown_class(self):
        with self.assertRaises(ConfigError):
            growth_diagnostic(self.E, "A_sector")


class TestLacunary(unittest.TestCase):
    """Lacunary series escaping A(L2; R)"""

    def test_construction(self):
        """Three indices fit and the last certificate point beats L2^{-1}(r)"""
        w = cube_root_weight()
        jet, certificate = lacunary_counterexample_jet(w, w, 3)
        n = jet.index_array()
        self.assertEqual(len(n), 3)
        self.assertTrue(np.all(np.diff(n) > 0))
        self.assertTrue(np.all(np.isfinite(jet.log_mag)))
        self.assertTrue(np.all(np.asarray(jet.log_mag) < 0))
        self.assertTrue(certificate[-1]["exceeds"])

    def test_empty(self):
        jet, certificate = lacunary_counterexample_jet(cube_root_weight(), cube_root_weight(), 0)
        self.assertEqual(jet.log_mag, [-math.inf])
        self.assertEqual(certificate, [])

    def test_bounded_rho_L_prime(self):
        """Under L = log(rho + e), rho L'(rho) stays bounded"""
        with self.assertRaises(PreconditionError):
            lacunary_counterexample_jet(log_weight(), log_squared_weight(), 3)

    def test_incomplete(self):
        """The double range runs out before five indices"""
        w = cube_root_weight()
        with self.assertRaises(ConstructionIncompleteError) as ctx:
            lacunary_counterexample_jet(w, w, 5)
        jet, certificate = ctx.exception.partial
        self.assertGreaterEqual(len(jet.index_array()), 3)
        self.assertEqual(len(certificate), len(jet.index_array()))


class TestBounds(unittest.TestCase):
    """Harmonic-mean and Carleson-Ehrenpreis comparisons"""

    def test_harmonic_mean(self):
        """Positive coefficients of 1/(2 - x) obey the gamma / gamma_* bound with a = 1"""
        result = harmonic_mean_bound(pole_jet(2.0, n_terms=40), log_weight(), 1.0)
        self.assertTrue(result["passed"])

    def test_harmonic_mean_sign(self):
        with self.assertRaises(PreconditionError):
            harmonic_mean_bound(polynomial_jet([1.0, -1.0, 1.0]), log_weight(), 1.0)

    def test_carleson_ehrenpreis(self):
        """The Poisson integral of Lambda is comparable to Lambda_{L/L~} over three decades"""
        result = carleson_ehrenpreis_ratio(log_squared_weight())
        self.assertLessEqual(result["spread"], 3.0)
        self.assertTrue(all(r > 0 for r in result["ratios"]))


if __name__ == '__main__':
    unittest.main()
