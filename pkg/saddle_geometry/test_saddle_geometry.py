import unittest
import math
import os
import sys
import tempfile

import numpy as np
import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exceptions import BelowThresholdError, ConfigError, DomainError
from models import MultiIndex
from saddle_geometry import (
    LegendreProfile,
    build_contour,
    eval_H,
    h_profile,
    legendre_lambda,
    psi_radius,
    saddle_image,
    solve_saddle,
)
from saddle_geometry.legendre import (
    epsilon_transfer_ratio,
    index_spread_constant,
    normalized_scaling_ratio,
    scaled_point_ratio,
    subadditivity_violation,
)
from weights import make_denjoy_weight
from weights.raw import RawGammaWeight


def log_weight():
    return make_denjoy_weight(MultiIndex(alphas=[(1, 1.0)]))


class TestLegendre(unittest.TestCase):
    """Lambda_L and its growth properties"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()

    def test_constant_weight(self):
        """L = c gives Lambda(r) = r/(c e)"""
        w = RawGammaWeight("constant", params={"c": 3.0})
        for r in [10.0, 1e3, 1e6]:
            value, x = legendre_lambda(w, r)
            self.assertAlmostEqual(value / (r / (3.0 * math.e)), 1.0, places=6)
            self.assertAlmostEqual(x / (r / (3.0 * math.e)), 1.0, places=6)

    def test_dense_grid_oracle(self):
        """The maximizer search agrees with a dense grid search"""
        r = 1e5
        y = np.linspace(-5, math.log(r), 200001)
        x = np.exp(y)
        dense = np.max(x * (math.log(r) - y - self.w.log_L_real(x)))
        self.assertAlmostEqual(legendre_lambda(self.w, r)[0] / dense, 1.0, places=6)

    def test_below_one(self):
        """r < 1 is outside the domain"""
        with self.assertRaises(DomainError):
            legendre_lambda(self.w, 0.5)

    def test_scaled_point(self):
        """Lambda(e r L(r)) / r stays within 10% of 1"""
        for r in [1e3, 1e4, 1e5, 1e6]:
            ratio = scaled_point_ratio(self.w, r)
            self.assertTrue(0.9 <= ratio <= 1.1, f"r={r}: {ratio}")

    def test_subadditivity(self):
        """Lambda(r t) <= t Lambda(r) for r > rho0 and t > 1"""
        worst = subadditivity_violation(self.w, np.logspace(3.5, 8, 20), [1.5, 2.0, 5.0, 10.0, 100.0])
        self.assertLessEqual(worst, 1.0 + 1e-9)

    def test_normalized_scaling(self):
        """Lambda(lam r) / (lam Lambda(r)) lies in [0.8, 1.25] at r = 1e6"""
        for lam in [2.0, 10.0]:
            ratio = normalized_scaling_ratio(self.w, 1e6, lam)
            self.assertTrue(0.8 <= ratio <= 1.25, f"lam={lam}: {ratio}")

    def test_index_spread(self):
        """n (log L(k) - log L(n)) <= C (k + n) with C <= 4"""
        self.assertLessEqual(index_spread_constant(self.w), 4.0)

    def test_epsilon_transfer(self):
        """eps(Lambda(rho)) / eps(rho) lies in [0.7, 1.4]"""
        for rho in [1e6, 1e8]:
            ratio = epsilon_transfer_ratio(self.w, rho)
            self.assertTrue(0.7 <= ratio <= 1.4, f"rho={rho}: {ratio}")

    def test_profile_monotone_and_integer_sup(self):
        """The tabulated profile is monotone and matches direct evaluation"""
        profile = LegendreProfile(self.w, r_min=1e3, r_max=1e8, per_decade=4)
        self.assertTrue(profile.is_monotone())
        r = 1e6
        value, x = legendre_lambda(self.w, r)
        self.assertAlmostEqual(float(profile(np.array([r]))[0]) / value, 1.0, places=4)
        self.assertAlmostEqual(profile.log_mu(r), value, places=9)

    def test_integer_sup_comparable_to_lambda(self):
        """sup_n log r^n/(n! gamma(n+1)) lies just below Lambda(e r) and within e of Lambda(r)"""
        profile = LegendreProfile(self.w, r_min=1e3, r_max=1e6, per_decade=2)
        for r in [1e4, 1e6]:
            integer_sup = profile.log_mu_integer(r)
            upper = legendre_lambda(self.w, math.e * r)[0]
            self.assertLessEqual(integer_sup, upper + 1e-6, f"r={r}")
            self.assertGreaterEqual(integer_sup, 0.99 * upper, f"r={r}")
            ratio = integer_sup / profile.log_mu(r)
            self.assertTrue(1.0 <= ratio <= math.e, f"r={r}: {ratio}")


class TestSaddle(unittest.TestCase):
    """Saddle-point equation log L(s) + eps(s) = log z"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()

    def test_forward_roundtrip_real(self):
        """z built from rho* = 1e6 gives back rho* and theta = 0"""
        rho_star = 1e6
        z = complex(saddle_image(self.w, complex(rho_star)))
        sp = solve_saddle(self.w, z.real)
        self.assertAlmostEqual(sp.rho / rho_star, 1.0, places=8)
        self.assertEqual(sp.theta, 0.0)
        self.assertLess(sp.residual, 1e-10)

    def test_random_roundtrip(self):
        """exp(log L(s_z) + eps(s_z)) = z for random z in the sector image"""
        rng = np.random.default_rng(7)
        for _ in range(100):
            s = 10 ** rng.uniform(4, 8) * np.exp(1j * rng.uniform(-1.2, 1.2))
            z = complex(saddle_image(self.w, s))
            sp = solve_saddle(self.w, z)
            back = complex(saddle_image(self.w, sp.s))
            self.assertLess(abs(back / z - 1), 1e-9)

    def test_below_threshold(self):
        """z = 0.5 is too small"""
        with self.assertRaises(BelowThresholdError):
            solve_saddle(self.w, 0.5)


class TestContours(unittest.TestCase):
    """Psi contours, Mellin lines and the closed path gamma_R"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()
        cls.r_max = psi_radius(cls.w, 1e6)
        cls.psi = build_contour(cls.w, "psi_plus", cls.r_max)

    def test_psi_plus_shape(self):
        """Starts at 0, ordered by |z|, arguments positive and decreasing on the curve"""
        nodes = self.psi.nodes
        self.assertEqual(nodes[0], 0)
        self.assertTrue(np.all(np.diff(np.abs(nodes)) > 0))
        curve = nodes[self.psi.segment_ids >= 1]
        args = np.angle(curve)
        self.assertTrue(np.all(args > 0))
        self.assertTrue(np.all(np.diff(args) < 0))

    def test_psi_plus_boundary_equation(self):
        """Curve nodes are images of s with arg s = pi/2"""
        mask = self.psi.segment_ids >= 1
        pre = self.psi.preimages[mask]
        np.testing.assert_allclose(np.angle(pre), np.pi / 2, atol=1e-12)
        z = saddle_image(self.w, pre)
        np.testing.assert_allclose(z, self.psi.nodes[mask], rtol=1e-8)

    def test_psi_minus_is_conjugate(self):
        """psi_minus is the node-by-node conjugate of psi_plus"""
        minus = build_contour(self.w, "psi_minus", self.r_max)
        np.testing.assert_allclose(minus.nodes, np.conj(self.psi.nodes))
        np.testing.assert_allclose(minus.weights, np.conj(self.psi.weights))

    def test_path_length_integral(self):
        """The weights integrate dz exactly: the sum is the endpoint"""
        self.assertAlmostEqual(abs(self.psi.integrate(1.0) / self.psi.nodes[-1] - 1), 0.0, places=8)

    def test_r_max_too_small(self):
        """r_max below r0 is rejected"""
        with self.assertRaises(ConfigError):
            build_contour(self.w, "psi_plus", 1.0)

    def test_gamma_R_closed(self):
        """gamma_R is closed: the integral of dz/(z - z0) is 2 pi i around an inner point"""
        R = 10.0
        contour = build_contour(self.w, "gamma_R", R)
        z0 = R ** 1.5
        self.assertLess(abs(contour.integrate(1.0 / (contour.nodes - z0)) - 2j * np.pi), 1e-6)
        self.assertLess(abs(contour.integrate(contour.nodes ** 2)) / R ** 6, 1e-8)
        self.assertEqual(sorted(set(contour.segment_ids.tolist())), [0, 1, 2, 3])

    def test_mellin_line_borel(self):
        """The Mellin line of Gamma reproduces e^{-t}"""
        w = RawGammaWeight("borel")
        line = build_contour(w, "mellin_line", c=1.0)
        for t in [0.5, 1.0, 3.0]:
            values = np.exp(w._log_gamma(line.nodes) - line.nodes * np.log(t))
            k = line.integrate(values) / (2j * np.pi)
            self.assertAlmostEqual(k.real / math.exp(-t), 1.0, places=6)

    def test_csv_export(self):
        """CSV export carries the documented columns"""
        with tempfile.TemporaryDirectory() as tmp:
            path = self.psi.export_csv(os.path.join(tmp, "psi.csv"))
            frame = pd.read_csv(path)
            self.assertEqual(list(frame.columns), ["re", "im", "weight_re", "weight_im", "segment_id"])
            self.assertEqual(len(frame), len(self.psi.nodes))


class TestHProfile(unittest.TestCase):
    """Boundary growth function H"""

    @classmethod
    def setUpClass(cls):
        cls.w = log_weight()
        cls.profile = h_profile(cls.w)

    def test_small_angle_law(self):
        """log log H(psi) is comparable to (pi/2)/psi for small psi"""
        for psi in [0.01, 0.02]:
            ratio = eval_H(self.w, psi) / ((np.pi / 2) / psi)
            self.assertTrue(0.7 <= ratio <= 1.3, f"psi={psi}: {ratio}")

    def test_reflection(self):
        """H(pi - psi) = H(psi)"""
        for psi in [0.05, 0.2, 1.0]:
            self.assertAlmostEqual(eval_H(self.w, np.pi - psi), eval_H(self.w, psi), places=9)

    def test_decreasing(self):
        """log log H decreases on (0, pi/2]"""
        psi = np.linspace(0.005, np.pi / 2, 300)
        values = np.array([eval_H(self.w, p) for p in psi])
        self.assertTrue(np.all(np.diff(values) < 0))

    def test_extension_end_condition(self):
        """H(pi/2) = H(delta)/e, H is continuous at delta and keeps falling up to pi/2"""
        delta = self.profile.delta
        self.assertAlmostEqual(self.profile.log_H(np.pi / 2), self.profile.log_H(delta) - 1.0, places=9)
        self.assertAlmostEqual(self.profile.loglog_H(delta - 1e-9), self.profile.loglog_H(delta), places=5)
        psi = np.linspace(np.pi / 2 - 0.2, np.pi / 2, 50)
        log_H = np.array([self.profile.log_H(p) for p in psi])
        self.assertTrue(np.all(np.diff(log_H) < 0))

    def test_domain(self):
        """psi outside (0, pi) is rejected"""
        with self.assertRaises(DomainError):
            eval_H(self.w, 0.0)
        with self.assertRaises(DomainError):
            eval_H(self.w, 4.0)

    def test_shift_constant(self):
        """A shift A/r lowers log log H by at least 3/r"""
        for r in [10.0, 100.0]:
            for psi in [0.05, 0.2]:
                A = self.profile.shift_constant(psi, r)
                self.assertIsNotNone(A)
                self.assertLessEqual(eval_H(self.w, psi + A / r), eval_H(self.w, psi) - 3 / r)


if __name__ == '__main__':
    unittest.main()
