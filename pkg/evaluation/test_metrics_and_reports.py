import unittest
import json
import math
import os
import sys
import tempfile
from unittest import mock

import numpy as np
import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from evaluation.cache import cache_kernel, regularity_flags
from evaluation.metrics import fit_constant, is_nonincreasing, pass_rate, ratio_spread, within
from evaluation.run import export_report, read_report_csv, read_report_json, report_payload, run_experiment
from evaluation.suites import Check, SuiteContext, expand_selectors, run_check
from exceptions import DomainError, MissingCacheError, UsageError
from models import CheckRecord, ExperimentConfig, ReportDocument
from tracing.setup import RunTracer, convert_values
from weights.raw import RawGammaWeight


def sample_report():
    return ReportDocument(
        tool_version="0.3.0", config_hash="abc123", seed=7, weight="denjoy:a0=0;1:1",
        records=[
            CheckRecord(name="borel_kernel", anchor="K(t)=e^{-t} and E(z)=e^{z}", measured=3.2e-9,
                        tolerance="relative error < 1e-6", verdict="pass", detail="t=0.1, 1"),
            CheckRecord(name="cut_divergence", anchor="for 0<arg(z-1)<2pi", measured=None,
                        tolerance="divergent integrand", verdict="fail", detail="returned (1+0j), on the cut"),
        ],
        timing={"borel-sanity": 1.5},
    )


class TestMetricsFunctions(unittest.TestCase):
    """Constant fitting and ratio helpers"""

    def test_fit_constant_flat(self):
        """A bounded excess validates"""
        x = np.arange(40.0)
        excess = np.sin(x) * 0.01
        result = fit_constant(x, excess)
        self.assertTrue(result["passed"])
        self.assertLessEqual(result["score"], math.log(1.1))

    def test_fit_constant_growing(self):
        """An excess growing with x fails validation"""
        x = np.arange(40.0)
        result = fit_constant(x, 0.5 * x)
        self.assertFalse(result["passed"])
        self.assertAlmostEqual(result["fit"], 9.5)
        self.assertAlmostEqual(result["validation"], 19.5)

    def test_fit_constant_order(self):
        """Samples are sorted by x before splitting"""
        x = np.array([3.0, 0.0, 2.0, 1.0])
        excess = np.array([5.0, 0.0, 4.0, 1.0])
        result = fit_constant(x, excess)
        self.assertEqual(result["fit"], 1.0)
        self.assertEqual(result["validation"], 5.0)

    def test_fit_constant_too_short(self):
        result = fit_constant([1.0], [0.0])
        self.assertFalse(result["passed"])
        self.assertTrue(math.isnan(result["score"]))

    def test_fit_constant_all_zero(self):
        """-inf excess everywhere (identically zero function) passes"""
        result = fit_constant(np.arange(6.0), np.full(6, -np.inf))
        self.assertTrue(result["passed"])

    def test_ratio_spread(self):
        self.assertAlmostEqual(ratio_spread([0.5, 1.0, 1.5]), 3.0)
        self.assertEqual(ratio_spread([1.0, -1.0]), float("inf"))
        self.assertEqual(ratio_spread([]), float("inf"))

    def test_nonincreasing_and_within(self):
        self.assertTrue(is_nonincreasing([0.3, 0.2, 0.2, 0.1]))
        self.assertFalse(is_nonincreasing([0.3, 0.4]))
        self.assertTrue(within(1.0, 0.9, 1.1))
        self.assertFalse(within(float("nan"), 0.0, 1.0))

    def test_pass_rate(self):
        """Percentage of passing checks, 0 without checks"""
        self.assertEqual(pass_rate(3, 4), 75.0)
        self.assertEqual(pass_rate(0, 0), 0)


class TestSerialization(unittest.TestCase):
    """JSON-safe conversion and trace files"""

    def test_convert_values(self):
        """numpy, complex and non-finite values become JSON data"""
        value = {"a": np.float64(1.5), "b": np.arange(3), "c": 1 + 2j, "d": float("inf"), "e": {2, 1},
                 "f": np.bool_(True)}
        converted = convert_values(value)
        self.assertEqual(converted, {"a": 1.5, "b": [0, 1, 2], "c": {"re": 1.0, "im": 2.0}, "d": "inf",
                                     "e": [1, 2], "f": True})
        json.dumps(converted)

    def test_tracer_writes_json_lines(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "trace.jsonl")
            tracer = RunTracer(path)
            tracer.log_event("check", {"measured": np.float64(2.0)})
            tracer.log_event("suite_end", {"suite": "legendre"})
            tracer.write_logs()
            with open(path, encoding="utf-8") as f:
                lines = [json.loads(line) for line in f]
            self.assertEqual([e["event_type"] for e in lines], ["check", "suite_end"])
            self.assertEqual(tracer.log_entries, [])


class TestReports(unittest.TestCase):
    """Report assembly and export"""

    def test_selectors(self):
        """'all' expands in a fixed order and unknown names are usage errors"""
        expanded = expand_selectors(["all"])
        self.assertEqual(expanded[0], "borel-sanity")
        self.assertEqual(expanded[-1], "regularity")
        self.assertEqual(expand_selectors(["legendre", "moments"]), ["moments", "legendre"])
        with self.assertRaises(UsageError):
            expand_selectors(["nope"])

    def test_empty_selector(self):
        """No selectors give an empty report that counts as passing"""
        report = run_experiment(ExperimentConfig(selectors=[]))
        self.assertEqual(report.records, [])
        self.assertTrue(report.all_passed())

    def test_exception_becomes_verdict(self):
        """A check that raises is recorded as a failure with the error text"""
        def broken(ctx):
            raise DomainError("outside the sector")

        record = run_check(Check("broken", "plumbing", "none", broken), SuiteContext(ExperimentConfig()))
        self.assertEqual(record.verdict, "fail")
        self.assertIn("outside the sector", record.detail)

    def test_legendre_suite_deterministic(self):
        """The same config gives the same JSON payload"""
        config = ExperimentConfig(selectors=["legendre"], seed=3)
        first = run_experiment(config)
        second = run_experiment(config)
        self.assertTrue(first.all_passed())
        self.assertTrue(all(r.anchor for r in first.records))
        self.assertEqual(json.dumps(report_payload(first), sort_keys=True),
                         json.dumps(report_payload(second), sort_keys=True))

    def test_json_export_excludes_timing(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = export_report(sample_report(), "json", os.path.join(tmp, "report.json"))
            with open(path, encoding="utf-8") as f:
                payload = json.load(f)
            self.assertNotIn("timing", payload)
            back = read_report_json(path)
            self.assertEqual(back.records, sample_report().records)

    def test_csv_roundtrip(self):
        """json -> csv -> report keeps every verdict field"""
        report = sample_report()
        with tempfile.TemporaryDirectory() as tmp:
            path = export_report(report, "csv", os.path.join(tmp, "report.csv"))
            back = read_report_csv(path)
        self.assertEqual(back.config_hash, report.config_hash)
        self.assertEqual(back.seed, report.seed)
        for a, b in zip(report.records, back.records):
            self.assertEqual((a.name, a.anchor, a.verdict, a.tolerance, a.detail),
                             (b.name, b.anchor, b.verdict, b.tolerance, b.detail))
            self.assertEqual(a.measured, b.measured)

    def test_text_table_lists_anchors(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = export_report(sample_report(), "text-table", os.path.join(tmp, "report.txt"))
            with open(path, encoding="utf-8") as f:
                text = f.read()
        self.assertIn("K(t)=e^{-t} and E(z)=e^{z}", text)
        self.assertIn("for 0<arg(z-1)<2pi", text)
        self.assertIn("1/2 passed", text)

    def test_unknown_format(self):
        with self.assertRaises(UsageError):
            export_report(sample_report(), "xml")


class TestKernelCache(unittest.TestCase):
    """Kernel cache files"""

    def test_borel_cache(self):
        """The Borel cache holds e^{-t} on [0.01, 50] and is not rewritten on a repeat call"""
        with tempfile.TemporaryDirectory() as tmp:
            with mock.patch.dict(os.environ, {"RESUM_CACHE_DIR": tmp}):
                path = cache_kernel("raw:borel", t_range=(0.01, 50.0))
                self.assertTrue(path.name.startswith("kernel_"))
                self.assertEqual(str(path.parent), tmp)
                frame = pd.read_csv(path, comment="#")
                t = 10.0 ** frame["log10_t"].to_numpy()
                inside = (t >= 0.01) & (t <= 50.0)
                self.assertGreater(inside.sum(), 100)
                np.testing.assert_allclose(np.exp(frame["log_absK"].to_numpy()[inside] + t[inside]), 1.0, atol=1e-6)
                with open(path, encoding="utf-8") as f:
                    self.assertTrue(any(line.startswith("# flags=") for line in f))
                stamp = os.stat(path).st_mtime_ns
                again = cache_kernel("raw:borel", t_range=(0.01, 50.0))
                self.assertEqual(again, path)
                self.assertEqual(os.stat(path).st_mtime_ns, stamp)

    def test_offline_missing(self):
        with tempfile.TemporaryDirectory() as tmp:
            with mock.patch.dict(os.environ, {"RESUM_CACHE_DIR": tmp}):
                with self.assertRaises(MissingCacheError):
                    cache_kernel("raw:borel", offline=True)

    def test_linear_weight_flagged(self):
        """L = rho + 1 is cached with a derivative_vanishes flag rather than refused"""
        self.assertIn("derivative_vanishes", regularity_flags(RawGammaWeight("power", params={"a": 1.0})))


def run_tests():
    """Run all tests and print results"""
    test_suite = unittest.TestSuite()

    test_classes = [
        TestMetricsFunctions,
        TestSerialization,
        TestReports,
        TestKernelCache,
    ]

    for test_class in test_classes:
        tests = unittest.TestLoader().loadTestsFromTestCase(test_class)
        test_suite.addTests(tests)

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(test_suite)

    print(f"\n{'='*60}")
    print(f"TEST SUMMARY")
    print(f"{'='*60}")
    print(f"Tests run: {result.testsRun}")
    print(f"Failures: {len(result.failures)}")
    print(f"Errors: {len(result.errors)}")
    print(f"Success rate: {((result.testsRun - len(result.failures) - len(result.errors)) / result.testsRun * 100):.1f}%")

    if result.failures:
        print(f"\nFAILURES:")
        for test, traceback in result.failures:
            print(f"- {test}: {traceback}")

    if result.errors:
        print(f"\nERRORS:")
        for test, traceback in result.errors:
            print(f"- {test}: {traceback}")

    return result.wasSuccessful()


if __name__ == "__main__":
    success = run_tests()
    exit(0 if success else 1)
