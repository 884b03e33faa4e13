"""
Tests for stage latency statistics.
"""
import unittest

from src.utils.benchmarks import StageBenchmark


class TestStageBenchmark(unittest.TestCase):
    """Test latency bookkeeping."""

    def test_summary_statistics(self):
        stage = StageBenchmark("Test", total=5)
        for seconds in (0.1, 0.2, 0.3, 0.4, 1.0):
            stage.record(seconds)
        stats = stage.summary()
        self.assertEqual(stats['count'], 5)
        self.assertAlmostEqual(stats['mean'], 0.4)
        self.assertEqual(stats['median'], 0.3)
        self.assertAlmostEqual(stats['p95'], 0.88)
        self.assertEqual(stats['max'], 1.0)

    def test_empty_stage(self):
        stats = StageBenchmark("Empty").log_summary()
        self.assertEqual(stats['count'], 0)
        self.assertNotIn('mean', stats)

    def test_p95_interpolates_between_samples(self):
        stage = StageBenchmark("Uniform")
        for i in range(1, 101):
            stage.record(float(i))
        self.assertAlmostEqual(stage.summary()['p95'], 95.05)
        self.assertEqual(stage.summary()['median'], 50.5)


if __name__ == '__main__':
    unittest.main()
