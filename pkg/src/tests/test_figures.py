import math
import os
import unittest

from algorithms.figures import SWEEP_K, SWEEP_M, SWEEP_SNR_DB, figure_bundle, slope_summary

SLOW = os.environ.get("OBFLAB_SLOW") == "1"
WORKERS = int(os.environ.get("OBFLAB_THREADS", "1"))


class TestSlopeSummary(unittest.TestCase):

    def test_straight_line(self):
        summary = slope_summary([0, 1, 2, 3], [1, 3, 5, 7])
        self.assertAlmostEqual(summary["coefficient"], 2.0, places=12)
        self.assertAlmostEqual(summary["r_squared"], 1.0, places=12)

    def test_single_point(self):
        self.assertEqual(slope_summary([1.0], [2.0]), {"coefficient": None, "r_squared": None})


class TestFigureBundles(unittest.TestCase):

    def test_unknown_figure(self):
        with self.assertRaises(ValueError):
            figure_bundle("fig2", trials=5, seed=1)

    def test_power_sweep(self):
        header, rows, summary = figure_bundle("fig4", trials=5, seed=1)
        self.assertEqual(len(rows), len(SWEEP_M) * len(SWEEP_SNR_DB))
        self.assertTrue(all(len(row) == len(header) for row in rows))
        self.assertIn("slope_per_db_M2_olbf", summary)

    def test_user_sweep_without_analysis(self):
        header, rows, summary = figure_bundle("fig5", trials=3, seed=1, analytic=False)
        self.assertEqual(len(rows), 2 * len(SWEEP_K))
        self.assertTrue(all(len(row) == len(header) for row in rows))
        self.assertEqual(len(summary), 6)

    def test_rate_columns_in_bits(self):
        header, rows, _ = figure_bundle("fig4", trials=5, seed=1)
        for name in ("olbf_mean", "zfs_stderr", "adaptive-obf_mean"):
            nats, bits = header.index(name), header.index(f"{name}_bits")
            for row in rows:
                self.assertAlmostEqual(row[bits], row[nats] / math.log(2), places=12)
        self.assertNotIn("snr_db_bits", header)

    def test_user_sweep_subset(self):
        header, rows, _ = figure_bundle("fig5", trials=3, seed=1, analytic=False, k_values=(4, 6))
        self.assertEqual([row[1] for row in rows], [4, 6, 4, 6])
        self.assertIn("olbf_analytic_bits", header)
        self.assertNotIn("olbf_over_zfdp_bits", header)

    @unittest.skipUnless(SLOW, "set OBFLAB_SLOW=1 for the large-K rate ratios")
    def test_ratios_approach_zfdp(self):
        header, rows, _ = figure_bundle("fig5", trials=100000, seed=5, workers=WORKERS, analytic=False,
                                        k_values=(10, 50))
        obf_ratio, olbf_ratio = header.index("adaptive-obf_over_zfdp"), header.index("olbf_over_zfdp")
        zfdp, zfdp_err = header.index("zfdp_mean"), header.index("zfdp_stderr")
        table = {(row[0], row[1]): row for row in rows}
        for row in rows:
            self.assertLess(row[zfdp_err], 0.002 * row[zfdp])
        for snr_db, obf_floor, olbf_floor in ((10.0, 0.75, 0.65), (0.0, 0.90, 0.80)):
            few, many = table[(snr_db, 10)], table[(snr_db, 50)]
            for column, floor in ((obf_ratio, obf_floor), (olbf_ratio, olbf_floor)):
                self.assertGreater(many[column], few[column] - 0.005)
                self.assertGreater(many[column], floor)

    @unittest.skipUnless(SLOW, "set OBFLAB_SLOW=1 for analytic overlays")
    def test_overlay(self):
        header, rows, summary = figure_bundle("fig1", trials=2000, seed=1, bins=30)
        self.assertEqual(header, ("rank", "y", "empirical_pdf", "analytic_pdf"))
        self.assertEqual(sorted({row[0] for row in rows}), [1, 2, 3])
        self.assertEqual(sorted(summary), ["ks_rank_1", "ks_rank_2", "ks_rank_3"])


if __name__ == '__main__':
    unittest.main()
