import math
import unittest

import numpy as np

from algorithms.channel import draw_channels
from algorithms.schedulers import (
    adaptive_obf,
    greedy_zfdp_schedule,
    olbf,
    random_selection_obf,
    random_selection_olbf,
    sum_rate,
    zf_sinrs_pinv,
    zf_sinrs_projection,
    zfs_schedule,
)
from data.system import BeamformerMatrix, ChannelSet, ScheduleOutcome, SeedRecord, SystemParams


def naive_obf_steps(H, P, r):
    """Winners of each forced step, recomputed with explicit projector matrices."""
    K, M = H.shape
    users, beams = [], []
    for _ in range(r):
        projector = np.eye(M, dtype=complex)
        for w in beams:
            projector -= np.outer(w, w.conj())
        best, best_sinr = None, -1.0
        for u in range(K):
            if u in users:
                continue
            h = H[u]
            gain = float(np.vdot(h, h).real)
            residual = projector @ (h / math.sqrt(gain))
            p2 = float(np.vdot(residual, residual).real)
            sinr = gain * p2 / (gain * (1 - p2) + r / P)
            if sinr > best_sinr:
                best, best_sinr = u, sinr
        users.append(best)
        residual = projector @ H[best]
        beams.append(residual / np.linalg.norm(residual))
    return users


def naive_olbf_steps(H, P):
    K, M = H.shape
    gains = np.sum(np.abs(H) ** 2, axis=1)
    first = int(np.argmax(gains))
    anchor = H[first] / math.sqrt(gains[first])
    outcome_beams = olbf(ChannelSet(H), P).W.W
    users = [first]
    for n in range(1, M):
        w = outcome_beams[:, n]
        best, best_sinr = None, -1.0
        for u in range(K):
            if u in users:
                continue
            q2 = abs(np.vdot(w, H[u] / math.sqrt(gains[u]))) ** 2
            sinr = gains[u] * q2 / (gains[u] * (1 - q2) + M / P)
            if sinr > best_sinr:
                best, best_sinr = u, sinr
        users.append(best)
    return users, anchor


class TestSumRate(unittest.TestCase):

    def test_values(self):
        self.assertEqual(sum_rate([]), 0.0)
        self.assertAlmostEqual(sum_rate([math.e - 1]), 1.0, places=12)
        self.assertAlmostEqual(sum_rate([4, 1]), 2.302585, places=6)

    def test_negative_sinr(self):
        with self.assertRaises(ValueError):
            sum_rate([1.0, -0.1])

    def test_outcome_rate_must_match_sinrs(self):
        W = BeamformerMatrix(np.eye(2))
        outcome = ScheduleOutcome((0, 1), W, (4.0, 1.0), sum_rate([4.0, 1.0]))
        self.assertAlmostEqual(outcome.sum_rate, math.log(10.0), places=12)
        with self.assertRaises(ValueError):
            ScheduleOutcome((0, 1), W, (4.0, 1.0), 2.0)

    def test_scheduler_outcomes_are_consistent(self):
        channels = draw_channels(SystemParams(3, 8, 10.0), SeedRecord(21))
        for outcome in (adaptive_obf(channels, 10.0), olbf(channels, 10.0),
                        zfs_schedule(channels, 10.0, 3), greedy_zfdp_schedule(channels, 10.0, 3)):
            self.assertAlmostEqual(outcome.sum_rate, math.fsum(math.log1p(s) for s in outcome.sinrs), places=12)


class TestAdaptiveObf(unittest.TestCase):
    def setUp(self):
        self.orthogonal = ChannelSet(np.array([[2.0, 0.0], [0.0, 1.0]]))

    def test_single_user(self):
        channels = ChannelSet(np.array([[1.0 + 1j, 0.5]]))
        outcome = adaptive_obf(channels, 2.0)
        self.assertEqual(outcome.users, (0,))
        self.assertAlmostEqual(outcome.sinrs[0], 2.25 * 2.0, places=12)

    def test_orthogonal_rows(self):
        for force_r in (None, 2):
            outcome = adaptive_obf(self.orthogonal, 2.0, force_r)
            self.assertEqual(outcome.users, (0, 1))
            np.testing.assert_allclose(outcome.sinrs, (4.0, 1.0), rtol=1e-12)
            self.assertAlmostEqual(outcome.sum_rate, math.log(5) + math.log(2), places=12)

    def test_forced_steps_match_naive_loop(self):
        params = SystemParams(M=3, K=10, P=10 ** 1.5)
        for trial in range(200):
            channels = draw_channels(params, SeedRecord(2024, trial))
            outcome = adaptive_obf(channels, params.P, force_r=3)
            self.assertEqual(list(outcome.users), naive_obf_steps(channels.H, params.P, 3))

    def test_beams_orthonormal(self):
        params = SystemParams(M=4, K=12, P=5.0)
        for trial in range(50):
            outcome = adaptive_obf(draw_channels(params, SeedRecord(9, trial)), params.P, force_r=4)
            self.assertLessEqual(BeamformerMatrix.deviation(outcome.W.W), 1e-10)

    def test_adaptive_stop_low_power(self):
        params = SystemParams(M=4, K=8, P=1e-3)
        for trial in range(20):
            outcome = adaptive_obf(draw_channels(params, SeedRecord(1, trial)), params.P)
            self.assertEqual(outcome.n_scheduled, 1)

    def test_adaptive_stop_high_power(self):
        params = SystemParams(M=4, K=20, P=1e4)
        for trial in range(20):
            outcome = adaptive_obf(draw_channels(params, SeedRecord(1, trial)), params.P)
            self.assertGreaterEqual(outcome.n_scheduled, 2)
            self.assertAlmostEqual(outcome.sum_rate, sum_rate(outcome.sinrs), places=12)

    def test_adaptive_stop_never_loses_to_first_step(self):
        params = SystemParams(M=4, K=10, P=10.0)
        for trial in range(50):
            channels = draw_channels(params, SeedRecord(77, trial))
            outcome = adaptive_obf(channels, params.P)
            single = adaptive_obf(channels, params.P, force_r=1)
            if outcome.n_scheduled == 1:
                self.assertAlmostEqual(outcome.sum_rate, single.sum_rate, places=12)
            else:
                self.assertGreater(outcome.sum_rate, single.sum_rate)
            self.assertEqual(len(outcome.candidacy), outcome.n_scheduled)

    def test_force_r_out_of_range(self):
        with self.assertRaises(ValueError):
            adaptive_obf(self.orthogonal, 1.0, force_r=3)


class TestOlbf(unittest.TestCase):

    def test_orthogonal_rows(self):
        outcome = olbf(ChannelSet(np.array([[2.0, 0.0], [0.0, 1.0]])), 2.0)
        self.assertEqual(outcome.users, (0, 1))
        np.testing.assert_allclose(outcome.sinrs, (4.0, 1.0), rtol=1e-12)

    def test_first_user_strongest_and_greedy(self):
        params = SystemParams(M=3, K=10, P=10 ** 1.5)
        for trial in range(100):
            channels = draw_channels(params, SeedRecord(31, trial))
            outcome = olbf(channels, params.P)
            users, anchor = naive_olbf_steps(channels.H, params.P)
            self.assertEqual(list(outcome.users), users)
            np.testing.assert_allclose(outcome.W.W[:, 0], anchor, atol=1e-12)
            self.assertEqual(outcome.n_scheduled, 3)

    def test_sample_ordering(self):
        params = SystemParams(M=4, K=10, P=3.0)
        for trial in range(200):
            sinrs = olbf(draw_channels(params, SeedRecord(8, trial)), params.P).sinrs
            ts = [s / (1 + s) for s in sinrs]
            self.assertTrue(all(t <= ts[0] + 1e-12 for t in ts[1:]))

    def test_two_antennas_match_adaptive_obf(self):
        params = SystemParams(M=2, K=2, P=10.0)
        for trial in range(300):
            channels = draw_channels(params, SeedRecord(7, trial))
            first = olbf(channels, params.P)
            second = adaptive_obf(channels, params.P, force_r=2)
            self.assertEqual(first.users, second.users)
            np.testing.assert_allclose(first.sinrs, second.sinrs, rtol=1e-9)

    def test_needs_enough_users(self):
        with self.assertRaises(ValueError):
            olbf(ChannelSet(np.ones((2, 3))), 1.0)


class TestRandomSelection(unittest.TestCase):

    def test_obf_candidacy_decreasing(self):
        params = SystemParams(M=4, K=6, P=2.0)
        for trial in range(500):
            seed = SeedRecord(12, trial)
            _, values = random_selection_obf(draw_channels(params, seed), params.P, 4, seed.generator(1))
            self.assertEqual(len(values), 4)
            self.assertTrue(all(a >= b - 1e-12 for a, b in zip(values, values[1:])))
            self.assertGreaterEqual(values[-1], 0.0)

    def test_obf_single_beam(self):
        params = SystemParams(M=3, K=4, P=2.0)
        seed = SeedRecord(3, 1)
        channels = draw_channels(params, seed)
        tagged, values = random_selection_obf(channels, params.P, 1, seed.generator(1))
        gain = float(np.sum(np.abs(channels.H[tagged]) ** 2))
        self.assertAlmostEqual(values[0], gain * params.P, places=10)

    def test_olbf_region(self):
        params = SystemParams(M=3, K=5, P=1.0)
        for trial in range(500):
            seed = SeedRecord(4, trial)
            channels = draw_channels(params, seed)
            tagged, values = random_selection_olbf(channels, params.P, seed.generator(1))
            zs = [v / (1 + v) for v in values]
            self.assertLessEqual(sum(zs[1:]), zs[0] + 1e-12)
            gain = float(np.sum(np.abs(channels.H[tagged]) ** 2))
            self.assertAlmostEqual(values[0], gain * params.P / params.M, places=10)


class TestZeroForcing(unittest.TestCase):

    def test_two_ways_agree(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            H_S = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
            np.testing.assert_allclose(zf_sinrs_pinv(H_S, 7.0, 3)[0], zf_sinrs_projection(H_S, 7.0, 3), rtol=1e-9)

    def test_orthogonal_rows(self):
        outcome = zfs_schedule(ChannelSet(np.array([[2.0, 0.0], [0.0, 1.0]])), 2.0, 2)
        self.assertEqual(outcome.users, (0, 1))
        np.testing.assert_allclose(outcome.sinrs, (4.0, 1.0), rtol=1e-12)
        self.assertFalse(outcome.W.orthogonal)

    def test_single_user_matches_obf(self):
        params = SystemParams(M=3, K=8, P=4.0)
        for trial in range(30):
            channels = draw_channels(params, SeedRecord(21, trial))
            zfs = zfs_schedule(channels, params.P, 1)
            zfdp = greedy_zfdp_schedule(channels, params.P, 1)
            obf = adaptive_obf(channels, params.P, force_r=1)
            self.assertEqual(zfs.users, obf.users)
            self.assertEqual(zfdp.users, obf.users)
            self.assertAlmostEqual(zfs.sum_rate, obf.sum_rate, places=10)
            self.assertAlmostEqual(zfdp.sum_rate, zfs.sum_rate, places=10)

    def test_scheduled_outcome_two_ways(self):
        params = SystemParams(M=4, K=10, P=10.0)
        for trial in range(30):
            channels = draw_channels(params, SeedRecord(22, trial))
            outcome = zfs_schedule(channels, params.P, 3)
            H_S = channels.H[list(outcome.users)]
            np.testing.assert_allclose(outcome.sinrs, zf_sinrs_projection(H_S, params.P, 3), rtol=1e-9)

    def test_zfdp_gains_are_qr_diagonal(self):
        params = SystemParams(M=4, K=10, P=10.0)
        for trial in range(30):
            channels = draw_channels(params, SeedRecord(23, trial))
            outcome = greedy_zfdp_schedule(channels, params.P, 3)
            _, R = np.linalg.qr(channels.H[list(outcome.users)].T)
            expected = (params.P / 3) * np.abs(np.diag(R)) ** 2
            np.testing.assert_allclose(outcome.sinrs, expected, rtol=1e-9)
            self.assertLessEqual(BeamformerMatrix.deviation(outcome.W.W), 1e-10)

    def test_zfdp_not_below_zfs_on_average(self):
        params = SystemParams(M=3, K=10, P=10.0)
        zfs_rates, zfdp_rates = [], []
        for trial in range(300):
            channels = draw_channels(params, SeedRecord(24, trial))
            zfs_rates.append(zfs_schedule(channels, params.P, 3).sum_rate)
            zfdp_rates.append(greedy_zfdp_schedule(channels, params.P, 3).sum_rate)
        self.assertGreaterEqual(np.mean(zfdp_rates), np.mean(zfs_rates))


if __name__ == '__main__':
    unittest.main()
