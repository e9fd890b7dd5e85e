# algorithms/montecarlo.py

import logging
import math
import time
from multiprocessing import Pool

import numpy as np

from algorithms.analytic_obf import ObfParams, obf_distribution, obf_unordered_cdf
from algorithms.analytic_olbf import OlbfParams, olbf_cdf_z, olbf_distribution, v_to_z
from algorithms.numerics import QuadratureSpec
from algorithms.channel import draw_channels
from algorithms.errors import StructuralCheckError
from algorithms.schedulers import (
    adaptive_obf,
    greedy_zfdp_schedule,
    olbf,
    random_selection_obf,
    random_selection_olbf,
    sum_rate,
    zfs_schedule,
)
from data.experiment import EmpiricalDistribution, ExperimentReport, TrialRecord
from data.system import ORTHONORMALITY_TOL, BeamformerMatrix, SeedRecord

logger = logging.getLogger(__name__)

CHECK_EVERY = 1000
ANALYTIC_MAX_RANK = 3
REGION_TOL = 1e-12
# tabulation tolerance for the overlay grids
GRID_SPEC = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-10)


def _structural_check(trial, outcome, scheme):
    W = outcome.W
    if W.orthogonal and BeamformerMatrix.deviation(W.W) > ORTHONORMALITY_TOL:
        raise StructuralCheckError(trial, "beamformer columns lost orthonormality")
    if any(s < 0 for s in outcome.sinrs):
        raise StructuralCheckError(trial, f"negative SINR in {outcome.sinrs}")
    if scheme == "olbf":
        ts = [s / (1.0 + s) for s in outcome.sinrs]
        if any(t > ts[0] + REGION_TOL for t in ts[1:]):
            raise StructuralCheckError(trial, f"t values outside t_j <= t_1: {ts}")


def _random_region_check(trial, values, scheme):
    if any(v < 0 for v in values):
        raise StructuralCheckError(trial, f"negative SINR in {values}")
    if scheme == "random-obf" and any(values[i] < values[i + 1] - REGION_TOL for i in range(len(values) - 1)):
        raise StructuralCheckError(trial, f"candidacy SINRs not decreasing: {values}")
    if scheme == "random-olbf":
        zs = [v / (1.0 + v) for v in values]
        if sum(zs[1:]) > zs[0] + REGION_TOL:
            raise StructuralCheckError(trial, f"z values outside z_2 + ... + z_M <= z_1: {zs}")


def run_trial(config, trial):
    seed = SeedRecord(config.seed, trial)
    channels = draw_channels(config.params, seed)
    scheme, P = config.scheme, config.params.P
    check = trial % CHECK_EVERY == 0

    if scheme in ("random-obf", "random-olbf"):
        rng = seed.generator(stream=1)
        if scheme == "random-obf":
            tagged, values = random_selection_obf(channels, P, config.scheduled, rng)
        else:
            tagged, values = random_selection_olbf(channels, P, rng)
        if check:
            _random_region_check(trial, values, scheme)
        return TrialRecord(trial, (tagged,), tuple(float(v) for v in values), sum_rate(values))

    if scheme == "adaptive-obf":
        outcome = adaptive_obf(channels, P, config.force_r)
    elif scheme == "olbf":
        outcome = olbf(channels, P)
    elif scheme == "zfs":
        outcome = zfs_schedule(channels, P, config.scheduled)
    else:
        outcome = greedy_zfdp_schedule(channels, P, config.scheduled)
    if check:
        _structural_check(trial, outcome, scheme)
    return TrialRecord(trial, outcome.users, outcome.sinrs, outcome.sum_rate)


def _run_chunk(task):
    config, start, stop = task
    return [run_trial(config, trial) for trial in range(start, stop)]


def _chunks(trials, workers):
    size = math.ceil(trials / workers)
    return [(start, min(start + size, trials)) for start in range(0, trials, size)]


def ks_distance(samples, cdf):
    """Sup distance between the empirical CDF of samples and cdf."""
    if isinstance(samples, EmpiricalDistribution):
        samples = samples.samples
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("KS distance of an empty sample")
    F = np.asarray(cdf(x), dtype=float)
    above = np.arange(1, n + 1) / n - F
    below = F - np.arange(0, n) / n
    return float(max(np.max(above), np.max(below)))


def mean_sum_rate_mc(config, workers=1):
    """(mean, standard error) of the sum rate over config.trials trials."""
    report = run_experiment(config, workers)
    return report.mean_sum_rate, report.stderr


def density_histogram(samples, bins=100):
    density, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins, density=True)
    return edges, density


def _unordered_obf_cdf(n, params):
    return np.vectorize(lambda y: obf_unordered_cdf(n, y, params))


def _unordered_olbf_cdf(n, params):
    if n == 1:
        return np.vectorize(lambda y: olbf_cdf_z(1, (v_to_z(y),), params).value)
    return np.vectorize(lambda y: olbf_cdf_z(2, (1.0, v_to_z(y)), params).value)


def _analytic_summary(config, records, grid_count):
    """(grids, ks, analytic mean) for the schemes the analysis covers; the mean integrates the grids."""
    scheme, params = config.scheme, config.params
    by_rank = {}
    for record in records:
        for rank, sinr in enumerate(record.sinrs, start=1):
            by_rank.setdefault(rank, []).append(sinr)

    if scheme == "adaptive-obf":
        if config.force_r is None or config.force_r > ANALYTIC_MAX_RANK:
            logger.warning("no analytic distributions for adaptive OBF without force-r <= %d", ANALYTIC_MAX_RANK)
            return (), (), None
        analytic = ObfParams.from_system(params, config.force_r)
        grids = tuple(obf_distribution(n, analytic, grid_count, GRID_SPEC) for n in range(1, config.force_r + 1))
    elif scheme == "olbf":
        if params.M > ANALYTIC_MAX_RANK:
            logger.warning("no analytic distributions for OLBF with M > %d", ANALYTIC_MAX_RANK)
            return (), (), None
        analytic = OlbfParams.from_system(params)
        grids = tuple(olbf_distribution(n, analytic, grid_count, GRID_SPEC) for n in range(1, params.M + 1))
    elif scheme == "random-obf":
        analytic = ObfParams.from_system(params, config.scheduled)
        ranks = [n for n in sorted(by_rank) if n <= ANALYTIC_MAX_RANK]
        ks = tuple((n, ks_distance(by_rank[n], _unordered_obf_cdf(n, analytic))) for n in ranks)
        return (), ks, None
    elif scheme == "random-olbf":
        analytic = OlbfParams.from_system(params)
        ks = tuple((n, ks_distance(by_rank[n], _unordered_olbf_cdf(n, analytic))) for n in sorted(by_rank))
        return (), ks, None
    else:
        logger.warning("no analytic distributions for %s", scheme)
        return (), (), None

    ks = tuple((grid.rank, ks_distance(by_rank.get(grid.rank, []), grid.cdf_at)) for grid in grids)
    return grids, ks, math.fsum(grid.mean_log_rate() for grid in grids)


def run_experiment(config, workers=1, analytic=False, grid_count=200):
    """Run config.trials independent trials; results do not depend on workers."""
    start_time = time.time()
    workers = max(1, min(int(workers), config.trials))
    spans = _chunks(config.trials, workers)
    logger.info("%s: %d trials in %d chunk(s) on %d worker(s)", config.scheme, config.trials, len(spans), workers)
    tasks = [(config, start, stop) for start, stop in spans]
    if workers == 1:
        chunks = [_run_chunk(task) for task in tasks]
    else:
        with Pool(workers) as pool:
            chunks = pool.map(_run_chunk, tasks)
    records = tuple(record for chunk in chunks for record in chunk)

    grids, ks, analytic_mean = (), (), None
    if analytic:
        grids, ks, analytic_mean = _analytic_summary(config, records, grid_count)

    runtime = time.time() - start_time
    logger.info("%s finished in %.2f s", config.scheme, runtime)
    return ExperimentReport(config, records, ks, analytic_mean, runtime=runtime, grids=grids)
