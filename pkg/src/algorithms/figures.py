# algorithms/figures.py
"""Data tables behind the overlay and sum-rate comparison plots."""

import logging
import math

import numpy as np
from sklearn.linear_model import LinearRegression

from algorithms.analytic_obf import ObfParams, db_to_linear, obf_distribution
from algorithms.analytic_olbf import OlbfParams, olbf_distribution
from algorithms.montecarlo import density_histogram, mean_sum_rate_mc, run_experiment
from algorithms.numerics import QuadratureSpec
from data.experiment import ExperimentConfig
from data.system import SystemParams

logger = logging.getLogger(__name__)

FIGURES = ("fig1", "fig3", "fig4", "fig5")
OVERLAY_SETUP = {"M": 3, "K": 10, "snr_db": 15.0}
SWEEP_SNR_DB = tuple(range(-10, 21, 2))
SWEEP_M = (2, 4)
SWEEP_K = tuple(range(3, 21))
SWEEP_K_SNR_DB = (0.0, 10.0)
# fig5 analytic means integrate tabulated marginals
SWEEP_SPEC = QuadratureSpec(rel_tol=1e-5, abs_tol=1e-9)
SWEEP_GRID_COUNT = 120

RATE_SUFFIXES = ("_mean", "_stderr", "_analytic")


def with_bits_columns(header, rows):
    """Append a <column>_bits copy of every rate column, in bits."""
    rate_columns = [i for i, name in enumerate(header) if name.endswith(RATE_SUFFIXES)]
    header = tuple(header) + tuple(f"{header[i]}_bits" for i in rate_columns)
    rows = [tuple(row) + tuple(row[i] / math.log(2) for i in rate_columns) for row in rows]
    return header, rows


def slope_summary(x, y):
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    if x.shape[0] < 2:
        return {"coefficient": None, "r_squared": None}
    model = LinearRegression().fit(x, y)
    return {"coefficient": float(model.coef_[0][0]), "r_squared": float(model.score(x, y))}


def _overlay(scheme, trials, seed, workers, bins):
    M, K = OVERLAY_SETUP["M"], OVERLAY_SETUP["K"]
    params = SystemParams(M, K, db_to_linear(OVERLAY_SETUP["snr_db"]), M)
    config = ExperimentConfig(params, scheme, trials, seed, M if scheme == "adaptive-obf" else None)
    report = run_experiment(config, workers, analytic=True)
    rows = []
    distributions = report.distributions
    for grid in report.grids:
        edges, density = density_histogram(distributions[grid.rank].samples, bins)
        centers = 0.5 * (edges[:-1] + edges[1:])
        analytic = grid.pdf_at(centers)
        rows.extend((grid.rank, float(c), float(d), float(f)) for c, d, f in zip(centers, density, analytic))
    summary = {f"ks_rank_{rank}": value for rank, value in report.ks}
    return ("rank", "y", "empirical_pdf", "analytic_pdf"), rows, summary


def _mean(scheme, params, trials, seed, workers, force_r=None):
    return mean_sum_rate_mc(ExperimentConfig(params, scheme, trials, seed, force_r), workers)


def _tabulated_mean(distribution, params, ranks):
    return math.fsum(
        distribution(n, params, SWEEP_GRID_COUNT, SWEEP_SPEC).mean_log_rate() for n in range(1, ranks + 1)
    )


def _sweep_power(trials, seed, workers):
    schemes = ("adaptive-obf", "olbf", "zfs")
    rows = []
    curves = {}
    for M in SWEEP_M:
        for snr_db in SWEEP_SNR_DB:
            params = SystemParams(M, M, db_to_linear(snr_db), M)
            row = [M, float(snr_db)]
            for scheme in schemes:
                mean, stderr = _mean(scheme, params, trials, seed, workers)
                row.extend((mean, stderr))
                curves.setdefault((M, scheme), []).append(mean)
            rows.append(tuple(row))
            logger.info("fig4: M=%d, %g dB done", M, snr_db)
    header = ("M", "snr_db") + tuple(f"{s}_{c}" for s in schemes for c in ("mean", "stderr"))
    summary = {
        f"slope_per_db_M{M}_{scheme}": slope_summary(SWEEP_SNR_DB, values)
        for (M, scheme), values in curves.items()
    }
    return (*with_bits_columns(header, rows), summary)


def _sweep_users(trials, seed, workers, analytic, k_values=SWEEP_K):
    M = 3
    rows = []
    curves = {}
    for snr_db in SWEEP_K_SNR_DB:
        P = db_to_linear(snr_db)
        for K in k_values:
            params = SystemParams(M, K, P, M)
            zfdp, zfdp_err = _mean("zfdp", params, trials, seed, workers, M)
            obf, obf_err = _mean("adaptive-obf", params, trials, seed, workers, M)
            olbf_rate, olbf_err = _mean("olbf", params, trials, seed, workers)
            if analytic:
                obf_analytic = _tabulated_mean(obf_distribution, ObfParams(M, K, P, M), M)
                olbf_analytic = _tabulated_mean(olbf_distribution, OlbfParams(M, K, P), M)
            else:
                obf_analytic = olbf_analytic = math.nan
            rows.append((
                float(snr_db), K,
                zfdp, zfdp_err, obf, obf_err, olbf_rate, olbf_err,
                obf_analytic, olbf_analytic,
                obf / zfdp, olbf_rate / zfdp,
            ))
            for scheme, value in (("zfdp", zfdp), ("adaptive-obf", obf), ("olbf", olbf_rate)):
                curves.setdefault((snr_db, scheme), []).append(value)
            logger.info("fig5: %g dB, K=%d done", snr_db, K)
    header = (
        "snr_db", "K",
        "zfdp_mean", "zfdp_stderr", "adaptive-obf_mean", "adaptive-obf_stderr", "olbf_mean", "olbf_stderr",
        "adaptive-obf_analytic", "olbf_analytic",
        "adaptive-obf_over_zfdp", "olbf_over_zfdp",
    )
    loglog_k = [math.log(math.log(K)) for K in k_values]
    summary = {
        f"slope_per_loglogK_{snr_db:g}dB_{scheme}": slope_summary(loglog_k, values)
        for (snr_db, scheme), values in curves.items()
    }
    return (*with_bits_columns(header, rows), summary)


def figure_bundle(name, trials, seed, workers=1, analytic=True, bins=100, k_values=SWEEP_K):
    """(header, rows, summary) for one of FIGURES.

    The fig4 and fig5 tables carry every rate column twice, in nats and with a
    _bits suffix. k_values restricts the fig5 user counts.
    """
    if name not in FIGURES:
        raise ValueError(f"figure must be one of {FIGURES}, got {name!r}")
    if name == "fig1":
        return _overlay("adaptive-obf", trials, seed, workers, bins)
    if name == "fig3":
        return _overlay("olbf", trials, seed, workers, bins)
    if name == "fig4":
        return _sweep_power(trials, seed, workers)
    return _sweep_users(trials, seed, workers, analytic, k_values)
