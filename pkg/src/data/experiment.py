# data/experiment.py

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from data.system import SystemParams

SCHEMES = ("adaptive-obf", "olbf", "zfs", "zfdp", "random-obf", "random-olbf")


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams
    scheme: str
    trials: int
    seed: int
    force_r: int = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {', '.join(SCHEMES)}")
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        M, K = self.params.M, self.params.K
        if self.force_r is not None:
            if not 1 <= self.force_r <= min(K, M):
                raise ValueError(f"force_r must lie in [1, min(K, M)={min(K, M)}], got {self.force_r}")
            if self.scheme in ("olbf", "random-olbf") and self.force_r != M:
                raise ValueError(f"{self.scheme} always schedules M={M} users")
        if self.scheme == "random-olbf" and K < 2:
            raise ValueError("random-olbf needs at least two users")

    @property
    def scheduled(self):
        """Users per trial, or None when adaptive OBF picks the count itself."""
        if self.scheme in ("olbf", "random-olbf"):
            return self.params.M
        if self.scheme == "adaptive-obf":
            return self.force_r
        return self.force_r if self.force_r is not None else self.params.r

    def to_dict(self):
        return {
            "scheme": self.scheme,
            "M": self.params.M,
            "K": self.params.K,
            "P": self.params.P,
            "r": self.params.r,
            "trials": self.trials,
            "seed": self.seed,
            "force_r": self.force_r,
        }

    @classmethod
    def from_dict(cls, data):
        params = SystemParams(int(data["M"]), int(data["K"]), float(data["P"]), int(data["r"]))
        force_r = data.get("force_r")
        return cls(params, data["scheme"], int(data["trials"]), int(data["seed"]),
                   int(force_r) if force_r is not None else None)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    users: tuple
    sinrs: tuple
    sum_rate: float


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    samples: np.ndarray

    def __post_init__(self):
        samples = np.sort(np.asarray(self.samples, dtype=float))
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        return isinstance(other, EmpiricalDistribution) and np.array_equal(self.samples, other.samples)

    __hash__ = None

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size


@dataclass(frozen=True, eq=False)
class DistributionGrid:
    """Analytic marginal PDF/CDF of one scheduled user's SINR on a grid."""

    scheme: str
    rank: int
    y: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray

    def __post_init__(self):
        for name in ("y", "pdf", "cdf"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.y.shape == self.pdf.shape == self.cdf.shape):
            raise ValueError("grid, pdf and cdf lengths differ")
        if np.any(np.diff(self.y) <= 0):
            raise ValueError("grid abscissae must increase")

    def pdf_at(self, x):
        return np.interp(x, self.y, self.pdf, left=0.0, right=0.0)

    def cdf_at(self, x):
        return np.interp(x, self.y, self.cdf, left=0.0, right=1.0)

    def mean_log_rate(self):
        """E[log(1 + y)] in nats by Simpson's rule over the tabulated density."""
        return float(integrate.simpson(np.log1p(self.y) * self.pdf, x=self.y))


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    records: tuple
    ks: tuple = ()
    analytic_mean: float = None
    runtime: float = field(default=0.0, compare=False)
    grids: tuple = field(default=(), compare=False)

    @property
    def sum_rates(self):
        return np.array([record.sum_rate for record in self.records])

    @property
    def mean_sum_rate(self):
        return math.fsum(record.sum_rate for record in self.records) / len(self.records)

    @property
    def stderr(self):
        if len(self.records) < 2:
            return 0.0
        return float(np.std(self.sum_rates, ddof=1) / math.sqrt(len(self.records)))

    @property
    def distributions(self):
        by_rank = {}
        for record in self.records:
            for rank, sinr in enumerate(record.sinrs, start=1):
                by_rank.setdefault(rank, []).append(sinr)
        return {rank: EmpiricalDistribution(values) for rank, values in sorted(by_rank.items())}

    def ks_for(self, rank):
        return dict(self.ks).get(rank)


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict
    input_hash: str
    seed: int
    version: str
    timestamp: str = field(default="", compare=False)

    def header_items(self):
        """Deterministic part embedded in data files."""
        return [
            ("command", self.command),
            ("config", self.config),
            ("input_hash", self.input_hash),
            ("seed", self.seed),
            ("version", self.version),
        ]
