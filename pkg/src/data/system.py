# data/system.py

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator, Philox, SeedSequence


@dataclass(frozen=True)
class SystemParams:
    M: int
    K: int
    P: float
    r: int = None

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be at least 1, got {self.M}")
        if self.K < self.M:
            raise ValueError(f"K must be at least M={self.M}, got {self.K}")
        if not self.P > 0:
            raise ValueError(f"P must be positive, got {self.P!r}")
        if self.r is None:
            object.__setattr__(self, "r", self.M)
        if not 1 <= self.r <= self.M:
            raise ValueError(f"r must lie in [1, M={self.M}], got {self.r}")


@dataclass(frozen=True)
class SeedRecord:
    master: int
    trial: int = 0

    def __post_init__(self):
        if self.master < 0 or self.trial < 0:
            raise ValueError(f"seed components must be nonnegative, got {self.master}, {self.trial}")

    def for_trial(self, trial):
        return SeedRecord(self.master, trial)

    def generator(self, stream=0):
        # substream per (trial, stream): worker count never changes the samples
        sequence = SeedSequence(self.master, spawn_key=(self.trial, stream))
        return Generator(Philox(sequence))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    H: np.ndarray
    seed: SeedRecord = None

    def __post_init__(self):
        H = np.array(self.H, dtype=complex)
        if H.ndim != 2:
            raise ValueError(f"channel matrix must be K x M, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ValueError("channel matrix has non-finite entries")
        H.setflags(write=False)
        object.__setattr__(self, "H", H)

    @property
    def K(self):
        return self.H.shape[0]

    @property
    def M(self):
        return self.H.shape[1]

    def __eq__(self, other):
        return isinstance(other, ChannelSet) and self.seed == other.seed and np.array_equal(self.H, other.H)

    __hash__ = None


ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BeamformerMatrix:
    """Unit-norm beam columns; orthogonal unless built by zero forcing."""

    W: np.ndarray
    orthogonal: bool = True

    def __post_init__(self):
        W = np.array(self.W, dtype=complex)
        if W.ndim == 1:
            W = W.reshape(-1, 1)
        if W.ndim != 2 or W.shape[1] > W.shape[0]:
            raise ValueError(f"beamformer must be M x n with n <= M, got shape {W.shape}")
        norms = np.linalg.norm(W, axis=0)
        if W.shape[1] and np.max(np.abs(norms - 1.0)) > ORTHONORMALITY_TOL:
            raise ValueError("beamformer columns must have unit norm")
        if self.orthogonal and self.deviation(W) > ORTHONORMALITY_TOL:
            raise ValueError("beamformer columns are not orthonormal")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @staticmethod
    def deviation(W):
        if W.shape[1] == 0:
            return 0.0
        return float(np.max(np.abs(W.conj().T @ W - np.eye(W.shape[1]))))

    @property
    def n(self):
        return self.W.shape[1]

    @property
    def M(self):
        return self.W.shape[0]


@dataclass(frozen=True)
class ScheduleOutcome:
    users: tuple
    W: BeamformerMatrix = field(compare=False)
    sinrs: tuple
    sum_rate: float
    candidacy: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(int(u) for u in self.users))
        object.__setattr__(self, "sinrs", tuple(float(s) for s in self.sinrs))
        object.__setattr__(self, "candidacy", tuple(float(s) for s in self.candidacy))
        if len(set(self.users)) != len(self.users):
            raise ValueError(f"scheduled users must be distinct, got {self.users}")
        if len(self.sinrs) != len(self.users) or self.W.n != len(self.users):
            raise ValueError("users, SINRs and beam columns disagree in count")
        if any(s < 0 for s in self.sinrs):
            raise ValueError("SINRs must be nonnegative")
        object.__setattr__(self, "sum_rate", float(self.sum_rate))
        expected = math.fsum(math.log1p(s) for s in self.sinrs)
        if not math.isclose(self.sum_rate, expected, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"sum rate {self.sum_rate!r} is not the sum of log(1 + SINR) = {expected!r}")

    @property
    def n_scheduled(self):
        return len(self.users)
