"""Fixed-order NARMA benchmark series and train/test partitions.

The recurrence is ``y(t) = 0.7 s(t - tau) + (1 - y(t-1)) y(t-1) + 0.1`` with
``s`` i.i.d. uniform on (0, 1). Before the first step ``y`` is zero, and
``s(t - tau)`` counts as zero while ``t < tau``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError, NumericalError
from .reservoir import make_rng

DIVERGENCE_BOUND = 10.0


@dataclass(frozen=True)
class NarmaConfig:
    length: int
    tau: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.tau < 1:
            raise ConfigError(f"tau must be >= 1, got {self.tau}")
        if self.length <= self.tau:
            raise ConfigError(f"length must exceed tau, got length={self.length} tau={self.tau}")


def narma_series(s, tau: int) -> np.ndarray:
    """Run the recurrence on a given input sequence."""
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    y, bad = _kernels.narma_recurrence(s, int(tau), DIVERGENCE_BOUND)
    if bad >= 0:
        raise NumericalError(f"NARMA output left [-{DIVERGENCE_BOUND}, {DIVERGENCE_BOUND}] at t={bad}")
    return y


def narma_generate(config: NarmaConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Input and output sequences, both of shape (length,)."""
    s = make_rng(config.seed).uniform(0.0, 1.0, size=config.length)
    return s, narma_series(s, config.tau)


@dataclass
class TimeSeriesDataset:
    """Contiguous train window followed by a test window of one stream.

    ``washout`` rows at the start of each window are excluded from scoring.
    """

    inputs: np.ndarray
    targets: np.ndarray
    train_length: int
    test_length: int
    washout: int
    config: Optional[NarmaConfig] = None

    def __post_init__(self):
        self.inputs = _column(self.inputs)
        self.targets = _column(self.targets)
        T = self.inputs.shape[0]
        if self.targets.shape[0] != T:
            raise DataError(f"{T} inputs but {self.targets.shape[0]} targets")
        if self.train_length < 1 or self.test_length < 1:
            raise DataError("train and test lengths must be positive")
        if self.train_length + self.test_length > T:
            raise DataError(
                f"train {self.train_length} + test {self.test_length} exceeds series length {T}"
            )
        if self.washout < 0 or self.washout >= min(self.train_length, self.test_length):
            raise DataError(
                f"washout {self.washout} must be smaller than both window lengths "
                f"({self.train_length}, {self.test_length})"
            )

    @property
    def train(self) -> Tuple[np.ndarray, np.ndarray]:
        n = self.train_length
        return self.inputs[:n], self.targets[:n]

    @property
    def test(self) -> Tuple[np.ndarray, np.ndarray]:
        a, b = self.train_length, self.train_length + self.test_length
        return self.inputs[a:b], self.targets[a:b]


def _column(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


def split_dataset(s, y, train_length: int, test_length: int, washout: int, config=None) -> TimeSeriesDataset:
    return TimeSeriesDataset(s, y, train_length, test_length, washout, config)


def write_csv(path, s, y, config: Optional[NarmaConfig] = None) -> None:
    """Two-column ``s,y`` file with the generating config in ``#`` comments."""
    s = np.asarray(s).reshape(-1)
    y = np.asarray(y).reshape(-1)
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write(f"# length={config.length}\n# tau={config.tau}\n# seed={config.seed}\n")
        fh.write("s,y\n")
        for a, b in zip(s, y):
            fh.write(f"{a:.17g},{b:.17g}\n")


def read_csv(path) -> Tuple[np.ndarray, np.ndarray, Optional[NarmaConfig]]:
    meta = {}
    rows = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, val = line[1:].strip().partition("=")
                    meta[key.strip()] = val.strip()
                elif line.replace(" ", "") == "s,y":
                    continue
                else:
                    a, b = line.split(",")
                    rows.append((float(a), float(b)))
    except (OSError, ValueError) as err:
        raise DataError(f"cannot read dataset {path}: {err}") from err
    if not rows:
        raise DataError(f"dataset {path} has no rows")
    arr = np.array(rows)
    config = None
    if {"length", "tau", "seed"} <= meta.keys():
        config = NarmaConfig(int(meta["length"]), int(meta["tau"]), int(meta["seed"]))
    return arr[:, 0], arr[:, 1], config
