"""Shallow, parallel and series echo state networks with memory-capacity tools."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .deep import (
    ParallelEsn,
    SeriesEsn,
    parallel_predict,
    parallel_train,
    series_predict,
    series_train,
)
from .errors import ConfigError, DataError, EsnError, NumericalError, UntrainedError
from .memory import (
    McProbeConfig,
    McReport,
    build_machinery,
    empirical_mc,
    rot,
    theoretical_mc_parallel,
    verify_theorem_identities,
    zeta,
)
from .metrics import nrmse
from .narma import NarmaConfig, TimeSeriesDataset, narma_generate, split_dataset
from .reservoir import (
    Activation,
    Esn,
    EsnConfig,
    StateTrajectory,
    Topology,
    build_cycle,
    build_dense_random,
    build_esn,
    derive_seed,
    make_rng,
    run_sequence,
    spectral_radius,
)
from .training import RidgeProblem, TrainResult, ridge_fit, train_esn
