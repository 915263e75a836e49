"""Reservoir construction and the state-update / readout recurrences.

Randomness comes from :func:`make_rng`, a Philox counter-based generator
seeded through numpy's ``SeedSequence``; the stream is stable across
platforms and numpy versions. Sampling order is fixed: ``V`` row-major, then
``W`` row-major (dense topology only).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError, NumericalError, UntrainedError

_MASK64 = (1 << 64) - 1
_MAX_RESAMPLES = 10
_MIN_RADIUS = 1e-12


class Topology(str, enum.Enum):
    DENSE_RANDOM = "dense"
    SIMPLE_CYCLE = "cycle"


class Activation(str, enum.Enum):
    TANH = "tanh"
    IDENTITY = "identity"


def make_rng(seed: int) -> np.random.Generator:
    """Seeded Philox stream; the only RNG constructor used by the package."""
    if not 0 <= int(seed) <= _MASK64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.Philox(int(seed)))


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Child seed for member/stream ``index``: ``seed XOR splitmix64(index)``."""
    return (int(seed) ^ _splitmix64(int(index))) & _MASK64


@dataclass(frozen=True)
class EsnConfig:
    """Hyperparameters of a single reservoir.

    ``spectral_radius`` is used by the dense topology, ``cycle_weight`` by the
    simple cycle. ``ridge`` is the readout regularizer; it enters the normal
    equations squared.
    """

    reservoir_size: int
    input_dim: int = 1
    output_dim: int = 1
    topology: Topology = Topology.DENSE_RANDOM
    spectral_radius: Optional[float] = 0.9
    cycle_weight: Optional[float] = None
    activation: Activation = Activation.TANH
    ridge: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        object.__setattr__(self, "activation", Activation(self.activation))
        for name in ("reservoir_size", "input_dim", "output_dim"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.topology is Topology.DENSE_RANDOM:
            _check_open_unit("spectral_radius", self.spectral_radius)
        else:
            _check_open_unit("cycle_weight", self.cycle_weight)
        if self.spectral_radius is not None:
            _check_open_unit("spectral_radius", self.spectral_radius)
        if self.cycle_weight is not None:
            _check_open_unit("cycle_weight", self.cycle_weight)
        if not self.ridge >= 0:
            raise ConfigError(f"ridge must be >= 0, got {self.ridge}")
        if not 0 <= int(self.seed) <= _MASK64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def with_(self, **changes) -> "EsnConfig":
        return replace(self, **changes)


def _check_open_unit(name, value):
    if value is None:
        raise ConfigError(f"{name} is required for this topology")
    if not 0.0 < float(value) < 1.0:
        raise ConfigError(f"{name} must lie in (0, 1), got {value}")


@dataclass
class StateTrajectory:
    """Reservoir states, one row per time step, plus the washout count."""

    states: np.ndarray
    washout: int = 0

    def __post_init__(self):
        if not 0 <= self.washout < self.states.shape[0]:
            raise DataError(
                f"washout {self.washout} must be < trajectory length {self.states.shape[0]}"
            )

    @property
    def kept(self) -> np.ndarray:
        return self.states[self.washout :]


@dataclass(eq=False)
class Esn:
    """One reservoir with input matrix ``V``, recurrent ``W`` and readout ``U``.

    ``U`` is ``None`` until a readout has been fitted. ``x`` is the current
    state; :meth:`step` advances it, :meth:`run` resets it to zero first.
    """

    config: EsnConfig
    V: np.ndarray
    W: np.ndarray
    U: Optional[np.ndarray] = None
    x: np.ndarray = field(default=None)

    def __post_init__(self):
        N, K = self.config.reservoir_size, self.config.input_dim
        self.V = np.asarray(self.V, dtype=np.float64)
        self.W = np.asarray(self.W, dtype=np.float64)
        if self.V.shape != (N, K):
            raise ConfigError(f"V has shape {self.V.shape}, expected {(N, K)}")
        if self.W.shape != (N, N):
            raise ConfigError(f"W has shape {self.W.shape}, expected {(N, N)}")
        if self.U is not None:
            self.U = np.asarray(self.U, dtype=np.float64)
            M = self.config.output_dim
            if self.U.shape != (M, N):
                raise ConfigError(f"U has shape {self.U.shape}, expected {(M, N)}")
        if self.x is None:
            self.x = np.zeros(N)

    @property
    def trained(self) -> bool:
        return self.U is not None

    @property
    def linear(self) -> bool:
        return self.config.activation is Activation.IDENTITY

    def reset(self) -> None:
        self.x = np.zeros(self.config.reservoir_size)

    def step(self, u) -> np.ndarray:
        """Advance one time step with input vector ``u`` and return the new state."""
        u = np.asarray(u, dtype=np.float64).reshape(-1)
        if u.shape != (self.config.input_dim,):
            raise DataError(
                f"input has length {u.shape[0]}, expected {self.config.input_dim}"
            )
        pre = self.V @ u + self.W @ self.x
        self.x = pre if self.linear else np.tanh(pre)
        return self.x.copy()

    def readout(self) -> np.ndarray:
        """Output for the current state; the state is not touched."""
        if self.U is None:
            raise UntrainedError("readout requested from an untrained reservoir")
        return self.U @ self.x

    def run(self, inputs, washout: int = 0) -> StateTrajectory:
        """Drive the reservoir from the zero state over ``inputs`` (T x K)."""
        inputs = as_sequence(inputs, self.config.input_dim)
        drive = inputs @ self.V.T
        x0 = np.zeros(self.config.reservoir_size)
        states = _kernels.drive_reservoir(self.W, drive, x0, self.linear)
        self.x = states[-1].copy()
        return StateTrajectory(states, int(washout))

    def predict(self, inputs) -> np.ndarray:
        """Readout applied to every state of a fresh run over ``inputs``."""
        if self.U is None:
            raise UntrainedError("prediction requested from an untrained reservoir")
        return self.run(inputs).states @ self.U.T

    def copy(self) -> "Esn":
        return Esn(
            self.config,
            self.V.copy(),
            self.W.copy(),
            None if self.U is None else self.U.copy(),
            self.x.copy(),
        )


def as_sequence(inputs, dim: int) -> np.ndarray:
    """Coerce a T-vector or T x dim array to a float T x dim array."""
    arr = np.asarray(inputs, dtype=np.float64)
    if arr.ndim == 1 and dim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DataError(f"sequence has shape {arr.shape}, expected (T, {dim})")
    if arr.shape[0] == 0:
        raise DataError("empty input sequence")
    return arr


def run_sequence(esn: Esn, inputs, washout: int = 0) -> StateTrajectory:
    return esn.run(inputs, washout)


def _open_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    # numpy's uniform is [-1, 1); redraw the (practically unreachable) -1.0.
    a = rng.uniform(-1.0, 1.0, size=shape)
    while True:
        bad = a == -1.0
        if not bad.any():
            return a
        a[bad] = rng.uniform(-1.0, 1.0, size=int(bad.sum()))


def spectral_radius(W, *, tol: float = 1e-12, max_iter: int = 10_000) -> float:
    """Largest eigenvalue modulus of a square matrix.

    Power iteration with a Rayleigh-residual stopping test. Small matrices
    (N <= 64) and cases where the iteration does not settle, typically a
    complex or +/- dominant pair, go through a full eigendecomposition.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ConfigError(f"spectral radius needs a square matrix, got {W.shape}")
    if not np.all(np.isfinite(W)):
        raise NumericalError("matrix has non-finite entries")
    n = W.shape[0]
    if n <= 64:
        return float(np.max(np.abs(np.linalg.eigvals(W))))
    radius = _power_iteration(W, tol, max_iter)
    if radius is None:
        return float(np.max(np.abs(np.linalg.eigvals(W))))
    return radius


def _power_iteration(W, tol, max_iter):
    n = W.shape[0]
    v = np.random.Generator(np.random.Philox(0)).standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = W @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return None
        mu = float(v @ w)
        if np.linalg.norm(w - mu * v) <= tol * max(abs(mu), 1e-300):
            return abs(mu)
        v = w / norm
    return None


def build_dense_random(config: EsnConfig, rng: Optional[np.random.Generator] = None) -> Esn:
    """Random dense reservoir rescaled to the configured spectral radius."""
    if config.topology is not Topology.DENSE_RANDOM:
        raise ConfigError("build_dense_random needs the dense topology")
    rng = make_rng(config.seed) if rng is None else rng
    N, K = config.reservoir_size, config.input_dim
    V = _open_uniform(rng, (N, K))
    for _ in range(_MAX_RESAMPLES):
        W = _open_uniform(rng, (N, N))
        radius = spectral_radius(W)
        if radius >= _MIN_RADIUS:
            W *= config.spectral_radius / radius
            return Esn(config, V, W)
    raise NumericalError(
        f"sampled W had spectral radius below {_MIN_RADIUS} in {_MAX_RESAMPLES} draws"
    )


def cycle_matrix(n: int, r: float) -> np.ndarray:
    """``r`` times the cyclic shift: ones on the subdiagonal and top-right corner."""
    W = np.zeros((n, n))
    W[np.arange(1, n), np.arange(n - 1)] = r
    W[0, n - 1] = r
    return W


def build_cycle(config: EsnConfig, rng: Optional[np.random.Generator] = None) -> Esn:
    if config.topology is not Topology.SIMPLE_CYCLE:
        raise ConfigError("build_cycle needs the simple-cycle topology")
    rng = make_rng(config.seed) if rng is None else rng
    N, K = config.reservoir_size, config.input_dim
    V = _open_uniform(rng, (N, K))
    return Esn(config, V, cycle_matrix(N, config.cycle_weight))


def build_esn(config: EsnConfig, rng: Optional[np.random.Generator] = None) -> Esn:
    """Dispatch on ``config.topology``; uses ``config.seed`` when no stream is given."""
    if config.topology is Topology.DENSE_RANDOM:
        return build_dense_random(config, rng)
    return build_cycle(config, rng)
