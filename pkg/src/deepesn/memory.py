"""Short-term memory capacity of cycle reservoirs.

Two routes to the same number. The analytical route builds the rotation
machinery of a linear simple-cycle reservoir (extension matrix of the input
weights, the geometric diagonal, and ``A = Omega' Gamma^2 Omega``) and gives
``N - 1 + r**(2N)`` for shallow and parallel networks. The empirical route
drives linear reservoirs with i.i.d. zero-mean input, fits one readout per
delay and sums the squared correlations on a held-out window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import ConfigError, DataError, NumericalError
from .reservoir import (
    Activation,
    Esn,
    EsnConfig,
    Topology,
    build_cycle,
    cycle_matrix,
    derive_seed,
    make_rng,
)
from .training import RidgeProblem, ridge_fit

SINGULAR_COND = 1e12
ARCHITECTURES = ("shallow", "parallel", "series")

# derive_seed index of the input stream; members use indices 0..L-1.
_INPUT_STREAM = 0x1_0000


def rot(v, k: int) -> np.ndarray:
    """Cyclic rotation ``k`` places to the right: ``out[i] = v[(i - k) mod N]``."""
    return np.roll(np.asarray(v, dtype=np.float64), int(k))


@dataclass
class RotationMachinery:
    v: np.ndarray
    r: float
    omega: np.ndarray
    gamma: np.ndarray
    A: np.ndarray
    cond: float

    @property
    def n(self) -> int:
        return self.v.shape[0]

    @property
    def regular(self) -> bool:
        return bool(np.isfinite(self.cond) and self.cond <= SINGULAR_COND)

    @property
    def e1(self) -> np.ndarray:
        e = np.zeros(self.n)
        e[0] = 1.0
        return e


def build_machinery(v, r: float) -> RotationMachinery:
    """Extension matrix, geometric diagonal and ``A`` for input column ``v``.

    Column ``j`` of ``omega`` (1-based) is ``rot(v[::-1], j)``, which makes
    row ``i`` equal to ``rot(v, i)``. Singularity is reported through
    ``regular`` rather than raised, so callers can resample ``v``.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size < 1:
        raise ConfigError("input column must be non-empty")
    if not 0.0 < r < 1.0:
        raise ConfigError(f"cycle weight must lie in (0, 1), got {r}")
    n = v.size
    rev = v[::-1]
    omega = np.column_stack([rot(rev, j) for j in range(1, n + 1)])
    gamma = np.diag(r ** np.arange(n))
    A = omega.T @ gamma @ gamma @ omega
    with np.errstate(divide="ignore"):
        cond = float(np.linalg.cond(omega))
    return RotationMachinery(v, float(r), omega, gamma, A, cond)


def _whitened(m: RotationMachinery, k: int) -> np.ndarray:
    # A^-1 = Omega^-1 Gamma^-2 Omega^-T, so rot_k(v)' A^-1 rot_k(v) is a
    # weighted norm of the solution of Omega' z = rot_k(v). Solving against
    # Omega avoids squaring its condition number together with Gamma's.
    if not m.regular:
        raise NumericalError(f"extension matrix is singular (cond={m.cond:.3g})")
    return scipy.linalg.solve(m.omega.T, rot(m.v, k))


def rotation_form(m: RotationMachinery, i: int, j: int) -> float:
    """Bilinear form ``rot_i(v)' A^-1 rot_j(v)``."""
    zi, zj = _whitened(m, i), _whitened(m, j)
    w = m.r ** (-2.0 * np.arange(m.n))
    return float(np.sum(zi * w * zj))


def zeta(m: RotationMachinery, k: int) -> float:
    """``rot_k(v)' A^-1 rot_k(v)``; equals ``r**(-2k)`` for k in 0..N-1."""
    return rotation_form(m, k, k)


def theoretical_mc_parallel(n: int, r: float) -> float:
    """Closed-form memory capacity ``N - 1 + r**(2N)`` of a (parallel) cycle network."""
    if n < 1:
        raise ConfigError(f"reservoir size must be >= 1, got {n}")
    if not 0.0 < r < 1.0:
        raise ConfigError(f"cycle weight must lie in (0, 1), got {r}")
    return n - 1 + r ** (2 * n)


@dataclass(frozen=True)
class McProbeConfig:
    sequence_length: int = 20_000
    input_variance: float = 1.0
    max_delay: int = 40
    washout: int = 500
    ridge: float = 1e-8

    def __post_init__(self):
        if self.max_delay < 1:
            raise ConfigError(f"max_delay must be >= 1, got {self.max_delay}")
        if self.washout < 0:
            raise ConfigError(f"washout must be >= 0, got {self.washout}")
        if not self.input_variance > 0:
            raise ConfigError(f"input variance must be > 0, got {self.input_variance}")
        if not self.ridge >= 0:
            raise ConfigError(f"ridge must be >= 0, got {self.ridge}")
        if self.sequence_length <= self.washout + self.max_delay:
            raise ConfigError(
                f"sequence_length {self.sequence_length} must exceed "
                f"washout + max_delay = {self.washout + self.max_delay}"
            )

    @classmethod
    def for_size(cls, n: int, **kw) -> "McProbeConfig":
        """Probe with the default horizon of twice the reservoir size."""
        kw.setdefault("max_delay", 2 * n)
        return cls(**kw)


@dataclass
class McReport:
    architecture: str
    reservoir_size: int
    cycle_weight: float
    n_reservoirs: int
    probe: McProbeConfig
    seed: int
    per_delay: np.ndarray
    theoretical: Optional[float] = None
    degenerate_delays: List[int] = field(default_factory=list)

    @property
    def delays(self) -> np.ndarray:
        return np.arange(1, self.per_delay.size + 1)

    @property
    def empirical(self) -> float:
        return float(np.sum(self.per_delay))

    def header(self) -> dict:
        p = self.probe
        return {
            "architecture": self.architecture,
            "reservoir_size": self.reservoir_size,
            "cycle_weight": _fmt(self.cycle_weight),
            "n_reservoirs": self.n_reservoirs,
            "sequence_length": p.sequence_length,
            "input_variance": _fmt(p.input_variance),
            "max_delay": p.max_delay,
            "washout": p.washout,
            "ridge": _fmt(p.ridge),
            "seed": self.seed,
            "empirical_C": _fmt(self.empirical),
            "theoretical_C": "absent" if self.theoretical is None else _fmt(self.theoretical),
            "degenerate_delays": " ".join(map(str, self.degenerate_delays)) or "none",
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            for key, val in self.header().items():
                fh.write(f"# {key}={val}\n")
            fh.write("k,C_k\n")
            for k, c in zip(self.delays, self.per_delay):
                fh.write(f"{k},{_fmt(c)}\n")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def squared_correlation(y, d) -> Optional[float]:
    """Squared Pearson correlation, clipped to [0, 1]; None when either side is constant."""
    y = y - y.mean()
    d = d - d.mean()
    vy, vd = float(y @ y), float(d @ d)
    if vy <= 0.0 or vd <= 0.0:
        return None
    c = float(y @ d) ** 2 / (vy * vd)
    return min(max(c, 0.0), 1.0)


def _linear_cycle(n: int, r: float, seed: int, input_dim: int = 1) -> Esn:
    cfg = EsnConfig(
        reservoir_size=n,
        input_dim=input_dim,
        topology=Topology.SIMPLE_CYCLE,
        spectral_radius=None,
        cycle_weight=r,
        activation=Activation.IDENTITY,
        seed=seed,
    )
    return build_cycle(cfg)


def _delay_targets(s: np.ndarray, rows: np.ndarray, k_max: int) -> np.ndarray:
    return np.stack([s[rows - k] for k in range(1, k_max + 1)], axis=1)


def empirical_mc(
    architecture: str,
    reservoir_size: int,
    cycle_weight: float,
    probe: McProbeConfig,
    seed: int = 0,
    n_reservoirs: int = 1,
    handoff: str = "prediction",
) -> McReport:
    """Memory capacity of a linear simple-cycle network, estimated from data.

    One input stream of ``probe.sequence_length`` samples, uniform on
    ``(-c, c)`` with ``c = sqrt(3 var)``, drives every reservoir. The usable
    rows start after the (cumulative) washout plus ``max_delay``; the first
    half of them fits the delay readouts and the second half scores them.

    Series stages are all fitted against the delayed input. ``handoff``
    selects what the next stage is trained on: the previous stage's fitted
    output (``"prediction"``) or the delayed input itself (``"target"``).
    Scoring always cascades predictions.
    """
    if handoff not in ("prediction", "target"):
        raise ConfigError(f"handoff must be 'prediction' or 'target', got {handoff!r}")
    if architecture not in ARCHITECTURES:
        raise ConfigError(f"architecture must be one of {ARCHITECTURES}, got {architecture!r}")
    L = 1 if architecture == "shallow" else int(n_reservoirs)
    if L < 1:
        raise ConfigError(f"need at least one reservoir, got {n_reservoirs}")
    n, r, k_max = int(reservoir_size), float(cycle_weight), probe.max_delay
    T = probe.sequence_length
    start = (L if architecture == "series" else 1) * probe.washout + k_max
    if T - start < 4:
        raise DataError(f"sequence_length {T} leaves too few rows after {start}")
    split = start + (T - start) // 2
    fit_rows = np.arange(start, split)
    eval_rows = np.arange(split, T)

    c = math.sqrt(3.0 * probe.input_variance)
    s = make_rng(derive_seed(seed, _INPUT_STREAM)).uniform(-c, c, size=T)
    members = [_linear_cycle(n, r, derive_seed(seed, i)) for i in range(L)]

    Y_fit = _delay_targets(s, fit_rows, k_max)
    Y_eval = _delay_targets(s, eval_rows, k_max)

    if architecture in ("shallow", "parallel"):
        out = np.zeros((eval_rows.size, k_max))
        for m in members:
            X = m.run(s).states
            U = ridge_fit(RidgeProblem(X[fit_rows], Y_fit, probe.ridge))
            out += X[eval_rows] @ U.T
        out /= L
    else:
        out = np.empty((eval_rows.size, k_max))
        for j in range(k_max):
            delayed = np.zeros(T)
            delayed[j + 1 :] = s[: T - j - 1]
            feed_fit = feed_eval = s
            for m in members:
                X = m.run(feed_fit).states
                U = ridge_fit(RidgeProblem(X[fit_rows], Y_fit[:, j], probe.ridge))
                if feed_eval is not feed_fit:
                    X = m.run(feed_eval).states
                feed_eval = (X @ U.T)[:, 0]
                feed_fit = feed_eval if handoff == "prediction" else delayed
            out[:, j] = feed_eval[eval_rows]

    per_delay = np.empty(k_max)
    degenerate = []
    for j in range(k_max):
        cj = squared_correlation(out[:, j], Y_eval[:, j])
        if cj is None:
            degenerate.append(j + 1)
            cj = 0.0
        per_delay[j] = cj

    theory = None if architecture == "series" else theoretical_mc_parallel(n, r)
    return McReport(architecture, n, r, L, probe, int(seed), per_delay, theory, degenerate)


@dataclass
class IdentityCheck:
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""


@dataclass
class VerificationReport:
    reservoir_size: int
    cycle_weight: float
    trials: int
    checks: List[IdentityCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> List[str]:
        return [
            f"{'PASS' if c.passed else 'FAIL'} {c.name}: worst={c.worst:.3e} tol={c.tolerance:.1e}"
            + (f" ({c.detail})" if c.detail else "")
            for c in self.checks
        ]


def _regular_column(n, r, rng, attempts=100) -> RotationMachinery:
    for _ in range(attempts):
        m = build_machinery(rng.uniform(-1.0, 1.0, size=n), r)
        if m.regular:
            return m
    raise NumericalError(f"no regular extension matrix in {attempts} draws (N={n}, r={r})")


def _dominant_rel_error(estimate, exact, dominance) -> float:
    scale = np.max(np.abs(exact))
    mask = np.abs(exact) >= dominance * scale
    return float(np.max(np.abs(estimate[mask] - exact[mask]) / np.abs(exact[mask])))


def monte_carlo_moments(m: RotationMachinery, length: int, variance: float, rng):
    """Sample covariance of a linear cycle reservoir and its delay cross-moments.

    Returns ``(R_hat, P_hat)`` where column ``k`` of ``P_hat`` estimates
    ``E[x(t) s(t-k)]`` for k = 0..N-1.
    """
    n, r = m.n, m.r
    burn = int(math.ceil(math.log(1e-13) / math.log(r))) + n
    c = math.sqrt(3.0 * variance)
    s = rng.uniform(-c, c, size=length + burn)
    drive = np.outer(s, m.v)
    X = _kernels.drive_reservoir(cycle_matrix(n, r), drive, np.zeros(n), True)[burn:]
    R_hat = X.T @ X / length
    P_hat = np.column_stack([X.T @ s[burn - k : burn - k + length] / length for k in range(n)])
    return R_hat, P_hat


def verify_theorem_identities(
    reservoir_size: int,
    cycle_weight: float,
    trials: int = 10,
    seed: int = 0,
    mc_length: int = 200_000,
    input_variance: float = 1.0,
    tol: float = 1e-8,
    mc_tol: float = 0.02,
    dominance: float = 0.5,
) -> VerificationReport:
    """Numerically check the rotation identities behind the closed-form capacity.

    Per trial a regular input column is drawn and four identities are checked:
    ``zeta_k r^2k = 1``; the normalized cross forms vanish; the Monte-Carlo
    state covariance matches ``var/(1 - r^2N) A``; the Monte-Carlo delay
    moments match ``var r^k rot_k(v)``. The Monte-Carlo checks compare only
    entries whose exact magnitude is at least ``dominance`` times the largest.
    Failures are collected, never raised. ``mc_length=0`` skips Monte Carlo.
    """
    n, r = int(reservoir_size), float(cycle_weight)
    if n < 1:
        raise ConfigError(f"reservoir size must be >= 1, got {n}")
    if n > 32:
        raise ConfigError(f"identity verification is limited to N <= 32, got {n}")
    if not 0.0 < r < 1.0:
        raise ConfigError(f"cycle weight must lie in (0, 1), got {r}")
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    rng = make_rng(seed)

    worst = {"zeta": 0.0, "cross": 0.0, "R": 0.0, "p": 0.0}
    for _ in range(trials):
        m = _regular_column(n, r, rng)
        zetas = np.array([zeta(m, k) for k in range(n)])
        ks = np.arange(n)
        worst["zeta"] = max(worst["zeta"], float(np.max(np.abs(zetas * r ** (2.0 * ks) - 1.0))))
        for i in range(n):
            for j in range(n):
                if i != j:
                    form = abs(rotation_form(m, i, j)) / math.sqrt(zetas[i] * zetas[j])
                    worst["cross"] = max(worst["cross"], form)
        if mc_length:
            R_hat, P_hat = monte_carlo_moments(m, mc_length, input_variance, rng)
            R = input_variance / (1.0 - r ** (2 * n)) * m.A
            P = np.column_stack([input_variance * r**k * rot(m.v, k) for k in range(n)])
            worst["R"] = max(worst["R"], _dominant_rel_error(R_hat, R, dominance))
            worst["p"] = max(worst["p"], _dominant_rel_error(P_hat, P, dominance))

    checks = [
        IdentityCheck("zeta_k * r^(2k) == 1", worst["zeta"] <= tol, worst["zeta"], tol),
        IdentityCheck(
            "cross forms vanish", worst["cross"] <= tol, worst["cross"], tol,
            "normalized by sqrt(zeta_i zeta_j)",
        ),
    ]
    if mc_length:
        detail = f"T={mc_length}, entries >= {dominance:g} x max"
        checks.append(IdentityCheck("covariance R", worst["R"] <= mc_tol, worst["R"], mc_tol, detail))
        checks.append(IdentityCheck("delay moments p_k", worst["p"] <= mc_tol, worst["p"], mc_tol, detail))
    return VerificationReport(n, r, trials, checks)
