"""NARMA experiments: single runs and seeded parameter sweeps."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .deep import (
    ParallelEsn,
    SeriesEsn,
    parallel_predict,
    parallel_train,
    series_predict,
    series_train,
)
from .errors import ConfigError, EsnError
from .metrics import nrmse
from .narma import NarmaConfig, TimeSeriesDataset, narma_generate
from .reservoir import EsnConfig, Topology, build_esn, derive_seed
from .training import train_esn

__all__ = [
    "ARCHITECTURES",
    "FIGURES",
    "PointParams",
    "PointResult",
    "SweepSpec",
    "SweepResult",
    "figure_preset",
    "nrmse",
    "run_point",
    "sweep",
]

ARCHITECTURES = ("shallow", "parallel", "series")
SWEEP_PARAMETERS = ("reservoir_size", "tau", "cycle_weight")

# Window lengths per architecture; series runs get longer windows.
DEFAULT_LENGTHS = {"shallow": 500, "parallel": 500, "series": 700}
DEFAULT_WASHOUT = 100
DEFAULT_RESERVOIRS = 3

# derive_seed index of the NARMA stream; reservoirs use indices 0..L-1.
DATA_STREAM = 0xDA7A


@dataclass(frozen=True)
class PointParams:
    """Everything that defines one NARMA run apart from the architecture and seed.

    ``train_length``/``test_length`` of ``None`` pick the per-architecture
    defaults in ``DEFAULT_LENGTHS``.
    """

    reservoir_size: int = 50
    tau: int = 5
    topology: Topology = Topology.DENSE_RANDOM
    spectral_radius: float = 0.9
    cycle_weight: float = 0.9
    n_reservoirs: int = DEFAULT_RESERVOIRS
    ridge: float = 1e-8
    washout: int = DEFAULT_WASHOUT
    train_length: Optional[int] = None
    test_length: Optional[int] = None
    handoff: str = "prediction"
    same_member_seeds: bool = False

    def lengths(self, architecture: str) -> Tuple[int, int]:
        if architecture not in DEFAULT_LENGTHS:
            raise ConfigError(f"architecture must be one of {ARCHITECTURES}, got {architecture!r}")
        default = DEFAULT_LENGTHS[architecture]
        return (self.train_length or default, self.test_length or default)

    def esn_config(self, seed: int) -> EsnConfig:
        topo = Topology(self.topology)
        return EsnConfig(
            reservoir_size=self.reservoir_size,
            topology=topo,
            spectral_radius=self.spectral_radius if topo is Topology.DENSE_RANDOM else None,
            cycle_weight=self.cycle_weight if topo is Topology.SIMPLE_CYCLE else None,
            ridge=self.ridge,
            seed=seed,
        )

    def skip(self, architecture: str) -> int:
        """Rows ignored when scoring: one washout per reservoir the data passes through."""
        return self.washout * (self.n_reservoirs if architecture == "series" else 1)


@dataclass
class PointResult:
    architecture: str
    parameter: str
    value: float
    seed: int
    train_nrmse: float
    test_nrmse: float
    wall_time: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def make_dataset(architecture: str, params: PointParams, seed: int) -> TimeSeriesDataset:
    n_tr, n_te = params.lengths(architecture)
    cfg = NarmaConfig(n_tr + n_te, params.tau, derive_seed(seed, DATA_STREAM))
    s, y = narma_generate(cfg)
    return TimeSeriesDataset(s, y, n_tr, n_te, params.washout, cfg)


def fit_and_score(architecture: str, params: PointParams, seed: int, data: TimeSeriesDataset):
    """Build, train and score one model; returns ``(model, train_nrmse, test_nrmse)``.

    The test window is driven from the zero state, like the training window,
    and both are scored after ``params.skip(architecture)`` rows.
    """
    if architecture not in ARCHITECTURES:
        raise ConfigError(f"architecture must be one of {ARCHITECTURES}, got {architecture!r}")
    config = params.esn_config(seed)
    (s_tr, y_tr), (s_te, y_te) = data.train, data.test
    skip = params.skip(architecture)
    if architecture == "shallow":
        model = build_esn(config.with_(seed=derive_seed(seed, 0)))
        train_esn(model, s_tr, y_tr, params.washout)
        pred_tr, pred_te = model.predict(s_tr), model.predict(s_te)
    elif architecture == "parallel":
        model = ParallelEsn.build(config, params.n_reservoirs, params.same_member_seeds)
        parallel_train(model, s_tr, y_tr, params.washout)
        pred_tr, pred_te = parallel_predict(model, s_tr), parallel_predict(model, s_te)
    else:
        model = SeriesEsn.build(config, params.n_reservoirs, params.same_member_seeds)
        series_train(model, s_tr, y_tr, params.washout, handoff=params.handoff)
        pred_tr, pred_te = series_predict(model, s_tr), series_predict(model, s_te)
    return model, nrmse(pred_tr, y_tr, skip), nrmse(pred_te, y_te, skip)


def run_point(
    architecture: str,
    params: PointParams,
    seed: int,
    parameter: str = "",
    value: float = float("nan"),
) -> PointResult:
    """One seeded NARMA run; module errors are returned in ``error``, not raised."""
    t0 = time.perf_counter()
    try:
        data = make_dataset(architecture, params, seed)
        _, train, test = fit_and_score(architecture, params, seed, data)
        err = ""
    except EsnError as exc:
        train = test = float("nan")
        err = f"{type(exc).__name__}: {exc}"
    return PointResult(architecture, parameter, value, seed, train, test, time.perf_counter() - t0, err)


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: Tuple[float, ...]
    architectures: Tuple[str, ...] = ARCHITECTURES
    trials: int = 20
    base: PointParams = field(default_factory=PointParams)
    first_seed: int = 0

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"swept parameter must be one of {SWEEP_PARAMETERS}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        for a in self.architectures:
            if a not in ARCHITECTURES:
                raise ConfigError(f"unknown architecture {a!r}")
        if self.parameter == "cycle_weight" and Topology(self.base.topology) is not Topology.SIMPLE_CYCLE:
            raise ConfigError("sweeping the cycle weight needs the simple-cycle topology")

    def params_for(self, value) -> PointParams:
        v = int(value) if self.parameter in ("reservoir_size", "tau") else float(value)
        return replace(self.base, **{self.parameter: v})

    def jobs(self) -> List[tuple]:
        """(architecture, params, seed, parameter, value) in result order."""
        out = []
        for arch in self.architectures:
            for value in self.values:
                params = self.params_for(value)
                for t in range(self.trials):
                    out.append((arch, params, self.first_seed + t, self.parameter, float(value)))
        return out


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: List[PointResult]

    def summary(self) -> List[dict]:
        """Mean and standard deviation of the successful rows per (architecture, value)."""
        groups: Dict[tuple, List[PointResult]] = {}
        for row in self.rows:
            groups.setdefault((row.architecture, row.value), []).append(row)
        out = []
        for (arch, value), rows in groups.items():
            good = [r for r in rows if r.ok]
            test = np.array([r.test_nrmse for r in good])
            train = np.array([r.train_nrmse for r in good])
            out.append(
                {
                    "architecture": arch,
                    "parameter": self.spec.parameter,
                    "value": value,
                    "trials": len(rows),
                    "failed": len(rows) - len(good),
                    "train_mean": float(train.mean()) if good else float("nan"),
                    "test_mean": float(test.mean()) if good else float("nan"),
                    "test_std": float(test.std(ddof=1)) if len(good) > 1 else 0.0,
                }
            )
        return out

    def mean_curve(self, architecture: str) -> np.ndarray:
        return np.array(
            [s["test_mean"] for s in self.summary() if s["architecture"] == architecture]
        )

    def write_csv(self, path, timings: bool = False) -> None:
        """Per-run rows. Wall time is opt-in so the default file is reproducible."""
        cols = ["architecture", "parameter", "value", "seed", "train_nrmse", "test_nrmse"]
        if timings:
            cols.append("wall_time")
        cols.append("error")
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for row in self.rows:
                d = asdict(row)
                fh.write(",".join(_cell(d[c]) for c in cols) + "\n")

    def write_summary_csv(self, path) -> None:
        rows = self.summary()
        cols = list(rows[0].keys())
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for r in rows:
                fh.write(",".join(_cell(r[c]) for c in cols) + "\n")


def _cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    s = str(v)
    return '"' + s.replace('"', '""') + '"' if ("," in s or '"' in s) else s


def _run_job(job):
    return run_point(*job)


def sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Run every (architecture, value, seed) point; order is independent of ``jobs``."""
    work = spec.jobs()
    if jobs <= 1:
        rows = [_run_job(j) for j in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_job, work, chunksize=max(1, len(work) // (4 * jobs))))
    return SweepResult(spec, rows)


FIGURES = {
    5: ("reservoir_size", (10, 20, 30, 40, 50), {}),
    6: ("tau", (3, 5, 7, 9), {}),
    7: (
        "cycle_weight",
        (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
        {"topology": Topology.SIMPLE_CYCLE},
    ),
}


def figure_preset(figure: int, trials: int = 20, **overrides) -> SweepSpec:
    """Preset sweep by id: 5 (reservoir size), 6 (tau) or 7 (cycle weight)."""
    if figure not in FIGURES:
        raise ConfigError(f"unknown figure {figure}; choose one of {sorted(FIGURES)}")
    parameter, values, base_kw = FIGURES[figure]
    base = PointParams(**{**base_kw, **overrides})
    return SweepSpec(parameter, tuple(values), ARCHITECTURES, trials, base)
