"""Parallel and series compositions of reservoirs.

A parallel network drives ``L`` independent reservoirs with the same input
and averages their outputs with uniform weights. A series network feeds each
stage's output sequence to the next stage; every stage is fitted against the
system target.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import ConfigError, DataError, EsnError
from .reservoir import Esn, EsnConfig, as_sequence, build_esn, derive_seed
from .training import TrainResult, train_esn


def member_configs(config: EsnConfig, n: int, same_seeds: bool = False) -> List[EsnConfig]:
    """Configs for ``n`` members; member ``i`` gets ``derive_seed(config.seed, i)``.

    With ``same_seeds`` every member gets member 0's seed, so all members of
    one topology are identical.
    """
    if n < 1:
        raise ConfigError(f"need at least one member, got {n}")
    return [
        config.with_(seed=derive_seed(config.seed, 0 if same_seeds else i))
        for i in range(n)
    ]


def _tagged(err: EsnError, what: str) -> EsnError:
    out = type(err)(f"{what}: {err}")
    out.__cause__ = err
    return out


@dataclass
class ParallelEsn:
    members: List[Esn]

    def __post_init__(self):
        if not self.members:
            raise ConfigError("parallel network needs at least one member")
        dims = {(m.config.input_dim, m.config.output_dim) for m in self.members}
        if len(dims) != 1:
            raise ConfigError(f"members disagree on (input_dim, output_dim): {sorted(dims)}")

    @classmethod
    def build(cls, config: EsnConfig, n: int, same_seeds: bool = False) -> "ParallelEsn":
        return cls([build_esn(c) for c in member_configs(config, n, same_seeds)])

    @property
    def L(self) -> int:
        return len(self.members)

    @property
    def trained(self) -> bool:
        return all(m.trained for m in self.members)


@dataclass
class SeriesEsn:
    stages: List[Esn]

    def __post_init__(self):
        if not self.stages:
            raise ConfigError("series network needs at least one stage")
        M = self.stages[0].config.output_dim
        for i, st in enumerate(self.stages):
            if st.config.output_dim != M:
                raise ConfigError(f"stage {i} output_dim {st.config.output_dim} != {M}")
            if i > 0 and st.config.input_dim != M:
                raise ConfigError(
                    f"stage {i} input_dim {st.config.input_dim} must equal output_dim {M}"
                )

    @classmethod
    def build(cls, config: EsnConfig, n: int, same_seeds: bool = False) -> "SeriesEsn":
        cfgs = member_configs(config, n, same_seeds)
        cfgs = [cfgs[0]] + [c.with_(input_dim=c.output_dim) for c in cfgs[1:]]
        return cls([build_esn(c) for c in cfgs])

    @property
    def L(self) -> int:
        return len(self.stages)

    @property
    def trained(self) -> bool:
        return all(s.trained for s in self.stages)


def parallel_train(
    p: ParallelEsn, inputs, targets, washout: int, jobs: Optional[int] = None
) -> List[TrainResult]:
    """Fit every member on the same data; members are independent.

    ``jobs > 1`` trains members on a thread pool (the kernels release the GIL).
    """

    def fit(i):
        try:
            return train_esn(p.members[i], inputs, targets, washout)
        except EsnError as err:
            raise _tagged(err, f"parallel member {i}") from err

    idx = range(p.L)
    if jobs is None or jobs <= 1:
        return [fit(i) for i in idx]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fit, idx))


def parallel_outputs(p: ParallelEsn, inputs) -> List[np.ndarray]:
    """Per-member output sequences, each driven from the zero state."""
    out = []
    for i, m in enumerate(p.members):
        try:
            out.append(m.predict(inputs))
        except EsnError as err:
            raise _tagged(err, f"parallel member {i}") from err
    return out


def parallel_predict(p: ParallelEsn, inputs) -> np.ndarray:
    """Uniform mean of the member outputs, reduced in member order."""
    outs = parallel_outputs(p, inputs)
    total = outs[0].copy()
    for o in outs[1:]:
        total += o
    return total / p.L


def series_train(
    s: SeriesEsn,
    inputs,
    targets,
    stage_washout: int,
    handoff: str = "prediction",
) -> List[TrainResult]:
    """Train the stages in order.

    Stage ``l`` (1-based) excludes its first ``l * stage_washout`` rows from
    the fit: the transient of every upstream stage is still present in its
    input. With ``handoff="prediction"`` the next stage consumes this stage's
    fitted output over the whole training window; ``handoff="target"`` feeds
    the ground-truth target instead.
    """
    if handoff not in ("prediction", "target"):
        raise ConfigError(f"handoff must be 'prediction' or 'target', got {handoff!r}")
    first = s.stages[0].config
    inputs = as_sequence(inputs, first.input_dim)
    targets = as_sequence(targets, first.output_dim)
    T = inputs.shape[0]
    if T <= s.L * stage_washout:
        raise DataError(
            f"sequence of length {T} is too short for {s.L} stages with washout "
            f"{stage_washout} each (needs more than {s.L * stage_washout})"
        )
    results = []
    feed = inputs
    for l, stage in enumerate(s.stages, start=1):
        try:
            res = train_esn(stage, feed, targets, l * stage_washout)
        except EsnError as err:
            raise _tagged(err, f"series stage {l - 1}") from err
        results.append(res)
        feed = res.outputs if handoff == "prediction" else targets
    return results


def series_predict(s: SeriesEsn, inputs) -> np.ndarray:
    feed = inputs
    for i, stage in enumerate(s.stages):
        try:
            feed = stage.predict(feed)
        except EsnError as err:
            raise _tagged(err, f"series stage {i}") from err
    return feed
