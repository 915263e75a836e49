"""Model save/load and run manifests.

Matrices are plain CSV, one matrix row per line, 17 significant digits, no
header. Manifests are flat ``key=value`` text files; composite models list
their members as ``member.<i>.<field>`` keys.
"""

from __future__ import annotations

import datetime as _dt
import os
from dataclasses import fields
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

import numpy as np

from . import __version__
from .deep import ParallelEsn, SeriesEsn
from .errors import DataError
from .reservoir import Activation, Esn, EsnConfig, Topology

Model = Union[Esn, ParallelEsn, SeriesEsn]


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        for row in M:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def read_matrix(path) -> np.ndarray:
    try:
        rows = [
            [float(c) for c in line.split(",")]
            for line in Path(path).read_text().splitlines()
            if line.strip()
        ]
    except (OSError, ValueError) as err:
        raise DataError(f"cannot read matrix {path}: {err}") from err
    if not rows or len({len(r) for r in rows}) != 1:
        raise DataError(f"matrix file {path} is empty or ragged")
    return np.array(rows)


def write_kv(path, items: Dict[str, object]) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in items.items():
            fh.write(f"{k}={v}\n")


def read_kv(path) -> Dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from err
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise DataError(f"{path}: expected key=value, got {line!r}")
        out[key.strip()] = val.strip()
    return out


def _config_items(cfg: EsnConfig) -> Dict[str, str]:
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, (Topology, Activation)):
            v = v.value
        elif isinstance(v, float):
            v = format(v, ".17g")
        out[f.name] = "none" if v is None else str(v)
    return out


def _config_from(items: Dict[str, str]) -> EsnConfig:
    def opt_float(key):
        v = items.get(key, "none")
        return None if v == "none" else float(v)

    try:
        return EsnConfig(
            reservoir_size=int(items["reservoir_size"]),
            input_dim=int(items["input_dim"]),
            output_dim=int(items["output_dim"]),
            topology=Topology(items["topology"]),
            spectral_radius=opt_float("spectral_radius"),
            cycle_weight=opt_float("cycle_weight"),
            activation=Activation(items["activation"]),
            ridge=float(items["ridge"]),
            seed=int(items["seed"]),
        )
    except (KeyError, ValueError) as err:
        raise DataError(f"incomplete member config: {err}") from err


def _members(model: Model) -> List[Esn]:
    if isinstance(model, ParallelEsn):
        return model.members
    if isinstance(model, SeriesEsn):
        return model.stages
    return [model]


def _kind(model: Model) -> str:
    if isinstance(model, ParallelEsn):
        return "parallel"
    if isinstance(model, SeriesEsn):
        return "series"
    return "shallow"


def save_model(model: Model, directory) -> List[Path]:
    """Write ``model.txt`` plus V/W/U CSV files; returns every path written."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    members = _members(model)
    items: Dict[str, object] = {"kind": _kind(model), "members": len(members)}
    written = []
    for i, m in enumerate(members):
        for key, val in _config_items(m.config).items():
            items[f"member.{i}.{key}"] = val
        for name in ("V", "W", "U"):
            mat = getattr(m, name)
            if mat is None:
                items[f"member.{i}.{name}"] = "untrained"
                continue
            fname = f"member{i}_{name}.csv"
            write_matrix(d / fname, mat)
            written.append(d / fname)
            items[f"member.{i}.{name}"] = fname
    write_kv(d / "model.txt", items)
    return [d / "model.txt"] + written


def load_model(directory) -> Model:
    d = Path(directory)
    items = read_kv(d / "model.txt")
    try:
        kind, n = items["kind"], int(items["members"])
    except (KeyError, ValueError) as err:
        raise DataError(f"{d / 'model.txt'} lacks kind/members: {err}") from err
    members = []
    for i in range(n):
        prefix = f"member.{i}."
        sub = {k[len(prefix):]: v for k, v in items.items() if k.startswith(prefix)}
        cfg = _config_from(sub)
        mats = {}
        for name in ("V", "W", "U"):
            ref = sub.get(name, "untrained")
            mats[name] = None if ref == "untrained" else read_matrix(d / ref)
        members.append(Esn(cfg, mats["V"], mats["W"], mats["U"]))
    if kind == "parallel":
        return ParallelEsn(members)
    if kind == "series":
        return SeriesEsn(members)
    if kind != "shallow" or n != 1:
        raise DataError(f"unknown model kind {kind!r} with {n} members")
    return members[0]


class RunManifest:
    """Flat key/value record of one CLI invocation and the files it produced."""

    def __init__(self, command: str, config: Dict[str, object], seed: Optional[int] = None):
        self.command = command
        self.config = dict(config)
        self.seed = seed
        self.started = _now()
        self.outputs: List[str] = []

    def add(self, paths: Iterable) -> None:
        for p in paths:
            p = os.fspath(p)
            if p not in self.outputs:
                self.outputs.append(p)

    def items(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "command": self.command,
            "tool_version": __version__,
            "seed": "none" if self.seed is None else self.seed,
            "started": self.started,
            "finished": _now(),
        }
        for k, v in self.config.items():
            out[f"config.{k}"] = v
        for i, p in enumerate(self.outputs):
            out[f"output.{i}"] = p
        return out

    def write(self, path) -> Path:
        write_kv(path, self.items())
        return Path(path)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
