"""Command-line entry point: ``deepesn {narma,train,mc,sweep,verify}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error or a
failed verification. Option values resolve as command-line flag, then
``--config`` file (``key=value`` lines, keys named like the long flags without
dashes), then the built-in default.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, Optional, Sequence

from . import __version__, narma
from .errors import ConfigError, DataError, EsnError
from .evaluation import (
    ARCHITECTURES,
    FIGURES,
    PointParams,
    figure_preset,
    fit_and_score,
    make_dataset,
    sweep,
)
from .memory import McProbeConfig, empirical_mc, verify_theorem_identities
from .narma import NarmaConfig, TimeSeriesDataset, narma_generate
from .persistence import RunManifest, read_kv, save_model
from .reservoir import Topology
from .svg import line_chart

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# name -> (type, default); argparse defaults stay None so precedence can be resolved.
OPTIONS = {
    "length": (int, None),
    "tau": (int, 5),
    "seed": (int, 0),
    "arch": (str, "shallow"),
    "L": (int, 3),
    "N": (int, 50),
    "topology": (str, "dense"),
    "alpha": (float, 0.9),
    "r": (float, 0.9),
    "lam": (float, 1e-8),
    "ltr": (int, None),
    "lte": (int, None),
    "lfo": (int, 100),
    "handoff": (str, "prediction"),
    "kmax": (int, None),
    "washout": (int, None),
    "variance": (float, 1.0),
    "trials": (int, None),
    "jobs": (int, 1),
    "mc_length": (int, 200_000),
}


def _resolve(args: argparse.Namespace, names: Sequence[str]) -> Dict[str, object]:
    file_cfg = read_kv(args.config) if getattr(args, "config", None) else {}
    out = {}
    for name in names:
        typ, default = OPTIONS[name]
        val = getattr(args, name, None)
        if val is None and name in file_cfg:
            try:
                val = typ(file_cfg[name])
            except ValueError as err:
                raise UsageError(f"config value {name}={file_cfg[name]!r}: {err}") from err
        out[name] = default if val is None else val
    return out


def _add(p: argparse.ArgumentParser, name: str, help: str = "", **kw):
    typ = OPTIONS[name][0]
    p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=typ, default=None, help=help, **kw)


def _unit_interval(name, v):
    if not 0.0 < v < 1.0:
        raise UsageError(f"--{name} must lie in (0, 1), got {v}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="deepesn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"deepesn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("narma", help="generate a NARMA dataset CSV")
    _add(p, "length", "number of samples")
    _add(p, "tau", "dependency length (>= 1)")
    _add(p, "seed")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--config", type=Path)

    p = sub.add_parser("train", help="train a shallow/parallel/series network on NARMA data")
    p.add_argument("--arch", choices=ARCHITECTURES, default=None)
    p.add_argument("--data", type=Path, help="dataset CSV from `deepesn narma`; generated when omitted")
    for name in ("L", "N", "alpha", "r", "lam", "ltr", "lte", "lfo", "tau", "seed"):
        _add(p, name)
    p.add_argument("--topology", choices=[t.value for t in Topology], default=None)
    p.add_argument("--handoff", choices=("prediction", "target"), default=None)
    p.add_argument("--same-member-seeds", action="store_true")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--config", type=Path)

    p = sub.add_parser("mc", help="empirical memory capacity of a linear cycle network")
    p.add_argument("--arch", choices=ARCHITECTURES, default=None)
    for name in ("N", "r", "L", "length", "kmax", "washout", "lam", "variance", "seed"):
        _add(p, name)
    p.add_argument("--handoff", choices=("prediction", "target"), default=None)
    p.add_argument("--out", type=Path, help="per-delay CSV path")
    p.add_argument("--config", type=Path)

    p = sub.add_parser("sweep", help="preset NARMA sweep: 5 (N), 6 (tau) or 7 (r)")
    p.add_argument("--figure", type=int, required=True)
    for name in ("trials", "jobs", "lam", "seed"):
        _add(p, name)
    p.add_argument("--topology", choices=[t.value for t in Topology], default=None)
    p.add_argument("--timings", action="store_true", help="also write wall times")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--config", type=Path)

    p = sub.add_parser("verify", help="numerically check the rotation identities")
    for name in ("N", "r", "trials", "seed", "mc_length", "variance"):
        _add(p, name)
    p.add_argument("--config", type=Path)
    return parser


def cmd_narma(args) -> int:
    o = _resolve(args, ["length", "tau", "seed"])
    o["length"] = o["length"] or 1200
    if o["tau"] < 1:
        raise UsageError(f"--tau must be >= 1, got {o['tau']}")
    if o["length"] <= o["tau"]:
        raise UsageError(f"--length must exceed --tau, got {o['length']}")
    cfg = NarmaConfig(o["length"], o["tau"], o["seed"])
    s, y = narma_generate(cfg)
    _parent(args.out)
    narma.write_csv(args.out, s, y, cfg)
    m = RunManifest("narma", o, o["seed"])
    m.add([args.out])
    m.write(_manifest_path(args.out))
    print(f"wrote {len(s)} rows to {args.out}")
    return EXIT_OK


def _parent(path: Path):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise DataError(f"cannot create {Path(path).parent}: {err}") from err


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.stem + ".manifest.txt")


def cmd_train(args) -> int:
    o = _resolve(args, ["arch", "L", "N", "topology", "alpha", "r", "lam", "ltr", "lte", "lfo", "tau", "seed", "handoff"])
    arch = o["arch"]
    _unit_interval("alpha", o["alpha"])
    _unit_interval("r", o["r"])
    if o["L"] < 1 or o["N"] < 1:
        raise UsageError("--L and --N must be >= 1")
    params = PointParams(
        reservoir_size=o["N"],
        tau=o["tau"],
        topology=Topology(o["topology"]),
        spectral_radius=o["alpha"],
        cycle_weight=o["r"],
        n_reservoirs=1 if arch == "shallow" else o["L"],
        ridge=o["lam"],
        washout=o["lfo"],
        train_length=o["ltr"],
        test_length=o["lte"],
        handoff=o["handoff"],
        same_member_seeds=args.same_member_seeds,
    )
    n_tr, n_te = params.lengths(arch)
    if arch == "series" and n_tr <= params.skip(arch):
        raise DataError(
            f"series training window L_tr={n_tr} must exceed L*L_fo={params.skip(arch)} (washout shortfall)"
        )
    if args.data is not None:
        s, y, cfg = narma.read_csv(args.data)
        data = TimeSeriesDataset(s, y, n_tr, n_te, params.washout, cfg)
    else:
        data = make_dataset(arch, params, o["seed"])
    model, train_err, test_err = fit_and_score(arch, params, o["seed"], data)

    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise DataError(f"cannot create {out}: {err}") from err
    files = save_model(model, out / "model")
    metrics = out / "metrics.csv"
    with open(metrics, "w", newline="") as fh:
        fh.write("architecture,train_nrmse,test_nrmse,skip\n")
        fh.write(f"{arch},{train_err:.17g},{test_err:.17g},{params.skip(arch)}\n")
    m = RunManifest("train", {**o, "data": args.data or "generated", "same_member_seeds": args.same_member_seeds}, o["seed"])
    m.add(files + [metrics])
    m.write(out / "manifest.txt")
    print(f"architecture={arch} train_nrmse={train_err:.6f} test_nrmse={test_err:.6f}")
    return EXIT_OK


def cmd_mc(args) -> int:
    o = _resolve(args, ["arch", "N", "r", "L", "length", "kmax", "washout", "lam", "variance", "seed", "handoff"])
    _unit_interval("r", o["r"])
    if o["N"] < 1 or o["L"] < 1:
        raise UsageError("--N and --L must be >= 1")
    length = o["length"] or 20_000
    kmax = o["kmax"] or 2 * o["N"]
    washout = 500 if o["washout"] is None else o["washout"]
    try:
        probe = McProbeConfig(length, o["variance"], kmax, washout, o["lam"])
    except ConfigError as err:
        raise UsageError(str(err)) from err
    rep = empirical_mc(o["arch"], o["N"], o["r"], probe, o["seed"], o["L"], o["handoff"])
    if args.out is not None:
        _parent(args.out)
        rep.write_csv(args.out)
        m = RunManifest("mc", {**o, "length": length, "kmax": kmax, "washout": washout}, o["seed"])
        m.add([args.out])
        m.write(_manifest_path(args.out))
    theory = "absent" if rep.theoretical is None else f"{rep.theoretical:.6f}"
    print(f"empirical={rep.empirical:.6f} theoretical={theory}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.figure not in FIGURES:
        raise UsageError(f"--figure must be one of {sorted(FIGURES)}, got {args.figure}")
    o = _resolve(args, ["trials", "jobs", "lam", "seed"])
    trials = o["trials"] or 20
    overrides = {"ridge": o["lam"]}
    topo = args.topology
    if topo is not None:
        if args.figure == 7 and topo != Topology.SIMPLE_CYCLE.value:
            raise UsageError("figure 7 sweeps the cycle weight and needs --topology cycle")
        overrides["topology"] = Topology(topo)
    spec = figure_preset(args.figure, trials, **overrides)
    if o["seed"]:
        spec = replace(spec, first_seed=o["seed"])
    res = sweep(spec, jobs=o["jobs"])

    out = args.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise DataError(f"cannot create {out}: {err}") from err
    results, summary = out / "results.csv", out / "summary.csv"
    res.write_csv(results)
    res.write_summary_csv(summary)
    files = [results, summary]
    if args.timings:
        res.write_csv(out / "timings.csv", timings=True)
        files.append(out / "timings.csv")

    rows = res.summary()
    x = list(spec.values)
    means = {a: [r["test_mean"] for r in rows if r["architecture"] == a] for a in spec.architectures}
    errs = None
    if trials > 1:
        errs = {a: [r["test_std"] for r in rows if r["architecture"] == a] for a in spec.architectures}
    xlabel = {"reservoir_size": "reservoir size N", "tau": "dependency length tau", "cycle_weight": "reservoir weight r"}[spec.parameter]
    svg = line_chart(x, means, errs, title=f"NARMA test NRMSE (figure {args.figure})", xlabel=xlabel, ylabel="NRMSE")
    chart = out / f"figure{args.figure}.svg"
    chart.write_text(svg)
    files.append(chart)

    m = RunManifest("sweep", {"figure": args.figure, "trials": trials, **o, "topology": spec.base.topology.value}, o["seed"])
    m.add(files)
    m.write(out / "manifest.txt")
    failed = sum(not r.ok for r in res.rows)
    for a in spec.architectures:
        print(f"{a}: " + " ".join(f"{v:g}:{mu:.4f}" for v, mu in zip(x, means[a])))
    if failed:
        print(f"{failed} point(s) failed; see {results}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    o = _resolve(args, ["N", "r", "trials", "seed", "mc_length", "variance"])
    _unit_interval("r", o["r"])
    if not 1 <= o["N"] <= 32:
        raise UsageError(f"--N must lie in 1..32, got {o['N']}")
    trials = o["trials"] or 10
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    rep = verify_theorem_identities(
        o["N"], o["r"], trials, o["seed"], mc_length=o["mc_length"], input_variance=o["variance"]
    )
    for line in rep.lines():
        print(line)
    return EXIT_OK if rep.passed else EXIT_NUMERICAL


COMMANDS = {
    "narma": cmd_narma,
    "train": cmd_train,
    "mc": cmd_mc,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(f"deepesn {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except EsnError as err:
        print(f"deepesn {args.command}: {type(err).__name__}: {err}", file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
