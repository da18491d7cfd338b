"""Command-line front end: simulate, spectrum, compare, sweep, replay.

Exit codes: 0 ok, 2 user/config error, 3 numerical failure.  Every command
writes ``manifest.json`` before any data file and marks it ``failed`` if the
run is interrupted.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.linalg import LinAlgError

from . import __version__
from .dynamics import PROFILES, default_initial_state, simulate, write_snapshot
from .fem import assemble
from .model import BeamConfig, ConfigError, config_from_dict, default_config, load_config, load_toml
from .multilayer import assemble_multilayer, multilayer_from_dict
from .spectral import SpectrumError, compare_models, compute_spectrum, decay_rate_fit

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 2, 3
GAIN_AXES = ("s1", "s3", "k1", "k2")
DEFAULT_MODES = 20


class UsageError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    n_elem: int
    params: dict
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    status: str = "running"
    duration_s: float = 0.0
    error: str | None = None

    def write(self, out: Path) -> None:
        payload = {
            "command": self.command, "config": self.config, "n_elem": self.n_elem,
            "params": self.params, "outputs": self.outputs, "version": self.version,
            "status": self.status, "duration_s": self.duration_s, "error": self.error,
        }
        (out / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- helpers

def _load(args) -> tuple[Any, dict]:
    if args.config is None:
        cfg = default_config() if not args.multilayer else None
        if cfg is None:
            raise UsageError("--multilayer needs --config")
        return cfg, cfg.to_dict()
    if args.multilayer:
        cfg = multilayer_from_dict(load_toml(args.config))
    else:
        cfg = load_config(args.config)
    return cfg, cfg.to_dict()


def _bundle(cfg, n: int):
    if isinstance(cfg, BeamConfig):
        return assemble(cfg, n)
    return assemble_multilayer(cfg, n)


def parse_axis(spec: str) -> tuple[str, list[float]]:
    """``name=start:step:stop`` (inclusive), ``name=a,b,c`` or ``name=value``."""
    if "=" not in spec:
        raise UsageError(f"grid axis {spec!r} must look like name=start:step:stop")
    name, values = (s.strip() for s in spec.split("=", 1))
    if name not in GAIN_AXES:
        raise UsageError(f"unknown grid axis {name!r}; choose from {', '.join(GAIN_AXES)}")
    try:
        if ":" in values:
            start, step, stop = (float(v) for v in values.split(":"))
            if step <= 0:
                raise UsageError(f"grid step must be positive in {spec!r}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            pts = [start + k * step for k in range(max(count, 0))]
        else:
            pts = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"cannot parse grid axis {spec!r}") from exc
    return name, pts


def parse_grid(specs: Sequence[str] | None) -> tuple[list[str], list[tuple[float, ...]]]:
    if not specs:
        raise UsageError("empty grid: pass at least one --grid axis")
    axes = []
    for spec in specs:
        for part in spec.split(";"):
            if part.strip():
                axes.append(parse_axis(part))
    names = [a for a, _ in axes]
    if len(set(names)) != len(names):
        raise UsageError("grid axes must be distinct")
    points = list(itertools.product(*(v for _, v in axes)))
    if not points:
        raise UsageError("empty grid")
    return names, points


def _mode_count(requested: int | None, ndof: int) -> int:
    return requested if requested is not None else min(DEFAULT_MODES, ndof)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------- commands

def cmd_simulate(args, cfg, out: Path, manifest: RunManifest) -> None:
    bundle = _bundle(cfg, args.n)
    if args.dump_operators:
        bundle.dump(args.dump_operators)
    trace = simulate(bundle, default_initial_state(bundle, args.profile), args.T, args.dt,
                     snapshot_every=args.snapshot_every)
    trace.write_csv(out / "energy.csv")
    manifest.outputs.append("energy.csv")
    if args.snapshot_every:
        (out / "snapshots").mkdir(exist_ok=True)
        for k, state in enumerate(trace.snapshots):
            name = f"snapshots/t{k:05d}.csv"
            write_snapshot(bundle, state, out / name)
            manifest.outputs.append(name)
    if not np.all(np.isfinite(trace.energy)):
        raise FloatingPointError("non-finite energy in trace")


def cmd_spectrum(args, cfg, out: Path, manifest: RunManifest) -> None:
    bundle = _bundle(cfg, args.n)
    if args.dump_operators:
        bundle.dump(args.dump_operators)
    rep = compute_spectrum(bundle, _mode_count(args.modes, bundle.ndof))
    rep.write_csv(out / "spectrum.csv")
    rep.write_summary(out / "summary.json")
    manifest.outputs += ["spectrum.csv", "summary.json"]


def cmd_compare(args, cfg, out: Path, manifest: RunManifest) -> None:
    if not isinstance(cfg, BeamConfig):
        raise UsageError("compare needs a 3-layer config")
    cmp = compare_models(cfg, args.n, args.modes)
    cmp.write_csv(out / "compare.csv")
    manifest.outputs.append("compare.csv")


def _sweep_point(task) -> tuple[float, float]:
    cfg_dict, gains, n, modes, T, dt, profile = task
    cfg = config_from_dict(cfg_dict).with_gains(**gains)
    bundle = assemble(cfg, n)
    abscissa = compute_spectrum(bundle, _mode_count(modes, bundle.ndof)).spectral_abscissa
    trace = simulate(bundle, default_initial_state(bundle, profile), T, dt)
    try:
        rate = decay_rate_fit(trace, (T / 2, T)).rate
    except ValueError:
        rate = float("nan")
    return abscissa, rate


def cmd_sweep(args, cfg, out: Path, manifest: RunManifest) -> None:
    if not isinstance(cfg, BeamConfig):
        raise UsageError("sweep needs a 3-layer config")
    names, points = parse_grid(args.grid)
    base = {k: getattr(cfg.gains, k) for k in GAIN_AXES}
    rows, tasks = [], []
    for p in points:
        gains = {**base, **dict(zip(names, p))}
        rows.append(gains)
        tasks.append((cfg.to_dict(), gains, args.n, args.modes, args.T, args.dt, args.profile))
    workers = max(1, int(os.environ.get("ACL_THREADS", os.cpu_count() or 1)))
    workers = min(workers, len(tasks))
    if workers == 1:
        results = [_sweep_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*GAIN_AXES, "spectral_abscissa", "decay_rate"])
        for gains, (abscissa, rate) in zip(rows, results):
            w.writerow([_fmt(gains[k]) for k in GAIN_AXES] + [_fmt(abscissa), _fmt(rate)])
    manifest.outputs.append("sweep.csv")


COMMANDS = {"simulate": cmd_simulate, "spectrum": cmd_spectrum,
            "compare": cmd_compare, "sweep": cmd_sweep}


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aclbeam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML beam description (default: reference beam)")
        p.add_argument("--n", type=int, default=40, help="number of elements")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--multilayer", action="store_true", help="read a 2m+1 layer config")
        p.add_argument("--dump-operators", metavar="DIR", help="write M, K, D as CSV")
        p.add_argument("--modes", type=int, default=None,
                       help=f"number of modes (default: min({DEFAULT_MODES}, DOFs) where used)")

    p = sub.add_parser("simulate", help="closed-loop time integration")
    common(p)
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--T", type=float, default=20.0)
    p.add_argument("--profile", choices=PROFILES, default="mixed")
    p.add_argument("--snapshot-every", type=int, default=0, metavar="STEPS")

    p = sub.add_parser("spectrum", help="closed-loop eigenvalues")
    common(p)

    p = sub.add_parser("compare", help="charge vs voltage frequencies")
    common(p)

    p = sub.add_parser("sweep", help="gain grid: abscissa and decay rate")
    common(p)
    p.add_argument("--grid", action="append", help="axis spec, e.g. s1=0:0.25:2 (repeatable)")
    p.add_argument("--dt", type=float, default=1e-2)
    p.add_argument("--T", type=float, default=20.0)
    p.add_argument("--profile", choices=PROFILES, default="bending-bump")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def _params(args) -> dict:
    skip = {"command", "config", "out", "dump_operators"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _replay_args(path: str, out: str) -> tuple[argparse.Namespace, dict]:
    data = json.loads(Path(path).read_text())
    args = argparse.Namespace(**data["params"], command=data["command"], config=None,
                              out=out, dump_operators=None)
    return args, data["config"]


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            args, cfg_dict = _replay_args(args.manifest, args.out)
            cfg = multilayer_from_dict(cfg_dict) if args.multilayer else config_from_dict(cfg_dict)
        else:
            cfg, cfg_dict = _load(args)
        if args.n < 2:
            raise UsageError("--n must be >= 2")
        if args.modes is not None and args.modes < 1:
            raise UsageError("--modes must be >= 1")
        ndof = 4 * args.n if isinstance(cfg, BeamConfig) else (cfg.m + 3) * args.n
        if args.modes is not None and args.modes > ndof:
            raise UsageError(f"--modes {args.modes} exceeds the {ndof} DOFs of the mesh")
        if args.command == "sweep":
            parse_grid(args.grid)
    except (ConfigError, UsageError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, ConfigError):
            for v in exc.violations:
                print(f"  {v}", file=sys.stderr)
        return EXIT_USER

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(args.command, cfg_dict, args.n, _params(args))
    manifest.write(out)
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            COMMANDS[args.command](args, cfg, out, manifest)
        manifest.status = "ok"
    except (UsageError, ConfigError) as exc:
        manifest.status, manifest.error, code = "failed", str(exc), EXIT_USER
    except (SpectrumError, LinAlgError, FloatingPointError, ArithmeticError) as exc:
        manifest.status, manifest.error, code = "failed", str(exc), EXIT_NUMERIC
    except ValueError as exc:
        manifest.status, manifest.error, code = "failed", str(exc), EXIT_USER
    except BaseException as exc:
        manifest.status, manifest.error = "failed", repr(exc)
        manifest.duration_s = time.perf_counter() - t0
        manifest.write(out)
        raise
    manifest.duration_s = time.perf_counter() - t0
    manifest.write(out)
    if code:
        print(f"error: {manifest.error}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
