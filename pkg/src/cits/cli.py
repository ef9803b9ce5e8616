"""``cits`` command line: simulate, infer, bench, preprocess.

Every subcommand accepts ``--config`` (a YAML file), ``--seed``, ``--jobs``
and ``--out``.  Options may come from the YAML file, either at top level
or under a key named after the subcommand; command-line flags win.  The
effective settings are written to ``run_config.json`` in the output
directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import baselines, evaluation, ingest, simgen
from .citest import CiTestConfig
from .core import SCHEMA_VERSION, TimeSeries, window
from .discovery import CitsConfig, cits_windows, edge_weights_rolled, edge_weights_unrolled
from .errors import CitsError

logger = logging.getLogger("cits")

DEFAULTS = {
    "simulate": {"model": simgen.LINEAR_GAUSSIAN_1, "eta": 1.0, "n": None, "trials": 1},
    "infer": {
        "inputs": [],
        "method": "cits",
        "tau": 1,
        "alpha": 0.05,
        "ci_kind": "partial-correlation",
        "max_conditioning_size": 3,
        "n_permutations": 200,
        "weights": False,
    },
    "bench": {
        "models": [simgen.LINEAR_GAUSSIAN_1],
        "methods": list(evaluation.METHODS),
        "etas": list(evaluation.DEFAULT_ETAS),
        "alphas": list(evaluation.DEFAULT_ALPHAS),
        "trials": 25,
        "n": None,
        "tau": 1,
        "max_conditioning_size": 3,
        "ci_kind": "auto",
        "n_permutations": 200,
        "resume": False,
    },
    "preprocess": {
        "spike_file": None,
        "bin_ms": 10.0,
        "bandwidth_ms": 16.0,
        "fwhm": False,
        "active_fraction": 0.25,
        "trial_seconds": 7.5,
    },
}
SHARED = {"seed": 0, "jobs": 1, "out": "out"}


# --------------------------------------------------------------------- io


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _atomic_via(path: Path, writer) -> None:
    """Run ``writer(tmp_path)`` then move the file into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_json(path: Path, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CitsError(f"cannot read config {path}: {exc}") from None
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise CitsError(f"{path}: config must be a mapping")
    return data


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win)."""
    file_cfg = _load_config(args.config)
    section = file_cfg.get(command, {}) if isinstance(file_cfg.get(command), dict) else {}
    known = {**SHARED, **DEFAULTS[command]}
    merged = {}
    for key, default in known.items():
        value = getattr(args, key, None)
        if value is None or value == []:
            value = section.get(key, file_cfg.get(key, default))
        merged[key] = value
    unknown = (set(file_cfg) - set(known) - set(DEFAULTS)) | (set(section) - set(known))
    if unknown:
        raise CitsError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return merged


def _echo(out: Path, command: str, cfg: dict) -> None:
    write_json(out / "run_config.json", {"schema_version": SCHEMA_VERSION, "command": command, **cfg})


# ------------------------------------------------------------- simulate


def _simulate_one(model: str, eta: float, n: int, seed: int, trial: int, out: Path) -> None:
    sim = simgen.SimModel(model, eta, n, evaluation.trial_seed(seed, model, eta, trial))
    ts = simgen.simulate(sim)
    stem = out / f"{model}_eta{eta:g}_trial{trial:03d}"
    _atomic_via(stem.with_suffix(".csv"), ts.to_csv)
    write_json(stem.with_suffix(".json"), {"schema_version": SCHEMA_VERSION, "trial": trial, **sim.metadata()})


def cmd_simulate(cfg: dict) -> int:
    out = Path(cfg["out"])
    model, eta = cfg["model"], float(cfg["eta"])
    n = cfg["n"] or (simgen.CTRNN_DEFAULT_LENGTH if model == simgen.CTRNN else 1000)
    simgen.SimModel(model, eta, int(n))  # validate before writing anything
    _echo(out, "simulate", cfg)
    jobs = [(model, eta, int(n), int(cfg["seed"]), k, out) for k in range(int(cfg["trials"]))]
    _map(_simulate_star, jobs, int(cfg["jobs"]))
    logger.info("wrote %d trials to %s", len(jobs), out)
    return 0


def _simulate_star(a):
    return _simulate_one(*a)


# ---------------------------------------------------------------- infer


def _infer_one(path: str, cfg: dict, out: Path) -> None:
    path = Path(path)
    try:
        ts = TimeSeries.from_csv(path)
    except OSError as exc:
        raise CitsError(f"{path}: {exc}") from None
    method, tau, alpha = cfg["method"], int(cfg["tau"]), float(cfg["alpha"])
    record = {"schema_version": SCHEMA_VERSION, "input": str(path), "method": method, "tau": tau, "alpha": alpha}
    stem = out / path.stem
    try:
        if method == "cits":
            ci = CiTestConfig(
                kind=cfg["ci_kind"], alpha=alpha, n_permutations=int(cfg["n_permutations"]), seed=int(cfg["seed"])
            )
            config = CitsConfig(tau=tau, max_conditioning_size=cfg["max_conditioning_size"], ci=ci)
            samples = window(ts, tau)
            result = cits_windows(samples, config)
            unrolled, rolled = result.unrolled, result.rolled
            if cfg["weights"]:
                unrolled = edge_weights_unrolled(unrolled, samples)
                rolled = edge_weights_rolled(unrolled)
            record.update(ci_calls=result.ci_calls, unrolled=unrolled.to_dict())
            lines = [json.dumps(d.to_dict()) for d in result.deleted_edges]
            atomic_write(stem.parent / f"{stem.name}_deleted.jsonl", "".join(line + "\n" for line in lines))
        elif method in ("gc1", "gc2"):
            rolled = getattr(baselines, method)(ts, tau, alpha)
        elif method == "pc":
            rolled = baselines.pc_naive(ts, alpha)
        else:
            raise CitsError(f"unknown method {method!r}")
    except CitsError as exc:
        raise CitsError(f"{path}: {exc}") from None
    record["rolled"] = rolled.to_dict()
    record["labels"] = list(ts.labels)
    write_json(stem.parent / f"{stem.name}_graph.json", record)


def cmd_infer(cfg: dict) -> int:
    if not cfg["inputs"]:
        raise CitsError("infer needs at least one input CSV")
    if cfg["method"] not in evaluation.METHODS:
        raise CitsError(f"unknown method {cfg['method']!r}")
    missing = [p for p in cfg["inputs"] if not Path(p).is_file()]
    if missing:
        raise CitsError(f"input file not found: {', '.join(missing)}")
    out = Path(cfg["out"])
    _echo(out, "infer", cfg)
    _map(_infer_star, [(p, cfg, out) for p in cfg["inputs"]], int(cfg["jobs"]))
    return 0


def _infer_star(a):
    return _infer_one(*a)


# ---------------------------------------------------------------- bench


def _cell_path(out: Path, cell) -> Path:
    model, method, eta, alpha = cell
    return out / "cells" / f"{model}__{method}__eta{eta:g}__alpha{alpha:g}.json"


def _bench_cell(grid, cell, seed, out):
    row = evaluation.run_cell(grid, *cell, seed)
    payload = {"schema_version": SCHEMA_VERSION, "row": row.as_record(), "errors": row.errors}
    write_json(_cell_path(out, cell), payload)
    return payload


def _bench_star(a):
    return _bench_cell(*a)


def cmd_bench(cfg: dict) -> int:
    grid = evaluation.ExperimentGrid(
        models=tuple(cfg["models"]),
        etas=tuple(float(e) for e in cfg["etas"]),
        alphas=tuple(float(a) for a in cfg["alphas"]),
        trials=int(cfg["trials"]),
        methods=tuple(cfg["methods"]),
        n=cfg["n"],
        tau=int(cfg["tau"]),
        max_conditioning_size=cfg["max_conditioning_size"],
        ci_kind=cfg["ci_kind"],
        n_permutations=int(cfg["n_permutations"]),
    )
    out = Path(cfg["out"])
    _echo(out, "bench", cfg)
    cells = evaluation.grid_cells(grid)
    done = {}
    if cfg["resume"]:
        for cell in cells:
            path = _cell_path(out, cell)
            if path.is_file():
                done[cell] = json.loads(path.read_text(encoding="utf-8"))
        logger.info("resuming: %d of %d cells already complete", len(done), len(cells))
    todo = [c for c in cells if c not in done]
    results = _map(_bench_star, [(grid, c, int(cfg["seed"]), out) for c in todo], int(cfg["jobs"]))
    done.update(zip(todo, results))
    rows = [done[c]["row"] for c in cells]
    _atomic_via(out / "results.csv", lambda p: evaluation.write_table(rows, p))
    status = [
        {"cell": list(c), "status": "ok" if not done[c]["errors"] else "partial", "errors": done[c]["errors"]}
        for c in cells
    ]
    write_json(out / "status.json", {"schema_version": SCHEMA_VERSION, "cells": status})
    failed = sum(1 for s in status if s["errors"])
    if failed:
        logger.error("%d of %d cells had failed trials; see status.json", failed, len(cells))
        return 1
    return 0


# ----------------------------------------------------------- preprocess


def cmd_preprocess(cfg: dict) -> int:
    if not cfg["spike_file"]:
        raise CitsError("preprocess needs a spike file")
    path = Path(cfg["spike_file"])
    if not path.is_file():
        raise CitsError(f"spike file not found: {path}")
    config = ingest.PsthConfig(
        bin_ms=float(cfg["bin_ms"]),
        smooth_bandwidth_ms=float(cfg["bandwidth_ms"]),
        active_fraction=float(cfg["active_fraction"]),
        trial_seconds=float(cfg["trial_seconds"]),
        bandwidth_is_fwhm=bool(cfg["fwhm"]),
    )
    try:
        spikes = ingest.read_spike_file(path)
    except ingest.SpikeFormatError as exc:
        raise CitsError(f"{path}: {exc}") from None
    out = Path(cfg["out"])
    _echo(out, "preprocess", cfg)
    result = ingest.preprocess(spikes, config)
    files = []
    for k, trial in enumerate(result.trials, start=1):
        target = out / f"{path.stem}_trial{k}.csv"
        _atomic_via(target, trial.to_csv)
        files.append(target.name)
    write_json(
        out / f"{path.stem}_active.json",
        {
            "schema_version": SCHEMA_VERSION,
            "active": result.active,
            "inactive": result.inactive,
            "trials": files,
            "bins_per_trial": config.trial_bins,
        },
    )
    return 0


# ----------------------------------------------------------------- main


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _csv_list(kind):
    def parse(text):
        return [kind(x) for x in text.split(",") if x.strip()]

    return parse


def _optional_int(text):
    return None if text.lower() in ("none", "all") else int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cits", description="Causal discovery in time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--config", help="YAML file with option values")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int, help="worker processes")
        p.add_argument("--out", help="output directory")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress")

    p = sub.add_parser("simulate", help="simulate benchmark series")
    shared(p)
    p.add_argument("--model", choices=simgen.MODEL_KINDS)
    p.add_argument("--eta", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("infer", help="estimate causal graphs from CSV series")
    shared(p)
    p.add_argument("inputs", nargs="*")
    p.add_argument("--method", choices=evaluation.METHODS)
    p.add_argument("--tau", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--ci-kind", dest="ci_kind", choices=("partial-correlation", "hilbert-schmidt"))
    p.add_argument("--max-conditioning-size", dest="max_conditioning_size", type=_optional_int)
    p.add_argument("--n-permutations", dest="n_permutations", type=int)
    p.add_argument("--weights", action="store_true", default=None)

    p = sub.add_parser("bench", help="run a simulation grid")
    shared(p)
    p.add_argument("--models", type=_csv_list(str))
    p.add_argument("--methods", type=_csv_list(str))
    p.add_argument("--etas", type=_csv_list(float))
    p.add_argument("--alphas", type=_csv_list(float))
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--tau", type=int)
    p.add_argument("--max-conditioning-size", dest="max_conditioning_size", type=_optional_int)
    p.add_argument("--ci-kind", dest="ci_kind", choices=("auto", "partial-correlation", "hilbert-schmidt"))
    p.add_argument("--n-permutations", dest="n_permutations", type=int)
    p.add_argument("--resume", action="store_true", default=None)

    p = sub.add_parser("preprocess", help="spike trains to per-trial smoothed PSTH CSVs")
    shared(p)
    p.add_argument("spike_file", nargs="?")
    p.add_argument("--bin-ms", dest="bin_ms", type=float)
    p.add_argument("--bandwidth-ms", dest="bandwidth_ms", type=float)
    p.add_argument("--fwhm", action="store_true", default=None, help="read the bandwidth as a FWHM")
    p.add_argument("--active-fraction", dest="active_fraction", type=float)
    p.add_argument("--trial-seconds", dest="trial_seconds", type=float)
    return parser


COMMANDS = {"simulate": cmd_simulate, "infer": cmd_infer, "bench": cmd_bench, "preprocess": cmd_preprocess}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except (CitsError, OSError, ValueError) as exc:
        print(f"cits {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
