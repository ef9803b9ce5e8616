"""Confusion counts, TPR / IFPR / combined score, and the simulation grid."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import baselines, simgen
from .citest import HILBERT_SCHMIDT, PARTIAL_CORRELATION, CiTestConfig
from .core import RolledGraph
from .discovery import CitsConfig, cits_sample
from .errors import DimensionMismatchError, UndefinedRateError

logger = logging.getLogger(__name__)

METHODS = ("cits", "gc1", "gc2", "pc")
DEFAULT_ETAS = (0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5)
DEFAULT_ALPHAS = (0.01, 0.05, 0.1)
TABLE_COLUMNS = ("model", "method", "eta", "alpha", "trials", "tp", "fp", "tn", "fn", "tpr", "ifpr", "cs", "failed")


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(estimated: RolledGraph, truth: RolledGraph) -> Confusion:
    """Counts over all ``p**2`` ordered pairs, self-loops included."""
    if estimated.p != truth.p:
        raise DimensionMismatchError(f"graphs have p={estimated.p} and p={truth.p}")
    est, true = estimated.adjacency(), truth.adjacency()
    return Confusion(
        tp=int(np.sum(est & true)),
        fp=int(np.sum(est & ~true)),
        tn=int(np.sum(~est & ~true)),
        fn=int(np.sum(~est & true)),
    )


def metrics(c: Confusion) -> dict[str, float]:
    """Percentages ``tpr``, ``ifpr`` (100 minus false-positive rate) and ``cs = tpr - fpr``."""
    if c.tp + c.fn == 0:
        raise UndefinedRateError("no true edges: TPR undefined")
    if c.fp + c.tn == 0:
        raise UndefinedRateError("no true non-edges: FPR undefined")
    tpr = 100.0 * c.tp / (c.tp + c.fn)
    ifpr = 100.0 * (1 - c.fp / (c.fp + c.tn))
    return {"tpr": tpr, "ifpr": ifpr, "cs": tpr - (100.0 - ifpr)}


@dataclass(frozen=True)
class ExperimentGrid:
    """Settings of a simulation study.

    ``n=None`` uses 1000 time points, or the default CTRNN length for the
    CTRNN.  ``ci_kind="auto"`` uses the partial-correlation test for the
    Gaussian-noise models and the kernel test otherwise.
    """

    models: tuple[str, ...] = (simgen.LINEAR_GAUSSIAN_1,)
    etas: tuple[float, ...] = DEFAULT_ETAS
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    trials: int = 25
    methods: tuple[str, ...] = METHODS
    n: int | None = None
    tau: int = 1
    max_conditioning_size: int | None = 3
    ci_kind: str = "auto"
    n_permutations: int = 200

    def __post_init__(self):
        for name in ("models", "etas", "alphas", "methods"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for m in self.models:
            if m not in simgen.MODEL_KINDS:
                raise ValueError(f"unknown model {m!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        if self.ci_kind not in ("auto", PARTIAL_CORRELATION, HILBERT_SCHMIDT):
            raise ValueError(f"unknown ci_kind {self.ci_kind!r}")

    def length(self, model: str) -> int:
        if self.n is not None:
            return self.n
        return simgen.CTRNN_DEFAULT_LENGTH if model == simgen.CTRNN else 1000

    def ci_config(self, model: str, alpha: float, seed: int = 0) -> CiTestConfig:
        kind = self.ci_kind
        if kind == "auto":
            kind = PARTIAL_CORRELATION if model in simgen.GAUSSIAN_KINDS else HILBERT_SCHMIDT
        return CiTestConfig(kind=kind, alpha=alpha, n_permutations=self.n_permutations, seed=seed)


@dataclass
class GridRow:
    model: str
    method: str
    eta: float
    alpha: float
    trials: int
    tp: int
    fp: int
    tn: int
    fn: int
    tpr: float
    ifpr: float
    cs: float
    failed: int = 0
    errors: list[str] = field(default_factory=list, repr=False)

    def as_record(self) -> dict:
        d = asdict(self)
        d.pop("errors")
        return d


def trial_seed(base_seed: int, model: str, eta: float, trial: int) -> int:
    """Seed of one simulated trial, shared by all methods and levels."""
    ss = np.random.SeedSequence([base_seed, simgen.MODEL_KINDS.index(model), int(round(eta * 1000)), trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def estimate(method: str, ts, grid: ExperimentGrid, model: str, alpha: float, seed: int = 0) -> RolledGraph:
    """Rolled graph of one method on one series."""
    if method == "cits":
        config = CitsConfig(
            tau=grid.tau,
            max_conditioning_size=grid.max_conditioning_size,
            ci=grid.ci_config(model, alpha, seed),
        )
        return cits_sample(ts, config).rolled
    if method == "gc1":
        return baselines.gc1(ts, grid.tau, alpha)
    if method == "gc2":
        return baselines.gc2(ts, grid.tau, alpha)
    return baselines.pc_naive(ts, alpha)


def run_cell(grid: ExperimentGrid, model: str, method: str, eta: float, alpha: float, base_seed: int) -> GridRow:
    """Aggregate one (model, method, eta, alpha) cell over all trials."""
    truth = simgen.ground_truth(model)
    total = Confusion()
    errors = []
    for trial in range(grid.trials):
        seed = trial_seed(base_seed, model, eta, trial)
        try:
            ts = simgen.simulate(simgen.SimModel(model, eta, grid.length(model), seed))
            total = total + confusion(estimate(method, ts, grid, model, alpha, seed), truth)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            logger.warning("%s/%s eta=%s alpha=%s trial %d failed: %s", model, method, eta, alpha, trial, exc)
            errors.append(f"trial {trial}: {type(exc).__name__}: {exc}")
    ok = grid.trials - len(errors)
    try:
        rates = metrics(total)
    except UndefinedRateError:
        rates = {"tpr": math.nan, "ifpr": math.nan, "cs": math.nan}
    return GridRow(model, method, eta, alpha, ok, total.tp, total.fp, total.tn, total.fn, failed=len(errors),
                   errors=errors, **rates)


def grid_cells(grid: ExperimentGrid) -> list[tuple[str, str, float, float]]:
    return [(m, meth, eta, a) for m in grid.models for meth in grid.methods for eta in grid.etas for a in grid.alphas]


def _run_cell_args(args):
    return run_cell(*args)


def run_grid(grid: ExperimentGrid, base_seed: int = 0, jobs: int = 1) -> list[GridRow]:
    """One row per (model, method, eta, alpha), in that nesting order.

    Trial seeds depend only on ``base_seed``, the model, ``eta`` and the
    trial index, so every method sees the same data and reruns reproduce
    the table exactly.
    """
    args = [(grid, *cell, base_seed) for cell in grid_cells(grid)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_cell_args, args))
    return [_run_cell_args(a) for a in args]


def write_table(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_record() if isinstance(row, GridRow) else row)


def read_table(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
