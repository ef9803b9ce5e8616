"""Simulated four-variable time series with known rolled graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RolledGraph, TimeSeries
from .errors import CitsError

LINEAR_GAUSSIAN_1 = "linear-gaussian-1"
LINEAR_GAUSSIAN_2 = "linear-gaussian-2"
NONLINEAR_NONGAUSSIAN_1 = "nonlinear-nongaussian-1"
NONLINEAR_NONGAUSSIAN_2 = "nonlinear-nongaussian-2"
CTRNN = "ctrnn"

MODEL_KINDS = (LINEAR_GAUSSIAN_1, LINEAR_GAUSSIAN_2, NONLINEAR_NONGAUSSIAN_1, NONLINEAR_NONGAUSSIAN_2, CTRNN)
GAUSSIAN_KINDS = (LINEAR_GAUSSIAN_1, LINEAR_GAUSSIAN_2, CTRNN)

BURN_IN = 100

# CTRNN motif: weights w[i, j] for i -> j, time constants and sampling gap
CTRNN_TIME_CONSTANT = 10.0
CTRNN_GAP = math.e
CTRNN_DURATION = 1000.0
CTRNN_DEFAULT_LENGTH = int(CTRNN_DURATION / CTRNN_GAP)
CTRNN_WEIGHTS = np.zeros((4, 4))
CTRNN_WEIGHTS[0, 2] = CTRNN_WEIGHTS[1, 2] = CTRNN_WEIGHTS[2, 3] = 10.0

_TRUTH = {
    LINEAR_GAUSSIAN_1: {(1, 3), (2, 3), (3, 4)},
    NONLINEAR_NONGAUSSIAN_1: {(1, 3), (2, 3), (3, 4)},
    LINEAR_GAUSSIAN_2: {(1, 2), (1, 3), (2, 4), (3, 4)},
    NONLINEAR_NONGAUSSIAN_2: {(1, 2), (1, 3), (2, 4), (3, 4)},
    CTRNN: {(1, 3), (2, 3), (3, 4), (1, 1), (2, 2), (3, 3), (4, 4)},
}


@dataclass(frozen=True)
class SimModel:
    kind: str
    eta: float = 1.0
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise CitsError(f"unknown model {self.kind!r}; choose from {', '.join(MODEL_KINDS)}")
        if not self.eta > 0:
            raise CitsError("eta must be positive")
        if self.n < 10:
            raise CitsError("n must be at least 10")

    def metadata(self) -> dict:
        return {"kind": self.kind, "eta": self.eta, "n": self.n, "seed": self.seed}


def ground_truth(kind: str) -> RolledGraph:
    if kind not in _TRUTH:
        raise CitsError(f"unknown model {kind!r}")
    return RolledGraph(4, frozenset(_TRUTH[kind]))


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def _step(kind: str, prev: np.ndarray, eps: np.ndarray) -> np.ndarray:
    x1, x2, x3, x4 = prev
    if kind == LINEAR_GAUSSIAN_1:
        return np.array([1 + eps[0], -1 + eps[1], 2 * x1 - x2 + eps[2], 2 * x3 + eps[3]])
    if kind == LINEAR_GAUSSIAN_2:
        return np.array([1 + eps[0], -1 + 2 * x1 + eps[1], 2 * x1 + eps[2], x2 + x3 + eps[3]])
    if kind == NONLINEAR_NONGAUSSIAN_1:
        return np.array([eps[0], eps[1], 4 * np.sin(x1) - 3 * np.sin(x2) + eps[2], 3 * x3 + eps[3]])
    if kind == NONLINEAR_NONGAUSSIAN_2:
        return np.array(
            [
                eps[0],
                4 * x1 + eps[1],
                3 * np.sin(x1) + eps[2],
                8 * np.log(np.abs(x2)) + 9 * np.log(np.abs(x3)) + eps[3],
            ]
        )
    drive = CTRNN_WEIGHTS.T @ _logistic(prev)
    return prev + (CTRNN_GAP / CTRNN_TIME_CONSTANT) * (-prev + drive + eps)


def simulate(model: SimModel) -> TimeSeries:
    """Simulate ``model`` for ``BURN_IN + n`` steps and return the last ``n``.

    Noise is N(0, eta) for the linear Gaussian models, Uniform(0, eta) for
    the non-Gaussian ones and N(1, eta) for the CTRNN, whose differential
    equation is stepped with forward differences at gap ``e``.
    """
    rng = np.random.default_rng(model.seed)
    total = BURN_IN + model.n
    if model.kind in (NONLINEAR_NONGAUSSIAN_1, NONLINEAR_NONGAUSSIAN_2):
        noise = rng.uniform(0.0, model.eta, size=(total, 4))
    elif model.kind == CTRNN:
        noise = rng.normal(1.0, model.eta, size=(total, 4))
    else:
        noise = rng.normal(0.0, model.eta, size=(total, 4))
    X = np.empty((total, 4))
    X[0] = noise[0]
    with np.errstate(divide="ignore"):
        for t in range(1, total):
            X[t] = _step(model.kind, X[t - 1], noise[t])
    return TimeSeries(X[BURN_IN:].T, ("X1", "X2", "X3", "X4"))
