"""Causal discovery in stationary Markovian time series by windowed conditional independence search."""

from .baselines import fit_var, gc1, gc2, pc_naive
from .citest import (
    CiDecision,
    CiTestConfig,
    fisher_z,
    gaussian_ci_test,
    gaussian_threshold,
    hs_ci_test,
    hs_statistic,
    make_tester,
    partial_correlation,
)
from .core import (
    RolledGraph,
    TimeSeries,
    UnrolledDag,
    WindowedSamples,
    d_separated,
    dsep_oracle,
    load_graph,
    roll,
    save_graph,
    window,
)
from .discovery import (
    CitsConfig,
    CitsResult,
    cits_oracle,
    cits_sample,
    cits_windows,
    edge_nature,
    edge_weights_rolled,
    edge_weights_unrolled,
    weighted_cits,
)
from .errors import CitsError
from .evaluation import Confusion, ExperimentGrid, confusion, metrics, run_grid
from .ingest import PsthConfig, SpikeData, bin_psth, read_spike_file, segment_trials, select_active, smooth
from .simgen import SimModel, ground_truth, simulate

__version__ = "0.1.0"

__all__ = [
    "fit_var",
    "gc1",
    "gc2",
    "pc_naive",
    "CiDecision",
    "CiTestConfig",
    "fisher_z",
    "gaussian_ci_test",
    "gaussian_threshold",
    "hs_ci_test",
    "hs_statistic",
    "make_tester",
    "partial_correlation",
    "RolledGraph",
    "TimeSeries",
    "UnrolledDag",
    "WindowedSamples",
    "d_separated",
    "dsep_oracle",
    "load_graph",
    "roll",
    "save_graph",
    "window",
    "CitsConfig",
    "CitsResult",
    "cits_oracle",
    "cits_sample",
    "cits_windows",
    "edge_nature",
    "edge_weights_rolled",
    "edge_weights_unrolled",
    "weighted_cits",
    "CitsError",
    "Confusion",
    "ExperimentGrid",
    "confusion",
    "metrics",
    "run_grid",
    "PsthConfig",
    "SpikeData",
    "bin_psth",
    "read_spike_file",
    "segment_trials",
    "select_active",
    "smooth",
    "SimModel",
    "ground_truth",
    "simulate",
]
