"""Acceptance criteria 1-10, each reported as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines appear at
the end of the session.  Criterion 4 runs the kernel test and takes several
minutes on one core.
"""

import math
import statistics
import time

import numpy as np
import pytest

from cits import evaluation
from cits.citest import HILBERT_SCHMIDT, CiTestConfig, fisher_z, gaussian_ci_test, partial_correlation
from cits.core import TimeSeries, UnrolledDag, d_separated, dsep_oracle, random_lags, roll, window
from cits.discovery import CitsConfig, cits_oracle, cits_sample, edge_weights_rolled, edge_weights_unrolled
from cits.ingest import PsthConfig, SpikeData, bin_psth, segment_trials, select_active, smoothing_kernel
from cits.simgen import SimModel, ground_truth, simulate
from oracles import d_separated_brute, random_forward_dag, residual_partial_correlation

BASE_SEED = 0


def _grid(model, methods, trials=25, **kw):
    return evaluation.ExperimentGrid(
        models=(model,), etas=(1.0,), alphas=(0.05,), trials=trials, methods=methods, **kw
    )


def _rows(grid):
    return {row.method: row for row in evaluation.run_grid(grid, base_seed=BASE_SEED)}


def test_criterion_01_oracle_exactness(report):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    exact = 0
    for _ in range(200):
        p, tau = int(rng.choice([3, 4, 5])), int(rng.choice([1, 2]))
        truth = UnrolledDag.from_lags(p, tau, random_lags(p, tau, 0.3, rng))
        # Non-adjacent pairs are separated by the target's parent set, and
        # adjacent pairs by nothing, so searching up to the largest in-degree
        # returns exactly what the unbounded search returns.
        bound = max(len(truth.parents((v, 2 * tau + 1))) for v in range(1, p + 1))
        result = cits_oracle(dsep_oracle(truth, validate=False), p, tau, max_conditioning_size=bound)
        exact += result.unrolled == truth.target_slice() and result.rolled == roll(truth)
    elapsed = time.perf_counter() - start
    ok = report(1, {"200/200 exact": exact == 200, "runtime < 60 s": elapsed < 60},
                f"{exact}/200 exact in {elapsed:.1f} s")
    assert ok


def test_criterion_02_linear_gaussian_1(report):
    start = time.perf_counter()
    rows = _rows(_grid("linear-gaussian-1", ("cits", "gc1")))
    elapsed = time.perf_counter() - start
    c, g = rows["cits"], rows["gc1"]
    checks = {
        "CITS CS >= 90": c.cs >= 90,
        "CITS TPR >= 95": c.tpr >= 95,
        "GC1 TPR in [20, 50]": 20 <= g.tpr <= 50,
        "GC1 IFPR >= 98": g.ifpr >= 98,
        "runtime < 5 min": elapsed < 300,
    }
    ok = report(2, checks, f"CITS tpr={c.tpr:.1f} ifpr={c.ifpr:.1f} cs={c.cs:.1f}; "
                           f"GC1 tpr={g.tpr:.1f} ifpr={g.ifpr:.1f}; {elapsed:.1f} s")
    assert ok


def test_criterion_03_common_cause(report):
    rows = _rows(_grid("linear-gaussian-2", ("cits", "gc2")))
    c, g = rows["cits"], rows["gc2"]
    checks = {"CITS CS >= 90": c.cs >= 90, "GC2 CS <= 70": g.cs <= 70, "gap >= 20": c.cs - g.cs >= 20}
    ok = report(3, checks, f"CITS cs={c.cs:.1f}; GC2 cs={g.cs:.1f} (tpr={g.tpr:.1f} ifpr={g.ifpr:.1f})")
    assert ok


@pytest.mark.slow
def test_criterion_04_nonlinear_nongaussian(report):
    # 19 permutations is the smallest exact Monte Carlo test at level 0.05
    start = time.perf_counter()
    checks, parts = {}, []
    for model in ("nonlinear-nongaussian-1", "nonlinear-nongaussian-2"):
        grid = _grid(model, ("cits",), trials=10, ci_kind=HILBERT_SCHMIDT, n_permutations=19)
        row = evaluation.run_grid(grid, base_seed=BASE_SEED)[0]
        checks[f"{model} TPR >= 90"] = row.tpr >= 90
        checks[f"{model} IFPR >= 90"] = row.ifpr >= 90
        parts.append(f"{model} tpr={row.tpr:.1f} ifpr={row.ifpr:.1f}")
    elapsed = time.perf_counter() - start
    checks["runtime < 30 min"] = elapsed < 1800
    ok = report(4, checks, "; ".join(parts) + f"; {elapsed / 60:.1f} min")
    assert ok


def test_criterion_05_ctrnn_self_loops(report):
    grid = _grid("ctrnn", ("cits",))
    row = evaluation.run_grid(grid, base_seed=BASE_SEED)[0]
    hits = dict.fromkeys(range(1, 5), 0)
    for trial in range(25):
        seed = evaluation.trial_seed(BASE_SEED, "ctrnn", 1.0, trial)
        ts = simulate(SimModel("ctrnn", 1.0, grid.length("ctrnn"), seed))
        edges = cits_sample(ts, CitsConfig(ci=grid.ci_config("ctrnn", 0.05, seed))).rolled.edges
        for v in hits:
            hits[v] += (v, v) in edges
    checks = {f"self-loop {v} >= 60%": hits[v] >= 15 for v in hits}
    checks["CS >= 50"] = row.cs >= 50
    ok = report(5, checks, f"self-loop hits {hits} of 25; cs={row.cs:.1f}")
    assert ok


def _true_weights(kind, seed):
    lags = {(u, v, 1) for u, v in ground_truth(kind).edges}
    dag = UnrolledDag.from_lags(4, 1, lags)
    ts = simulate(SimModel(kind, 1.0, 1000, seed))
    return edge_weights_rolled(edge_weights_unrolled(dag, window(ts, 1))).weights


def test_criterion_06_edge_weights(report):
    bands = {(1, 3): (1.8, 2.2), (2, 3): (-1.2, -0.8), (3, 4): (1.8, 2.2)}
    lg = [_true_weights("linear-gaussian-1", s) for s in range(25)]
    nl = [_true_weights("nonlinear-nongaussian-1", s) for s in range(25)]
    signs = {(1, 3): 1, (2, 3): -1, (3, 4): 1}
    checks = {}
    medians = {}
    for edge, (lo, hi) in bands.items():
        medians[edge] = statistics.median(w[edge] for w in lg)
        checks[f"LG1 median {edge} in band"] = lo <= medians[edge] <= hi
    checks["LG1 signs in all seeds"] = all(np.sign(w[e]) == s for w in lg for e, s in signs.items())
    checks["NLNG1 signs in all seeds"] = all(np.sign(w[e]) == s for w in nl for e, s in signs.items())
    ok = report(6, checks, "LG1 medians " + ", ".join(f"{u}->{v}: {m:.3f}" for (u, v), m in medians.items()))
    assert ok


def _mean_hamming(config, truth):
    means = []
    for n in (250, 500, 1000, 2000):
        d = [cits_sample(simulate(SimModel("linear-gaussian-1", 1.0, n, s)), config).rolled.hamming(truth)
             for s in range(20)]
        means.append(float(np.mean(d)))
    return means


def test_criterion_07_consistency_trend(report):
    # Consistency needs a threshold fixed on the statistic; at a fixed level
    # the false-positive floor stays near alpha * (non-edges) for every n.
    truth = ground_truth("linear-gaussian-1")
    means = _mean_hamming(CitsConfig(ci=CiTestConfig(gamma=0.15)), truth)
    fixed_level = _mean_hamming(CitsConfig(), truth)
    rises = [b - a for a, b in zip(means, means[1:]) if b > a]
    ok = report(7, {"non-increasing up to one inversion <= 0.05": len(rises) <= 1 and all(r <= 0.05 for r in rises)},
                "mean Hamming (|z| > 0.15) " + ", ".join(f"{m:.2f}" for m in means)
                + "; at alpha=0.05 " + ", ".join(f"{m:.2f}" for m in fixed_level))
    assert ok


def test_criterion_08_ci_calibration(report):
    rng = np.random.default_rng(8)
    rejections = sum(gaussian_ci_test(rng.normal(size=(333, 4)), 0, 1, [2, 3]).dependent for _ in range(1000))
    rate = rejections / 1000
    grid = np.linspace(-0.999, 0.999, 1000)
    z_err = max(abs(fisher_z(r) - 0.5 * math.log((1 + r) / (1 - r))) for r in grid)
    pc_err = 0.0
    for _ in range(100):
        m = int(rng.integers(3, 8))
        x = rng.normal(size=(int(rng.integers(20, 200)), m)) @ rng.normal(size=(m, m))
        K = list(rng.choice(np.arange(2, m), size=int(rng.integers(0, m - 1)), replace=False))
        pc_err = max(pc_err, abs(partial_correlation(x, 0, 1, K) - residual_partial_correlation(x, 0, 1, K)))
    checks = {"FPR within 0.05 +- 0.03": abs(rate - 0.05) <= 0.03, "fisher_z 1e-12": z_err <= 1e-12,
              "partial correlation 1e-10": pc_err <= 1e-10}
    ok = report(8, checks, f"FPR={rate:.3f}; fisher_z err={z_err:.1e}; partial corr err={pc_err:.1e}")
    assert ok


def test_criterion_09_dseparation(report):
    rng = np.random.default_rng(9)
    shapes = [(1, 1), (1, 2), (1, 3), (2, 1)]
    queries = mismatches = 0
    for k in range(500):
        p, tau = shapes[k % 4]
        dag = random_forward_dag(rng, p, tau, float(rng.uniform(0.1, 0.6)))
        nodes = dag.nodes
        for i, a in enumerate(nodes):
            for b in nodes[i + 1:]:
                rest = [n for n in nodes if n not in (a, b)]
                for mask in range(2 ** len(rest)):
                    S = [n for j, n in enumerate(rest) if mask >> j & 1]
                    queries += 1
                    mismatches += d_separated(dag, a, b, S) != d_separated_brute(dag, a, b, S)
    ok = report(9, {"all queries agree": mismatches == 0}, f"{queries} queries, {mismatches} mismatches")
    assert ok


def test_criterion_10_ingest(report):
    rng = np.random.default_rng(10)
    trains = [np.sort(rng.uniform(0, 15.0, int(c))) for c in rng.integers(0, 3000, 6)]
    spikes = SpikeData(tuple(f"n{i}" for i in range(6)), tuple(trains), 15.0)
    psth = bin_psth(spikes)
    mass = psth.values.sum() == sum(len(t) for t in trains)
    kernel = abs(smoothing_kernel(PsthConfig().sd_ms / PsthConfig().bin_ms).sum() - 1) <= 1e-10
    boundary = np.zeros((2, 100))
    boundary[0, :25] = 1
    boundary[1, :24] = 1
    rule = select_active(TimeSeries(boundary), 0.25) == [0]
    trials = segment_trials(psth)
    lengths = len(trials) == 2 and all(t.n == 750 for t in trials)
    checks = {"mass conserved": mass, "kernel sums to 1": kernel, "25% rule inclusive": rule, "750-bin trials": lengths}
    ok = report(10, checks, f"{int(psth.values.sum())} spikes binned; {len(trials)} trials of {trials[0].n} bins")
    assert ok
