import numpy as np
import pytest

from cits.baselines import fit_var, gc1, gc2, pc_naive
from cits.core import TimeSeries
from cits.errors import CitsError, InsufficientSamplesError
from cits.evaluation import Confusion, confusion, metrics
from cits.simgen import SimModel, ground_truth, simulate


def _var(coefs, n, seed, noise=1.0):
    """Simulate a VAR(tau) where coefs[j-1][u, v] is the lag-j effect of u on v."""
    rng = np.random.default_rng(seed)
    coefs = [np.asarray(c, float) for c in coefs]
    p, tau = coefs[0].shape[0], len(coefs)
    X = np.zeros((n + 200, p))
    for t in range(tau, n + 200):
        X[t] = sum(X[t - j - 1] @ coefs[j] for j in range(tau)) + noise * rng.normal(size=p)
    return TimeSeries(X[200:].T)


def _chain_phi(p=3, w=1.0):
    phi = np.zeros((p, p))
    for u in range(p - 1):
        phi[u, u + 1] = w
    return phi


class TestGc2:
    def test_single_edge(self):
        phi = np.zeros((3, 3))
        phi[0, 2] = 2.0
        hits = sum(gc2(_var([phi], 1000, s), 1, 0.01).edges == {(1, 3)} for s in range(10))
        assert hits >= 8

    def test_white_noise_mostly_empty(self):
        empty = sum(not gc2(_var([np.zeros((3, 3))], 500, s), 1, 0.05).edges for s in range(40))
        # (1 - 0.05)^9 = 0.63 of panels are empty in expectation
        assert 0.4 * 40 <= empty <= 0.85 * 40

    def test_exact_support_strong_var2(self):
        # acyclic lag structure keeps the process stable despite |phi| >= 1
        phi1 = np.zeros((3, 3))
        phi2 = np.zeros((3, 3))
        phi1[0, 1] = 1.5
        phi2[1, 2] = -1.0
        phi1[0, 2] = 1.0
        truth = {(1, 2), (2, 3), (1, 3)}
        hits = sum(gc2(_var([phi1, phi2], 2000, s), 2, 0.01).edges == truth for s in range(20))
        assert hits >= 19

    def test_fit_var_recovers_coefficients(self):
        phi = _chain_phi(3, 0.6)
        model = fit_var(_var([phi], 5000, 0), 1)
        np.testing.assert_allclose(model.coefficients[:, :, 0], phi, atol=0.05)
        assert model.residual_variances == pytest.approx([1, 1, 1], abs=0.1)

    def test_lg1(self):
        truth = ground_truth("linear-gaussian-1")
        total = Confusion()
        for s in range(10):
            total = total + confusion(gc2(simulate(SimModel("linear-gaussian-1", 1.0, 1000, s)), 1, 0.05), truth)
        m = metrics(total)
        assert m["tpr"] >= 95 and m["ifpr"] >= 90

    def test_validation(self):
        ts = _var([np.zeros((2, 2))], 100, 0)
        with pytest.raises(CitsError):
            gc2(ts, 0)
        with pytest.raises(CitsError):
            gc2(ts, 1, alpha=0)
        with pytest.raises(InsufficientSamplesError):
            gc2(TimeSeries(np.random.default_rng(0).normal(size=(3, 12))), 1)


class TestGc1:
    def test_chain(self):
        for s in range(5):
            edges = gc1(_var([_chain_phi(3, 0.8)], 1000, s), 1, 0.05).edges
            assert {(1, 2), (2, 3)} <= edges

    def test_no_self_loops(self):
        for kind in ("linear-gaussian-1", "ctrnn"):
            edges = gc1(simulate(SimModel(kind, 1.0, 500, 0)), 1, 0.05).edges
            assert all(u != v for u, v in edges)

    def test_null_rate(self):
        false = sum(len(gc1(_var([np.zeros((3, 3))], 400, s), 1, 0.05).edges) for s in range(30))
        assert false / (30 * 6) <= 0.1


class TestPc:
    def test_independent_channels(self):
        rng = np.random.default_rng(0)
        edges = sum(len(pc_naive(TimeSeries(rng.normal(size=(2, 300))), 0.05).edges) for _ in range(40))
        assert edges / 2 / 40 <= 0.1

    def test_correlated_channels(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=300)
        g = pc_naive(TimeSeries(np.vstack([x, x + 0.05 * rng.normal(size=300)])), 0.05)
        assert g.edges == {(1, 2), (2, 1)}

    def test_symmetric_and_loop_free(self):
        g = pc_naive(simulate(SimModel("linear-gaussian-2", 1.0, 1000, 0)), 0.05)
        assert all((v, u) in g.edges and u != v for u, v in g.edges)

    def test_order_independent(self):
        ts = simulate(SimModel("nonlinear-nongaussian-2", 1.0, 600, 2))
        order = [3, 1, 0, 2]
        g = pc_naive(ts, 0.05)
        h = pc_naive(ts.select(order), 0.05)
        mapped = {(order[u - 1] + 1, order[v - 1] + 1) for u, v in h.edges}
        assert mapped == g.edges

    def test_deterministic(self):
        ts = simulate(SimModel("linear-gaussian-1", 1.0, 500, 3))
        assert pc_naive(ts) == pc_naive(ts) and gc1(ts) == gc1(ts) and gc2(ts) == gc2(ts)
