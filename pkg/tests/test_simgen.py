import numpy as np
import pytest

from cits.errors import CitsError
from cits.simgen import (
    CTRNN_DEFAULT_LENGTH,
    MODEL_KINDS,
    SimModel,
    ground_truth,
    simulate,
)


def test_deterministic_limit_lg1():
    ts = simulate(SimModel("linear-gaussian-1", 1e-12, 50, 0))
    np.testing.assert_allclose(ts.values[2], 3.0, atol=1e-9)
    np.testing.assert_allclose(ts.values[3], 6.0, atol=1e-9)


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_seed_determinism(kind):
    a = simulate(SimModel(kind, 1.0, 300, 5))
    b = simulate(SimModel(kind, 1.0, 300, 5))
    c = simulate(SimModel(kind, 1.0, 300, 6))
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_lg1_mean():
    ts = simulate(SimModel("linear-gaussian-1", 1.0, 1000, 0))
    assert abs(ts.values[0].mean() - 1.0) < 0.1


def _batch_means_se(x, batches=20):
    """Standard error of the mean that allows for serial correlation."""
    means = x[: len(x) // batches * batches].reshape(batches, -1).mean(axis=1)
    return means.std(ddof=1) / np.sqrt(batches)


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_split_half_stationarity(kind):
    ts = simulate(SimModel(kind, 1.0, 2000, 1))
    half = ts.n // 2
    for row in ts.values:
        a, b = row[:half], row[half:]
        se = np.hypot(_batch_means_se(a), _batch_means_se(b))
        assert abs(a.mean() - b.mean()) < 5 * se


@pytest.mark.parametrize("eta", [0.1, 1.0, 3.5])
def test_ctrnn_bounded(eta):
    ts = simulate(SimModel("ctrnn", eta, 2000, 0))
    assert np.all(np.abs(ts.values) < 1e6)


def test_noise_laws():
    ts = simulate(SimModel("nonlinear-nongaussian-1", 2.0, 2000, 0))
    assert 0.0 <= ts.values[0].min() and ts.values[0].max() <= 2.0
    assert ts.values[0].mean() == pytest.approx(1.0, abs=0.1)


def test_ground_truth():
    assert len(ground_truth("linear-gaussian-1").edges) == 3
    ctrnn = ground_truth("ctrnn")
    assert len(ctrnn.edges) == 7 and {(v, v) for v in range(1, 5)} <= ctrnn.edges
    nl2 = ground_truth("nonlinear-nongaussian-2").edges
    assert {(1, 2), (1, 3)} <= nl2 and {(2, 4), (3, 4)} <= nl2 and len(nl2) == 4


def test_validation_and_metadata():
    with pytest.raises(CitsError):
        SimModel("lorenz")
    with pytest.raises(CitsError):
        SimModel("ctrnn", eta=0)
    assert SimModel("ctrnn", 1.0, CTRNN_DEFAULT_LENGTH, 3).metadata() == {
        "kind": "ctrnn", "eta": 1.0, "n": 367, "seed": 3
    }
