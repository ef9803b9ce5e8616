"""Comparator methods: pairwise and multivariate Granger causality, naive PC."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import stats

from .citest import gaussian_threshold, partial_correlation_from_cov, fisher_z
from .core import RolledGraph, TimeSeries
from .errors import CitsError, InsufficientSamplesError

logger = logging.getLogger(__name__)


class CollinearityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class VarModel:
    """Least-squares VAR fit; ``coefficients[u, v, j-1]`` is the lag-``j`` effect of ``u`` on ``v``."""

    order: int
    coefficients: np.ndarray
    intercepts: np.ndarray
    residual_variances: np.ndarray


def _lagged_design(values: np.ndarray, tau: int, components) -> np.ndarray:
    """Columns ``X_{u, t-j}`` for ``u`` in ``components`` (outer) and ``j = 1..tau`` (inner)."""
    n = values.shape[1]
    cols = [values[u, tau - j : n - j] for u in components for j in range(1, tau + 1)]
    return np.column_stack(cols) if cols else np.empty((n - tau, 0))


def _rss(X: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray, int]:
    X = np.column_stack([np.ones(len(y)), X])
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        warnings.warn("collinear regressors in Granger regression", CollinearityWarning, stacklevel=3)
    resid = y - X @ coef
    return float(resid @ resid), coef, rank


def _check(ts: TimeSeries, tau: int, alpha: float) -> None:
    if tau < 1:
        raise CitsError("tau must be a positive integer")
    if not 0 < alpha < 1:
        raise CitsError("alpha must lie in (0, 1)")
    if ts.n < ts.p * tau + 10:
        raise InsufficientSamplesError(f"series of length {ts.n} too short for a VAR({tau}) in {ts.p} variables")


def fit_var(ts: TimeSeries, tau: int) -> VarModel:
    p = ts.p
    X = _lagged_design(ts.values, tau, range(p))
    coefficients = np.zeros((p, p, tau))
    intercepts = np.zeros(p)
    variances = np.zeros(p)
    for v in range(p):
        y = ts.values[v, tau:]
        rss, coef, _ = _rss(X, y)
        intercepts[v] = coef[0]
        coefficients[:, v, :] = coef[1:].reshape(p, tau)
        variances[v] = rss / (len(y) - X.shape[1] - 1)
    return VarModel(tau, coefficients, intercepts, variances)


def gc2(ts: TimeSeries, tau: int = 1, alpha: float = 0.05) -> RolledGraph:
    """Multivariate Granger causality.

    ``u -> v`` iff the likelihood-ratio test of the full VAR(``tau``)
    equation of ``v`` against the one without the lags of ``u`` rejects at
    level ``alpha`` (chi-square with ``tau`` degrees of freedom).
    """
    _check(ts, tau, alpha)
    p = ts.p
    X = _lagged_design(ts.values, tau, range(p))
    m = ts.n - tau
    edges = set()
    for v in range(p):
        y = ts.values[v, tau:]
        rss_full, _, _ = _rss(X, y)
        for u in range(p):
            keep = [c for c in range(p * tau) if c // tau != u]
            rss_restricted, _, _ = _rss(X[:, keep], y)
            lr = m * np.log(rss_restricted / rss_full)
            if stats.chi2.sf(lr, tau) < alpha:
                edges.add((u + 1, v + 1))
    return RolledGraph(p, frozenset(edges))


def gc1(ts: TimeSeries, tau: int = 1, alpha: float = 0.05) -> RolledGraph:
    """Pairwise Granger causality.

    For each ordered pair ``u != v`` an F-test compares the AR(``tau``)
    model of ``v`` (with intercept) against the model that adds ``tau`` lags
    of ``u``.  No self-loops are produced.
    """
    _check(ts, tau, alpha)
    p = ts.p
    m = ts.n - tau
    edges = set()
    for v in range(p):
        y = ts.values[v, tau:]
        own = _lagged_design(ts.values, tau, [v])
        rss_own, _, _ = _rss(own, y)
        for u in range(p):
            if u == v:
                continue
            both = np.column_stack([own, _lagged_design(ts.values, tau, [u])])
            rss_both, _, _ = _rss(both, y)
            dof = m - 2 * tau - 1
            F = ((rss_own - rss_both) / tau) / (rss_both / dof)
            if stats.f.sf(F, tau, dof) < alpha:
                edges.add((u + 1, v + 1))
    return RolledGraph(p, frozenset(edges))


def pc_naive(ts: TimeSeries, alpha: float = 0.05, max_conditioning_size: int | None = None) -> RolledGraph:
    """PC skeleton on time points treated as i.i.d. draws of ``X_t``.

    Adjacent pairs are tested with the Gaussian partial-correlation test on
    subsets of the current neighbours, by increasing size.  Removals are
    applied after each size level, so the result does not depend on the
    order of variables.  The undirected skeleton is returned with both
    orientations of every edge.
    """
    if not 0 < alpha < 1:
        raise CitsError("alpha must lie in (0, 1)")
    p, n = ts.p, ts.n
    if n < p + 3:
        raise InsufficientSamplesError(f"need at least {p + 3} time points, got {n}")
    cov = np.atleast_2d(np.cov(ts.values))
    adj = {v: set(range(p)) - {v} for v in range(p)}
    level = 0
    top = p - 2 if max_conditioning_size is None else min(max_conditioning_size, p - 2)
    while level <= top:
        removed = []
        for i in range(p):
            for j in sorted(adj[i]):
                if j < i:
                    continue
                neighbours = sorted(adj[i] - {j})
                others = sorted(adj[j] - {i})
                separated = False
                for pool in (neighbours, others):
                    if len(pool) < level:
                        continue
                    for K in combinations(pool, level):
                        rho = partial_correlation_from_cov(cov, i, j, K)
                        threshold = gaussian_threshold(alpha, n, level)
                        z = fisher_z(rho) if abs(rho) < 1 else np.inf
                        if abs(z) <= threshold:
                            separated = True
                            break
                    if separated:
                        break
                if separated:
                    removed.append((i, j))
        for i, j in removed:
            adj[i].discard(j)
            adj[j].discard(i)
        level += 1
    edges = {(i + 1, j + 1) for i in range(p) for j in adj[i]}
    return RolledGraph(p, frozenset(edges))
