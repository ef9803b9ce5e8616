"""CITS: oracle and sample versions, plus regression edge weights.

For every candidate edge ``(u, s) -> (v, 2*tau+1)`` with ``s`` in
``tau+1..2*tau`` the procedure looks for a conditioning set that renders the
pair independent and deletes the edge as soon as one is found.  Conditioning
sets are enumerated by increasing size and, within a size, in lexicographic
node order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial
from itertools import chain, combinations
from math import comb
from typing import Callable

import numpy as np

from .citest import CiTestConfig, make_tester
from .core import Node, RolledGraph, TimeSeries, UnrolledDag, WindowedSamples, roll, window
from .errors import CitsError, InsufficientSamplesError, RankDeficientError

logger = logging.getLogger(__name__)

PAST_UNIVERSE = "past"
WINDOW_UNIVERSE = "window"


@dataclass(frozen=True)
class CitsConfig:
    """Search settings.

    ``max_conditioning_size=None`` searches every subset (exponential).
    ``universe="past"`` draws conditioning nodes from times ``1..2*tau``;
    ``"window"`` also admits the other time ``2*tau+1`` nodes.
    """

    tau: int = 1
    max_conditioning_size: int | None = 3
    ci: CiTestConfig = field(default_factory=CiTestConfig)
    search_order: str = "increasing-cardinality"
    universe: str = PAST_UNIVERSE

    def __post_init__(self):
        if self.tau < 1:
            raise CitsError("tau must be a positive integer")
        if self.max_conditioning_size is not None and self.max_conditioning_size < 0:
            raise CitsError("max_conditioning_size must be non-negative")
        if self.search_order != "increasing-cardinality":
            raise CitsError(f"unsupported search order {self.search_order!r}")
        if self.universe not in (PAST_UNIVERSE, WINDOW_UNIVERSE):
            raise CitsError(f"unknown conditioning universe {self.universe!r}")


@dataclass(frozen=True)
class DeletedEdge:
    edge: tuple[Node, Node]
    separating_set: tuple[Node, ...]
    statistic: float | None = None
    threshold: float | None = None

    def to_dict(self) -> dict:
        (u, s), (v, t) = self.edge
        return {
            "edge": [u, s, v, t],
            "separating_set": [list(n) for n in self.separating_set],
            "statistic": self.statistic,
            "threshold": self.threshold,
        }


@dataclass(frozen=True)
class CitsResult:
    unrolled: UnrolledDag
    rolled: RolledGraph
    ci_calls: int
    deleted_edges: tuple[DeletedEdge, ...]


def candidate_edges(p: int, tau: int) -> list[tuple[Node, Node]]:
    """Initial edges ``(u, s) -> (v, 2*tau+1)``, in ``(v, u, s)`` order."""
    last = 2 * tau + 1
    return [
        ((u, s), (v, last))
        for v in range(1, p + 1)
        for u in range(1, p + 1)
        for s in range(tau + 1, 2 * tau + 1)
    ]


def conditioning_universe(p: int, tau: int, a: Node, b: Node, universe: str = PAST_UNIVERSE) -> list[Node]:
    last = 2 * tau if universe == PAST_UNIVERSE else 2 * tau + 1
    return [(d, r) for d in range(1, p + 1) for r in range(1, last + 1) if (d, r) not in (a, b)]


class _Subsets:
    """Subsets of ``pool`` by increasing size, lexicographic within a size."""

    def __init__(self, pool, top):
        self.pool, self.top = pool, top

    def __iter__(self):
        return chain.from_iterable(combinations(self.pool, k) for k in range(self.top + 1))

    def total(self) -> int:
        return sum(comb(len(self.pool), k) for k in range(self.top + 1))

    def position(self, S) -> int:
        """1-based position of ``S`` in the iteration order."""
        n, k = len(self.pool), len(S)
        index = {node: i for i, node in enumerate(self.pool)}
        rank = sum(comb(n, j) for j in range(k))
        prev = -1
        for i, node in enumerate(S):
            c = index[node]
            rank += sum(comb(n - 1 - j, k - 1 - i) for j in range(prev + 1, c))
            prev = c
        return rank + 1


def _search(p, tau, separate, max_size, universe) -> CitsResult:
    """``separate(a, b, subsets)`` returns the first separating DeletedEdge or None."""
    kept = []
    deleted = []
    for a, b in candidate_edges(p, tau):
        pool = conditioning_universe(p, tau, a, b, universe)
        top = len(pool) if max_size is None else min(max_size, len(pool))
        found = separate(a, b, _Subsets(pool, top))
        if found is None:
            kept.append((a, b))
        else:
            deleted.append(found)
    dag = UnrolledDag(p, tau, frozenset(kept))
    return dag, tuple(deleted)


def cits_oracle(
    oracle: Callable[[Node, Node, tuple[Node, ...]], bool],
    p: int,
    tau: int,
    max_conditioning_size: int | None = None,
    universe: str = PAST_UNIVERSE,
) -> CitsResult:
    """Run CITS with a conditional independence oracle.

    ``oracle(a, b, S)`` returns True when ``a`` and ``b`` are independent
    given ``S``.  With a truthful oracle and an unlimited search the output
    equals the generating DAG on the edges into time ``2*tau+1``.
    """
    calls = 0

    def separate(a, b, subsets):
        nonlocal calls
        S = next(filter(partial(oracle, a, b), iter(subsets)), None)
        calls += subsets.total() if S is None else subsets.position(S)
        return None if S is None else DeletedEdge((a, b), S)

    dag, deleted = _search(p, tau, separate, max_conditioning_size, universe)
    return CitsResult(dag, roll(dag), calls, deleted)


def _column(node: Node, width: int) -> int:
    return (node[0] - 1) * width + node[1] - 1


def cits_windows(samples: WindowedSamples, config: CitsConfig) -> CitsResult:
    """CITS on already windowed samples; see :func:`cits_sample`."""
    p, tau, width = samples.p, samples.tau, samples.width
    if tau != config.tau:
        raise CitsError(f"samples windowed with tau={tau}, config has tau={config.tau}")
    pool_size = 2 * p * (2 * tau + 1 if config.universe == WINDOW_UNIVERSE else 2 * tau) - 1
    k_max = pool_size if config.max_conditioning_size is None else min(config.max_conditioning_size, pool_size)
    if samples.N < k_max + 4 or samples.N < 5:
        raise InsufficientSamplesError(
            f"{samples.N} windows are too few for conditioning sets of size {k_max}"
        )
    tester = make_tester(samples.flat(), config.ci)
    calls = 0

    def separate(a, b, subsets):
        nonlocal calls
        i, j = _column(a, width), _column(b, width)
        for S in subsets:
            calls += 1
            decision = tester.test(i, j, [_column(n, width) for n in S])
            if not decision.dependent:
                return DeletedEdge((a, b), S, decision.statistic, decision.threshold)
        return None

    dag, deleted = _search(p, tau, separate, config.max_conditioning_size, config.universe)
    return CitsResult(dag, roll(dag), calls, deleted)


def cits_sample(ts: TimeSeries, config: CitsConfig) -> CitsResult:
    """Estimate the unrolled DAG and rolled graph of ``ts``.

    The series is cut into disjoint windows of length ``2*tau+1`` which are
    treated as replicates; conditional independence queries are answered by
    the test configured in ``config.ci``.
    """
    return cits_windows(window(ts, config.tau), config)


def edge_weights_unrolled(dag: UnrolledDag, samples: WindowedSamples) -> UnrolledDag:
    """Attach least-squares weights to every edge of ``dag``.

    The weight of ``(u, s) -> (v, t)`` is the coefficient of ``X_{u,s}`` in
    the regression (with intercept) of ``X_{v,t}`` on all its parents.
    """
    if (samples.p, samples.tau) != (dag.p, dag.tau):
        raise CitsError("samples and DAG disagree on p or tau")
    weights = {}
    targets = sorted({b for _, b in dag.edges})
    for b in targets:
        parents = sorted(dag.parents(b))
        if samples.N <= len(parents) + 1:
            raise InsufficientSamplesError(f"{samples.N} windows cannot fit {len(parents)} parents of {b}")
        X = np.column_stack([np.ones(samples.N), samples.matrix(parents)])
        coef, _, rank, _ = np.linalg.lstsq(X, samples.column(b), rcond=None)
        if rank < X.shape[1]:
            raise RankDeficientError(f"parents of node {b} give a rank deficient design", variable=b[0])
        for a, w in zip(parents, coef[1:]):
            weights[(a, b)] = float(w)
    return UnrolledDag(dag.p, dag.tau, dag.edges, weights)


def edge_weights_rolled(dag: UnrolledDag) -> RolledGraph:
    """Rolled graph whose edge ``u -> v`` carries the mean of its lagged weights."""
    if dag.weights is None:
        raise CitsError("unrolled DAG has no weights; run edge_weights_unrolled first")
    lagged: dict[tuple[int, int], list[float]] = {}
    for (a, b), w in dag.weights.items():
        if b[1] == dag.width and dag.tau + 1 <= a[1] <= 2 * dag.tau:
            lagged.setdefault((a[0], b[0]), []).append(w)
    weights = {edge: float(np.mean(ws)) for edge, ws in lagged.items()}
    return RolledGraph(dag.p, frozenset(weights), weights)


def edge_nature(graph: RolledGraph) -> dict[tuple[int, int], str]:
    """Label weighted edges ``"increasing"`` (positive) or ``"decreasing"`` (negative)."""
    if graph.weights is None:
        raise CitsError("graph has no weights")
    return {e: ("increasing" if w > 0 else "decreasing") for e, w in graph.weights.items()}


def weighted_cits(ts: TimeSeries, config: CitsConfig) -> tuple[CitsResult, UnrolledDag, RolledGraph]:
    """Run :func:`cits_sample` and estimate weights on the resulting DAG."""
    samples = window(ts, config.tau)
    result = cits_windows(samples, config)
    unrolled = edge_weights_unrolled(result.unrolled, samples)
    return result, unrolled, edge_weights_rolled(unrolled)
