"""Time series and causal graph types, windowing, rolling and d-separation.

Nodes of an unrolled graph are ``(variable, time)`` tuples, both 1-based:
variable in ``1..p`` and time in ``1..2*tau+1``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import CitsError, InvalidNodeError, SeriesTooShortError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

Node = tuple[int, int]
UnrolledEdge = tuple[Node, Node]
RolledEdge = tuple[int, int]


@dataclass(frozen=True)
class TimeSeries:
    """A ``p x n`` real-valued multivariate series with component labels."""

    values: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise CitsError(f"values must be a non-empty p x n matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise CitsError("time series contains non-finite values")
        values.setflags(write=False)
        labels = tuple(self.labels) or tuple(f"X{v + 1}" for v in range(values.shape[0]))
        if len(labels) != values.shape[0]:
            raise CitsError(f"{len(labels)} labels given for {values.shape[0]} components")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def select(self, components: Iterable[int]) -> "TimeSeries":
        """Sub-series with the given 0-based component indices, in order."""
        idx = list(components)
        return TimeSeries(self.values[idx], tuple(self.labels[i] for i in idx))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.labels)
            for row in self.values.T:
                writer.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CitsError(f"{path}: empty CSV file") from None
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise CitsError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
                try:
                    rows.append([float(x) for x in row])
                except ValueError as exc:
                    raise CitsError(f"{path}:{lineno}: {exc}") from None
        if not rows:
            raise CitsError(f"{path}: no data rows")
        return cls(np.asarray(rows).T, tuple(header))


@dataclass(frozen=True)
class WindowedSamples:
    """``N`` non-overlapping windows of length ``2*tau+1``, shape ``N x p x (2*tau+1)``."""

    data: np.ndarray
    tau: int

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 3 or data.shape[2] != 2 * self.tau + 1:
            raise CitsError(f"expected N x p x {2 * self.tau + 1} array, got {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return 2 * self.tau + 1

    def column(self, node: Node) -> np.ndarray:
        v, t = node
        return self.data[:, v - 1, t - 1]

    def matrix(self, nodes: Iterable[Node]) -> np.ndarray:
        """Stack the samples of ``nodes`` as columns of an ``N x len(nodes)`` matrix."""
        nodes = list(nodes)
        if not nodes:
            return np.empty((self.N, 0))
        v = [a - 1 for a, _ in nodes]
        t = [b - 1 for _, b in nodes]
        return self.data[:, v, t]

    def flat(self) -> np.ndarray:
        """All nodes as columns, ordered by node index ``(v-1)*(2*tau+1) + (t-1)``."""
        return self.data.reshape(self.N, -1)

    def to_series(self) -> TimeSeries:
        """Concatenate the windows back into a series of length ``N*(2*tau+1)``."""
        return TimeSeries(np.concatenate(list(self.data), axis=1))


def window(ts: TimeSeries, tau: int) -> WindowedSamples:
    """Cut ``ts`` into ``floor(n / (2*tau+1))`` consecutive disjoint windows.

    Trailing samples that do not fill a window are dropped.
    """
    if tau < 1:
        raise CitsError(f"tau must be a positive integer, got {tau}")
    width = 2 * tau + 1
    if ts.n < width:
        raise SeriesTooShortError(f"series of length {ts.n} is shorter than one window ({width})")
    N, rest = divmod(ts.n, width)
    if rest:
        logger.info("windowing dropped %d trailing samples", rest)
    data = ts.values[:, : N * width].reshape(ts.p, N, width).transpose(1, 0, 2)
    return WindowedSamples(data, tau)


def _freeze_weights(weights):
    if weights is None:
        return None
    return MappingProxyType(dict(weights))


@dataclass(frozen=True)
class UnrolledDag:
    """DAG over ``(v, t)`` nodes, ``v`` in ``1..p``, ``t`` in ``1..2*tau+1``.

    Edges always point forward in time.  ``weights`` maps edges to regression
    coefficients once :func:`cits.discovery.edge_weights_unrolled` has run.
    """

    p: int
    tau: int
    edges: frozenset = frozenset()
    weights: Mapping | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.p < 1 or self.tau < 1:
            raise CitsError("p and tau must be positive")
        edges = frozenset((tuple(a), tuple(b)) for a, b in self.edges)
        for a, b in edges:
            self.check_node(a)
            self.check_node(b)
            if not a[1] < b[1]:
                raise CitsError(f"edge {a}->{b} does not point forward in time")
        object.__setattr__(self, "edges", edges)
        if self.weights is not None and set(self.weights) != set(edges):
            raise CitsError("weights must be given for exactly the edges of the DAG")
        object.__setattr__(self, "weights", _freeze_weights(self.weights))

    @property
    def width(self) -> int:
        return 2 * self.tau + 1

    @property
    def nodes(self) -> list[Node]:
        return [(v, t) for v in range(1, self.p + 1) for t in range(1, self.width + 1)]

    def check_node(self, node) -> None:
        v, t = node
        if not (1 <= v <= self.p and 1 <= t <= self.width):
            raise InvalidNodeError(f"node {node} outside 1..{self.p} x 1..{self.width}")

    def parents(self, node: Node) -> set[Node]:
        return {a for a, b in self.edges if b == node}

    def children(self, node: Node) -> set[Node]:
        return {b for a, b in self.edges if a == node}

    def target_slice(self) -> "UnrolledDag":
        """Only the edges into the last time point ``2*tau+1``."""
        last = self.width
        return UnrolledDag(self.p, self.tau, frozenset(e for e in self.edges if e[1][1] == last))

    @classmethod
    def from_lags(cls, p: int, tau: int, lags: Iterable[tuple[int, int, int]]) -> "UnrolledDag":
        """Time-invariant DAG on the ``2*tau+1`` window from lagged parents.

        ``lags`` holds ``(u, v, j)`` meaning ``X_{u,t-j} -> X_{v,t}`` for every
        ``t`` in the window with ``t-j >= 1``.
        """
        width = 2 * tau + 1
        edges = set()
        for u, v, j in lags:
            if not 1 <= j <= tau:
                raise CitsError(f"lag {j} outside 1..{tau}")
            for t in range(j + 1, width + 1):
                edges.add(((u, t - j), (v, t)))
        return cls(p, tau, frozenset(edges))

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "p": self.p,
            "tau": self.tau,
            "edges": sorted([a[0], a[1], b[0], b[1]] for a, b in self.edges),
        }
        if self.weights is not None:
            out["weights"] = {
                f"{a[0]},{a[1]}->{b[0]},{b[1]}": float(w) for (a, b), w in sorted(self.weights.items())
            }
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "UnrolledDag":
        edges = frozenset(((u, s), (v, t)) for u, s, v, t in d["edges"])
        weights = None
        if "weights" in d:
            weights = {}
            for key, w in d["weights"].items():
                left, right = key.split("->")
                a = tuple(int(x) for x in left.split(","))
                b = tuple(int(x) for x in right.split(","))
                weights[(a, b)] = float(w)
        return cls(int(d["p"]), int(d["tau"]), edges, weights)


@dataclass(frozen=True)
class RolledGraph:
    """Directed graph on variables ``1..p``; self-loops allowed."""

    p: int
    edges: frozenset = frozenset()
    weights: Mapping | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.p < 1:
            raise CitsError("p must be positive")
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if not (1 <= u <= self.p and 1 <= v <= self.p):
                raise InvalidNodeError(f"edge {u}->{v} outside 1..{self.p}")
        object.__setattr__(self, "edges", edges)
        if self.weights is not None and set(self.weights) != set(edges):
            raise CitsError("weights must be given for exactly the edges of the graph")
        object.__setattr__(self, "weights", _freeze_weights(self.weights))

    def adjacency(self) -> np.ndarray:
        """Boolean ``p x p`` matrix with ``A[u-1, v-1]`` set for ``u -> v``."""
        A = np.zeros((self.p, self.p), dtype=bool)
        for u, v in self.edges:
            A[u - 1, v - 1] = True
        return A

    def hamming(self, other: "RolledGraph") -> int:
        return len(self.edges ^ other.edges)

    def to_dict(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "p": self.p, "edges": sorted([u, v] for u, v in self.edges)}
        if self.weights is not None:
            out["weights"] = {f"{u}->{v}": float(w) for (u, v), w in sorted(self.weights.items())}
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "RolledGraph":
        weights = None
        if "weights" in d:
            weights = {tuple(int(x) for x in k.split("->")): float(w) for k, w in d["weights"].items()}
        return cls(int(d["p"]), frozenset((u, v) for u, v in d["edges"]), weights)


def save_graph(graph: UnrolledDag | RolledGraph, path) -> None:
    Path(path).write_text(json.dumps(graph.to_dict(), indent=2), encoding="utf-8")


def load_graph(path) -> UnrolledDag | RolledGraph:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return UnrolledDag.from_dict(d) if "tau" in d else RolledGraph.from_dict(d)


def roll(dag: UnrolledDag) -> RolledGraph:
    """Summary graph: ``u -> v`` iff some ``(u, s) -> (v, 2*tau+1)`` with ``s`` in ``tau+1..2*tau``."""
    last = dag.width
    edges = {(a[0], b[0]) for a, b in dag.edges if b[1] == last and dag.tau + 1 <= a[1] <= 2 * dag.tau}
    return RolledGraph(dag.p, frozenset(edges))


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class _Reachability:
    """Bitmask parent/child tables of a DAG for repeated d-separation queries."""

    def __init__(self, dag: UnrolledDag):
        self.dag = dag
        self.index = {node: k for k, node in enumerate(dag.nodes)}
        size = len(self.index)
        self.parent_mask = [0] * size
        self.child_mask = [0] * size
        self.adjacent: set[tuple[Node, Node]] = set()
        for x, y in dag.edges:
            i, j = self.index[x], self.index[y]
            self.child_mask[i] |= 1 << j
            self.parent_mask[j] |= 1 << i
            self.adjacent.add((x, y))
            self.adjacent.add((y, x))

    def check(self, a: Node, b: Node, S: set) -> None:
        for node in (a, b, *S):
            self.dag.check_node(node)
        if a == b:
            raise InvalidNodeError(f"query nodes must differ, got {a} twice")
        if a in S or b in S:
            raise InvalidNodeError("query nodes must not be in the conditioning set")

    def _union(self, table, mask: int) -> int:
        out = 0
        for i in _bits(mask):
            out |= table[i]
        return out

    def separated(self, a: Node, b: Node, S) -> bool:
        if (a, b) in self.adjacent:
            return False
        index, parents, children = self.index, self.parent_mask, self.child_mask
        s_mask = 0
        for node in S:
            s_mask |= 1 << index[node]
        ancestors = frontier = s_mask
        while frontier:
            frontier = self._union(parents, frontier) & ~ancestors
            ancestors |= frontier
        target = 1 << index[b]

        # Bayes ball: "up" = entered from a child, "down" = entered from a parent
        up_seen = up_new = 1 << index[a]
        down_seen = down_new = 0
        while up_new or down_new:
            if (up_seen | down_seen) & target:
                return False
            pass_up = up_new & ~s_mask
            pass_down = down_new & ~s_mask
            bounce = down_new & ancestors
            next_up = self._union(parents, pass_up | bounce)
            next_down = self._union(children, pass_up | pass_down)
            up_new = next_up & ~up_seen
            down_new = next_down & ~down_seen
            up_seen |= up_new
            down_seen |= down_new
        return not (up_seen | down_seen) & target


def d_separated(dag: UnrolledDag, a: Node, b: Node, S: Iterable[Node] = ()) -> bool:
    """True iff ``a`` and ``b`` are d-separated by ``S`` in ``dag``.

    Uses the reachability ("Bayes ball") traversal: a trail may pass a
    non-collider outside ``S`` and a collider that is an ancestor of ``S``.
    """
    S = {tuple(s) for s in S}
    a, b = tuple(a), tuple(b)
    graph = _Reachability(dag)
    graph.check(a, b, S)
    return graph.separated(a, b, S)


def dsep_oracle(dag: UnrolledDag, validate: bool = True) -> Callable[[Node, Node, Iterable[Node]], bool]:
    """Conditional-independence oracle answering from d-separation in ``dag``.

    The graph structure is indexed once; ``validate=False`` skips the node
    checks for callers that only pass nodes of ``dag``.
    """
    graph = _Reachability(dag)

    separated = graph.separated

    def oracle(a, b, S=()):
        if validate:
            graph.check(a, b, set(S))
        return separated(a, b, S)

    return oracle


def random_lags(p: int, tau: int, edge_prob: float, rng: np.random.Generator) -> set[tuple[int, int, int]]:
    """Random lagged parent structure ``{(u, v, j)}`` with independent inclusion."""
    return {
        (u, v, j)
        for u in range(1, p + 1)
        for v in range(1, p + 1)
        for j in range(1, tau + 1)
        if rng.random() < edge_prob
    }
