"""Independent reference implementations used as test oracles."""

from itertools import combinations

import numpy as np

from cits.core import UnrolledDag


def descendants(dag: UnrolledDag, node):
    out, stack = set(), [node]
    while stack:
        for ch in dag.children(stack.pop()):
            if ch not in out:
                out.add(ch)
                stack.append(ch)
    return out


def _simple_paths(adj, a, b):
    stack = [(a, [a])]
    while stack:
        node, path = stack.pop()
        for nxt in adj.get(node, ()):
            if nxt in path:
                continue
            if nxt == b:
                yield path + [b]
            else:
                stack.append((nxt, path + [nxt]))


def d_separated_brute(dag: UnrolledDag, a, b, S=()) -> bool:
    """d-separation by enumerating every simple path of the skeleton."""
    S = set(S)
    edges = set(dag.edges)
    adj = {}
    for x, y in edges:
        adj.setdefault(x, set()).add(y)
        adj.setdefault(y, set()).add(x)
    for path in _simple_paths(adj, a, b):
        active = True
        for prev, mid, nxt in zip(path, path[1:], path[2:]):
            collider = (prev, mid) in edges and (nxt, mid) in edges
            if collider:
                if mid not in S and not (descendants(dag, mid) & S):
                    active = False
                    break
            elif mid in S:
                active = False
                break
        if active:
            return False
    return True


def random_forward_dag(rng, p, tau, prob):
    """Arbitrary DAG whose edges point forward in time (any lag inside the window)."""
    nodes = [(v, t) for v in range(1, p + 1) for t in range(1, 2 * tau + 2)]
    edges = {(x, y) for x in nodes for y in nodes if x[1] < y[1] and rng.random() < prob}
    return UnrolledDag(p, tau, frozenset(edges))


def residual_partial_correlation(samples, i, j, K):
    """Correlation of the OLS residuals of columns i and j on K (with intercept)."""
    X = np.column_stack([np.ones(len(samples))] + [samples[:, k] for k in K])

    def resid(col):
        y = samples[:, col]
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        return y - X @ beta

    return float(np.corrcoef(resid(i), resid(j))[0, 1])


def all_subsets(pool, top):
    for k in range(top + 1):
        yield from combinations(pool, k)
