"""Conditional dependence tests.

Two families are provided:

* Gaussian regime: sample partial correlation, Fisher z-transform and a
  fixed-level threshold test.
* Non-Gaussian regime: the regularized kernel Hilbert-Schmidt conditional
  dependence statistic, thresholded either at a fixed ``gamma`` or at a
  permutation quantile.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg, stats

from .errors import (
    CitsError,
    DegenerateVarianceError,
    DomainError,
    InsufficientSamplesError,
    SingularCovarianceError,
)

PARTIAL_CORRELATION = "partial-correlation"
HILBERT_SCHMIDT = "hilbert-schmidt"

_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class CiTestConfig:
    """Settings for one conditional dependence test family.

    ``alpha`` drives the Gaussian test and the permutation calibration of the
    kernel test.  Setting ``gamma`` replaces the level-based threshold by a
    fixed one on the test statistic (``|fisher_z|`` or the kernel statistic).  The kernel regularization is
    ``epsilon_scale * N ** -epsilon_exponent``.  ``bandwidth`` is
    ``"median"`` or a fixed positive kernel width (on standardized data).
    ``sided`` selects the Gaussian threshold: ``"two"`` uses the two-sided
    normal quantile, ``"one"`` uses the one-sided ``Phi^-1(1 - alpha)``.
    """

    kind: str = PARTIAL_CORRELATION
    alpha: float = 0.05
    gamma: float | None = None
    epsilon_exponent: float = 0.25
    epsilon_scale: float = 0.1
    bandwidth: str | float = "median"
    n_permutations: int = 200
    permutation: str = "local"
    neighbours: int = 5
    sided: str = "two"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (PARTIAL_CORRELATION, HILBERT_SCHMIDT):
            raise CitsError(f"unknown test kind {self.kind!r}")
        if not 0 < self.alpha < 1:
            raise CitsError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.gamma is not None and self.gamma <= 0:
            raise CitsError("gamma must be positive")
        if self.kind == HILBERT_SCHMIDT and not 0 < self.epsilon_exponent < 1 / 3:
            raise CitsError("epsilon_exponent must lie in (0, 1/3)")
        if self.epsilon_scale <= 0:
            raise CitsError("epsilon_scale must be positive")
        if self.bandwidth != "median" and not (isinstance(self.bandwidth, (int, float)) and self.bandwidth > 0):
            raise CitsError("bandwidth must be 'median' or a positive number")
        if self.n_permutations < 1:
            raise CitsError("n_permutations must be at least 1")
        if self.permutation not in ("local", "global"):
            raise CitsError("permutation must be 'local' or 'global'")
        if self.neighbours < 2:
            raise CitsError("neighbours must be at least 2")
        if self.sided not in ("two", "one"):
            raise CitsError("sided must be 'two' or 'one'")

    def epsilon(self, N: int) -> float:
        return self.epsilon_scale * N ** (-self.epsilon_exponent)


@dataclass(frozen=True)
class CiDecision:
    statistic: float
    threshold: float
    dependent: bool


# -- Gaussian regime ---------------------------------------------------------


def partial_correlation_from_cov(cov: np.ndarray, i: int, j: int, K: Sequence[int] = ()) -> float:
    """Partial correlation of ``i`` and ``j`` given ``K`` from a covariance matrix.

    Uses the Schur complement ``S11 - S12 S22^-1 S21`` of the conditioning block.
    """
    K = list(K)
    idx = [i, j]
    S11 = cov[np.ix_(idx, idx)]
    if K:
        S22 = cov[np.ix_(K, K)]
        S12 = cov[np.ix_(idx, K)]
        try:
            c, lower = linalg.cho_factor(S22, lower=True, check_finite=False)
        except linalg.LinAlgError:
            raise SingularCovarianceError(f"conditioning covariance for {K} is not positive definite") from None
        if np.min(np.diag(c)) ** 2 < _SINGULAR_TOL * np.max(np.diag(S22)):
            raise SingularCovarianceError(f"conditioning covariance for {K} is singular")
        S11 = S11 - S12 @ linalg.cho_solve((c, lower), S12.T, check_finite=False)
    scale = max(cov[i, i], cov[j, j], np.finfo(float).tiny)
    if S11[0, 0] <= _SINGULAR_TOL * scale or S11[1, 1] <= _SINGULAR_TOL * scale:
        raise DegenerateVarianceError(f"residual variance of column {i} or {j} vanishes")
    rho = S11[0, 1] / math.sqrt(S11[0, 0] * S11[1, 1])
    return float(min(1.0, max(-1.0, rho)))


def partial_correlation(samples: np.ndarray, i: int, j: int, K: Iterable[int] = ()) -> float:
    """Sample partial correlation of columns ``i`` and ``j`` given columns ``K``.

    Parameters
    ----------
    samples : ndarray, shape (N, m)
        One observation per row.
    i, j : int
        Column indices (0-based), distinct and not in ``K``.
    K : iterable of int
        Conditioning columns.
    """
    samples = np.asarray(samples, dtype=float)
    K = list(K)
    N = samples.shape[0]
    if i == j or i in K or j in K:
        raise CitsError("i and j must be distinct and outside the conditioning set")
    if N < len(K) + 3:
        raise InsufficientSamplesError(f"need at least {len(K) + 3} samples, got {N}")
    cols = [i, j] + K
    cov = np.atleast_2d(np.cov(samples[:, cols], rowvar=False))
    if cov[0, 0] <= 0 or cov[1, 1] <= 0:
        raise DegenerateVarianceError(f"column {i} or {j} is constant")
    return partial_correlation_from_cov(cov, 0, 1, range(2, len(cols)))


def fisher_z(rho):
    """Fisher z-transform ``0.5 * log((1 + rho) / (1 - rho))``."""
    r = np.asarray(rho, dtype=float)
    if np.any(np.abs(r) >= 1):
        raise DomainError("Fisher z-transform needs |rho| < 1")
    z = np.arctanh(r)
    return float(z) if z.ndim == 0 else z


def gaussian_threshold(alpha: float, N: int, k: int, sided: str = "two") -> float:
    """Threshold on ``|fisher_z(rho)|`` for ``N`` samples and ``k`` conditioning variables."""
    if N - k - 3 <= 0:
        raise InsufficientSamplesError(f"need N > k + 3 (N={N}, k={k})")
    q = stats.norm.ppf(1 - alpha / 2) if sided == "two" else stats.norm.ppf(1 - alpha)
    return float(q / math.sqrt(N - k - 3))


def _z_decision(rho: float, N: int, k: int, alpha: float, sided: str) -> CiDecision:
    threshold = gaussian_threshold(alpha, N, k, sided)
    if abs(rho) >= 1:
        z = math.copysign(math.inf, rho)
    else:
        z = fisher_z(rho)
    return CiDecision(z, threshold, abs(z) > threshold)


def gaussian_ci_test(samples, i, j, K=(), alpha: float = 0.05, sided: str = "two") -> CiDecision:
    """Partial-correlation test: dependent iff ``|fisher_z(rho)| > gamma``."""
    samples = np.asarray(samples, dtype=float)
    K = list(K)
    rho = partial_correlation(samples, i, j, K)
    return _z_decision(rho, samples.shape[0], len(K), alpha, sided)


# -- Hilbert-Schmidt criterion -----------------------------------------------


def _standardize(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    M = M - M.mean(axis=0)
    sd = M.std(axis=0)
    sd[sd <= 1e-12 * (1 + np.abs(M).max(initial=0))] = np.inf
    return M / sd


def _sq_dists(M: np.ndarray) -> np.ndarray:
    if M.shape[1] == 1:
        diff = np.subtract.outer(M[:, 0], M[:, 0])
        return diff * diff
    sq = np.einsum("ij,ij->i", M, M)
    d2 = sq[:, None] + sq[None, :] - 2 * M @ M.T
    np.maximum(d2, 0, out=d2)
    np.fill_diagonal(d2, 0)
    return d2


def _sigma(d2: np.ndarray, bandwidth) -> float:
    if bandwidth != "median":
        return float(bandwidth)
    tri = d2[np.triu_indices_from(d2, k=1)]
    tri = tri[tri > 0]
    return float(np.sqrt(np.median(tri))) if tri.size else 1.0


def _center(K: np.ndarray) -> np.ndarray:
    row = K.mean(axis=0)
    return K - row[None, :] - row[:, None] + row.mean()


def centered_gram(U: np.ndarray, bandwidth="median") -> np.ndarray:
    """Centered Gaussian RBF Gram matrix ``H K H`` of the rows of ``U``."""
    U = np.asarray(U, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    d2 = _sq_dists(U)
    sigma = _sigma(d2, bandwidth)
    return _center(np.exp(-d2 / (2 * sigma**2)))


def regularized_operator(G: np.ndarray, c: float) -> np.ndarray:
    """``G (G + c I)^-1``, computed through the eigendecomposition of ``G``."""
    lam, V = np.linalg.eigh(G)
    lam = np.clip(lam, 0, None)
    return (V * (lam / (lam + c))) @ V.T


def _blocks(x, y, Z):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    N = x.shape[0]
    if y.shape[0] != N:
        raise CitsError("x and y must have the same length")
    if Z is None:
        Z = np.empty((N, 0))
    Z = np.asarray(Z, dtype=float).reshape(N, -1)
    if N < 5:
        raise InsufficientSamplesError(f"kernel test needs at least 5 samples, got {N}")
    return _standardize(x[:, None]), _standardize(y[:, None]), _standardize(Z)


def hs_statistic(x, y, Z=None, epsilon: float | None = None, bandwidth="median") -> float:
    """Hilbert-Schmidt conditional dependence statistic of ``x`` and ``y`` given ``Z``.

    ``Tr[R_YY R_XX - 2 R_YY R_XX R_Z + R_YY R_Z R_XX R_Z]`` with
    ``R_U = G_U (G_U + N eps I)^-1`` on centered RBF Gram matrices of the
    augmented blocks ``XX = (x, Z)`` and ``YY = (y, Z)``.  Without
    conditioning variables this is ``Tr[R_Y R_X]``.  Columns are standardized
    before the kernel is applied.
    """
    xs, ys, Zs = _blocks(x, y, Z)
    N = xs.shape[0]
    if epsilon is None:
        epsilon = 0.1 * N ** -0.25
    if epsilon <= 0:
        raise CitsError("epsilon must be positive")
    c = N * epsilon
    Rx = regularized_operator(centered_gram(np.hstack([xs, Zs]), bandwidth), c)
    Ry = regularized_operator(centered_gram(np.hstack([ys, Zs]), bandwidth), c)
    if Zs.shape[1] == 0:
        return float(np.sum(Ry * Rx))
    Rz = regularized_operator(centered_gram(Zs, bandwidth), c)
    RyRx = Ry @ Rx
    return float(np.trace(RyRx) - 2 * np.trace(RyRx @ Rz) + np.trace(Ry @ Rz @ Rx @ Rz))


def _eig_operator(G: np.ndarray, c: float) -> tuple[np.ndarray, np.ndarray]:
    lam, V = np.linalg.eigh(G)
    lam = np.clip(lam, 0, None)
    return V, lam / (lam + c)


def _low_rank(V: np.ndarray, ratio: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Factor ``B`` with ``B B^T ~ V diag(ratio) V^T``; dropped eigenvalues sum below ``tol``."""
    order = np.argsort(ratio)
    dropped = np.cumsum(ratio[order])
    keep = order[dropped > tol]
    return V[:, keep] * np.sqrt(ratio[keep])


def permutation_threshold(null, alpha: float, n_permutations: int) -> float:
    """Null value the statistic must exceed for ``(1 + #exceed) / (1 + B) <= alpha``."""
    k = math.floor(alpha * (n_permutations + 1) - 1 + 1e-12)
    if k < 0:
        return math.inf
    ordered = np.sort(np.asarray(null, dtype=float))[::-1]
    if k >= ordered.size:
        return -math.inf
    return float(ordered[k])


def nearest_neighbours(d2z: np.ndarray, neighbours: int) -> np.ndarray:
    """Indices of the ``neighbours`` nearest samples of every row (itself included)."""
    k = min(neighbours, d2z.shape[0])
    return np.argpartition(d2z, k - 1, axis=1)[:, :k]


def local_permutation(near: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Shuffle that maps every sample to one of its nearest neighbours in ``Z``.

    Samples are visited in random order; each takes a random unused index
    among its neighbours (rows of ``near``), or a random one of them when
    all are taken.
    """
    N, k = near.shape
    shuffled = np.take_along_axis(near, np.argsort(rng.random((N, k)), axis=1), axis=1).tolist()
    used = [False] * N
    perm = [0] * N
    for i in rng.permutation(N).tolist():
        row = shuffled[i]
        pick = row[0]
        for cand in row:
            if not used[cand]:
                pick = cand
                break
        used[pick] = True
        perm[i] = pick
    return np.asarray(perm, dtype=np.intp)


class KernelCiTester:
    """Hilbert-Schmidt tests between columns of one sample matrix.

    Gram eigendecompositions are cached per column set, so repeated tests on
    the same data (as in a conditioning-set search) share work.  The
    statistic is evaluated as ``Tr[R_YY M]`` with
    ``M = (I - R_Z) R_XX (I - R_Z) = B B^T``, which equals the trace formula
    of :func:`hs_statistic`.  Permuted copies of ``y`` reuse ``B``:
    ``Tr[R M] = Tr[M] - c |L^-1 B|_F^2`` with ``L`` the Cholesky factor of
    ``G_YY + c I``.
    """

    def __init__(self, data: np.ndarray, config: CiTestConfig, cache_size: int = 192):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2:
            raise CitsError("data must be an N x m matrix")
        self.N = data.shape[0]
        if self.N < 5:
            raise InsufficientSamplesError(f"kernel test needs at least 5 samples, got {self.N}")
        self.config = config
        self.data = _standardize(data)
        self.c = self.N * config.epsilon(self.N)
        self._col_d2: dict[int, np.ndarray] = {}
        self._eig: OrderedDict = OrderedDict()
        self._cache_size = cache_size

    def _d2(self, cols) -> np.ndarray:
        out = np.zeros((self.N, self.N))
        for col in cols:
            if col not in self._col_d2:
                self._col_d2[col] = _sq_dists(self.data[:, [col]])
            out += self._col_d2[col]
        return out

    def _operator(self, cols: frozenset):
        hit = self._eig.get(cols)
        if hit is not None:
            self._eig.move_to_end(cols)
            return hit
        d2 = self._d2(sorted(cols))
        G = _center(np.exp(-d2 / (2 * _sigma(d2, self.config.bandwidth) ** 2)))
        hit = _eig_operator(G, self.c)
        self._eig[cols] = hit
        if len(self._eig) > self._cache_size:
            self._eig.popitem(last=False)
        return hit

    def _factor(self, i: int, K: tuple) -> np.ndarray:
        B = _low_rank(*self._operator(frozenset((i, *K))))
        if K:
            Vz, rz = self._operator(frozenset(K))
            B = B - Vz @ (rz[:, None] * (Vz.T @ B))
        return B

    def statistic(self, i: int, j: int, K=()) -> float:
        K = tuple(K)
        B = self._factor(i, K)
        Vy, ry = self._operator(frozenset((j, *K)))
        W = Vy.T @ B
        return float(np.sum(ry[:, None] * W * W))

    def _null(self, j: int, K: tuple, B: np.ndarray, rng: np.random.Generator):
        cols = (j, *K)
        d2 = self._d2(cols)
        scale = 1.0 / (2 * _sigma(d2, self.config.bandwidth) ** 2)
        kz = np.exp(-self._d2(K) * scale) if K else 1.0
        y = self.data[:, j]
        trace_m = float(np.sum(B * B))
        shift = self.c * np.eye(self.N)
        local = bool(K) and self.config.permutation == "local"
        near = nearest_neighbours(self._d2(K), self.config.neighbours) if local else None
        while True:
            idx = local_permutation(near, rng) if local else rng.permutation(self.N)
            yp = y[idx]
            diff = np.subtract.outer(yp, yp)
            G = _center(np.exp(-(diff * diff) * scale) * kz)
            L = linalg.cholesky(G + shift, lower=True, check_finite=False)
            W = linalg.solve_triangular(L, B, lower=True, check_finite=False)
            yield trace_m - self.c * float(np.sum(W * W))

    def test(self, i: int, j: int, K=(), rng: np.random.Generator | None = None) -> CiDecision:
        """Test column ``i`` against column ``j`` given columns ``K``; ``j`` is permuted."""
        K = tuple(K)
        if i == j or i in K or j in K:
            raise CitsError("i and j must be distinct and outside the conditioning set")
        cfg = self.config
        h = self.statistic(i, j, K)
        if cfg.gamma is not None:
            return CiDecision(h, cfg.gamma, abs(h) > cfg.gamma)
        if rng is None:
            rng = np.random.default_rng([cfg.seed, i, j, len(K), *sorted(K)])
        n_perm = cfg.n_permutations
        stop_at = math.floor(cfg.alpha * (n_perm + 1) - 1 + 1e-12) + 1
        draws = []
        exceed = 0
        for value in self._null(j, K, self._factor(i, K), rng):
            draws.append(value)
            if value >= h:
                exceed += 1
            if exceed >= stop_at or len(draws) >= n_perm:
                break
        threshold = permutation_threshold(draws, cfg.alpha, n_perm)
        return CiDecision(h, threshold, abs(h) > threshold)


def hs_ci_test(x, y, Z=None, config: CiTestConfig | None = None, rng: np.random.Generator | None = None) -> CiDecision:
    """Kernel conditional dependence test of ``x`` and ``y`` given ``Z``.

    With ``config.gamma`` set, dependent iff ``|H_n| > gamma``.  Otherwise
    ``y`` is shuffled (``Z`` held fixed, see ``config.permutation``) up to
    ``config.n_permutations`` times and the test rejects at level ``config.alpha``.  Sampling stops as
    soon as enough permuted values reach the observed one to rule out
    rejection, which leaves the decision unchanged.
    """
    config = config or CiTestConfig(kind=HILBERT_SCHMIDT)
    xs, ys, Zs = _blocks(x, y, Z)
    tester = KernelCiTester(np.hstack([xs, ys, Zs]), config)
    return tester.test(0, 1, range(2, 2 + Zs.shape[1]), rng=rng)


class GaussianCiTester:
    """Partial-correlation tests between columns of one sample matrix (shared covariance)."""

    def __init__(self, data: np.ndarray, config: CiTestConfig):
        data = np.asarray(data, dtype=float)
        self.N = data.shape[0]
        self.config = config
        self.cov = np.atleast_2d(np.cov(data, rowvar=False))

    def test(self, i: int, j: int, K=(), rng=None) -> CiDecision:
        K = list(K)
        if i == j or i in K or j in K:
            raise CitsError("i and j must be distinct and outside the conditioning set")
        if self.N < len(K) + 3:
            raise InsufficientSamplesError(f"need at least {len(K) + 3} samples, got {self.N}")
        if self.cov[i, i] <= 0 or self.cov[j, j] <= 0:
            raise DegenerateVarianceError(f"column {i} or {j} is constant")
        rho = partial_correlation_from_cov(self.cov, i, j, K)
        if self.config.gamma is not None:
            z = math.copysign(math.inf, rho) if abs(rho) >= 1 else fisher_z(rho)
            return CiDecision(z, self.config.gamma, abs(z) > self.config.gamma)
        return _z_decision(rho, self.N, len(K), self.config.alpha, self.config.sided)


def make_tester(data: np.ndarray, config: CiTestConfig):
    """Tester object with a ``test(i, j, K)`` method for the configured family."""
    if config.kind == PARTIAL_CORRELATION:
        return GaussianCiTester(data, config)
    return KernelCiTester(data, config)
