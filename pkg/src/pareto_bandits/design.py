"""Near G-optimal designs over finite vector sets.

The quantity certified throughout is ``g(pi) = max_a v_a^T V(pi)^{-1} v_a``
with ``V(pi) = sum_a pi(a) v_a v_a^T``.  By the Kiefer-Wolfowitz theorem
``g(pi) >= r`` (the span dimension) with equality exactly at the optimum.
Vectors are first projected onto their own span so rank-deficient sets are
handled in reduced coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .env import RANK_TOL
from .errors import ConvergenceError, ParameterError, SingularDesignError

SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class Design:
    weights: np.ndarray
    support: tuple
    gap: float = math.nan
    logdet_trace: tuple = field(default=(), repr=False)

    def __post_init__(self):
        w = self.weights
        if np.any(w < 0) or abs(w.sum() - 1) > 1e-9:
            raise ParameterError("design weights must be a probability vector")


def design_from_weights(weights) -> Design:
    w = np.asarray(weights, dtype=float)
    return Design(w, tuple(int(i) for i in np.flatnonzero(w > 0)))


@dataclass(frozen=True)
class SpanReduction:
    """Orthogonal change of basis exposing the span of a vector set.

    ``transform`` is an orthogonal ``D x D`` matrix (identity when the set
    already spans ``R^D``); the first ``rank`` coordinates of ``transform @ v``
    are the reduced vector, the rest vanish up to rounding.
    """

    rank: int
    transform: np.ndarray
    reduced: np.ndarray

    def apply(self, vectors) -> np.ndarray:
        return (np.asarray(vectors, dtype=float) @ self.transform.T)[..., :self.rank]


def reduce_to_span(vectors, tol: float = RANK_TOL) -> SpanReduction:
    x = np.atleast_2d(np.asarray(vectors, dtype=float))
    if x.shape[0] == 0:
        raise ParameterError("need at least one vector")
    dim = x.shape[1]
    _, s, vt = np.linalg.svd(x, full_matrices=True)
    rank = max(1, int(np.sum(s > tol * s[0]))) if s.size and s[0] > 0 else 1
    if rank == dim:
        return SpanReduction(dim, np.eye(dim), x.copy())
    return SpanReduction(rank, vt, (x @ vt.T)[:, :rank])


def support_bound(d: int) -> float:
    """``4 d max(log log d, 0) + 16``."""
    loglog = math.log(math.log(d)) if d > math.e else 0.0
    return 4 * d * max(loglog, 0.0) + 16


def design_matrix(vectors, weights) -> np.ndarray:
    x = np.asarray(vectors, dtype=float)
    return (x * np.asarray(weights)[:, None]).T @ x


def _leverages(x, weights):
    v = design_matrix(x, weights)
    eig = np.linalg.eigvalsh(v)
    if eig[0] <= SINGULAR_TOL * max(eig[-1], 1.0):
        raise SingularDesignError("V(pi) is singular on the span of the vectors")
    sol = np.linalg.solve(v, x.T)
    return np.einsum("ij,ji->i", x, sol), float(np.sum(np.log(eig)))


def kw_gap(vectors, design) -> float:
    """Return ``g(pi)`` computed on the span of ``vectors``."""
    red = reduce_to_span(vectors)
    w = design.weights if isinstance(design, Design) else np.asarray(design, dtype=float)
    lev, _ = _leverages(red.reduced, w)
    return float(lev.max())


def _greedy_basis(x):
    """Indices of ``r`` vectors picked by pivoted Gram-Schmidt (largest residual first)."""
    resid = x.copy()
    chosen = []
    for _ in range(x.shape[1]):
        norms = np.einsum("ij,ij->i", resid, resid)
        norms[chosen] = -1.0
        k = int(np.argmax(norms))
        if norms[k] <= 0:
            break
        chosen.append(k)
        u = resid[k] / math.sqrt(norms[k])
        resid = resid - np.outer(resid @ u, u)
    return chosen


def frank_wolfe_design(vectors, d_span: int | None = None, max_iters: int = 10_000,
                       tol: float = 0.01) -> Design:
    """Frank-Wolfe ascent on ``log det V(pi)``.

    Starts from the uniform design on a greedily chosen basis, takes
    exact-line-search steps toward the vertex of largest leverage and stops
    once ``g(pi) <= (1 + tol) r``.  Weights below ``1 / (4 |A|^2)`` are then
    pruned, and if the support is still above the bound the smallest
    weights are dropped one at a time while ``g(pi) <= 2 d_span`` keeps
    holding.  The returned design is certified against both ``g <= 2 d_span``
    and ``|support| <= 4 d max(log log d, 0) + 16``.
    """
    if max_iters < 1:
        raise ParameterError("max_iters must be >= 1")
    red = reduce_to_span(vectors)
    x = red.reduced
    n, r = x.shape
    d = r if d_span is None else int(d_span)
    if d < r:
        raise ParameterError(f"d_span={d} is below the rank {r} of the vectors")
    target = 2 * d
    w = np.zeros(n)
    w[_greedy_basis(x)] = 1.0
    w /= w.sum()

    trace = []
    lev, logdet = _leverages(x, w)
    trace.append(logdet)
    for _ in range(max_iters):
        k = int(np.argmax(lev))
        g = lev[k]
        if g <= (1 + tol) * r:
            break
        step = (g / r - 1) / (g - 1)
        w *= 1 - step
        w[k] += step
        lev, logdet = _leverages(x, w)
        trace.append(logdet)
    g = float(lev.max())
    if g > target:
        raise ConvergenceError(f"iteration cap reached with g = {g:.6g} > {target}", g)

    w = _prune(x, w, threshold=1 / (4 * n * n), target=target)
    w = _shrink_support(x, w, support_bound(d), target)
    g = float(_leverages(x, w)[0].max())
    support = np.flatnonzero(w > 0)
    if g > target or support.size > support_bound(d):
        raise ConvergenceError(
            f"could not certify design: g = {g:.6g}, support = {support.size}", g)
    return Design(w, tuple(int(i) for i in support), g, tuple(trace))


def _prune(x, w, threshold, target):
    cut = np.where(w < threshold, 0.0, w)
    cut /= cut.sum()
    try:
        if _leverages(x, cut)[0].max() <= target:
            return cut
    except SingularDesignError:
        pass
    return w


def _shrink_support(x, w, bound, target):
    w = w.copy()
    while np.count_nonzero(w) > bound:
        live = np.flatnonzero(w > 0)
        k = live[np.argmin(w[live])]
        trial = w.copy()
        trial[k] = 0.0
        trial /= trial.sum()
        try:
            ok = _leverages(x, trial)[0].max() <= target
        except SingularDesignError:
            ok = False
        if not ok:
            break
        w = trial
    return w
