"""Phased elimination with G-optimal designs over context marginals.

In a conditionally benign environment ``E[Y | a] = <mu^Z, nu_a>``, so the
marginal rows act as linear-bandit features and realized contexts can be
ignored.  The policy only ever sees the marginals it is given, which may be
a perturbed copy of the truth.
"""
from __future__ import annotations

import math

import numpy as np

from .design import Design, frank_wolfe_design, reduce_to_span
from .env import dim_span
from .errors import ParameterError, SingularDesignError
from .oracle import GRID_MAX_ACTIONS, exact_design_grid
from .policies import Policy

CEIL_SLACK = 1e-9


def base_phase_length(d_span: int) -> float:
    """``4 d max(log log d, 0) + 16``; the log log term is clamped at 0 for d <= e."""
    loglog = math.log(math.log(d_span)) if d_span > math.e else 0.0
    return 4 * d_span * loglog + 16


def phase_schedule(d_span: int, ell: int, design: Design):
    """Return ``(m_ell, plays)`` with ``plays[a] = ceil(m_ell * pi(a))`` on the support."""
    if ell < 1:
        raise ParameterError("phase index starts at 1")
    m = 2 ** (ell - 1) * base_phase_length(d_span)
    w = np.asarray(design.weights, dtype=float)
    plays = np.where(w > 0, np.ceil(m * w - CEIL_SLACK), 0).astype(np.int64)
    return m, plays


def elimination_threshold(d_span: int, m_ell: float, n_actions: int, horizon: int,
                          delta: float) -> float:
    """``2 sqrt((4 d / m) log(2 |A| log2(T) / delta))``, with ``log2 T`` floored at 1."""
    if min(d_span, m_ell, n_actions, horizon, delta) <= 0:
        raise ParameterError("all threshold inputs must be positive")
    log2t = max(math.log2(horizon), 1.0)
    return 2 * math.sqrt(4 * d_span / m_ell * math.log(2 * n_actions * log2t / delta))


def _round_major(actions, plays):
    """Interleave: one pass over ``actions`` (ascending) per round while plays remain."""
    actions = np.asarray(actions)
    plays = np.asarray(plays)
    keep = plays > 0
    actions, plays = actions[keep], plays[keep]
    if actions.size == 0:
        return np.empty(0, dtype=np.intp)
    reps = np.repeat(actions, plays)
    starts = np.repeat(np.cumsum(plays) - plays, plays)
    rank = np.arange(reps.size) - starts
    order = np.lexsort((reps, rank))
    return reps[order].astype(np.intp)


class PhasedElimination(Policy):
    """Phased elimination over the rows of ``marginals``.

    Parameters
    ----------
    marginals : array_like, shape (n_actions, n_contexts)
        Feature vectors (true or approximate context marginals).
    horizon : int
        ``T``, entering only through ``log2(T)`` in the threshold.
    delta : float
        Confidence level.
    design : {"fw", "exact"}
        Frank-Wolfe near-optimal design, or the brute-force grid optimum
        (falls back to a tight Frank-Wolfe run above five active actions).
    """

    name = "pe"

    def __init__(self, marginals, horizon: int, delta: float = 0.1, design: str = "fw",
                 fw_tol: float = 0.01, grid_resolution: int = 60):
        feats = np.array(marginals, dtype=float)
        if feats.ndim != 2:
            raise ParameterError("marginals must be a 2-d array")
        if design not in ("fw", "exact"):
            raise ParameterError(f"unknown design mode {design!r}")
        if horizon < 1 or not 0 < delta < 1:
            raise ParameterError("need horizon >= 1 and delta in (0, 1)")
        self.features = feats
        self.n_actions = feats.shape[0]
        self.horizon = horizon
        self.delta = delta
        self.design_mode = design
        self.fw_tol = fw_tol
        self.grid_resolution = grid_resolution
        self.d_span = dim_span(feats)
        self.active = np.arange(self.n_actions)
        self.ell = 0
        self.history = []
        self._designs = {}
        self._start_phase()

    def _design(self, vectors) -> Design:
        if len(vectors) == 1:
            return Design(np.ones(1), (0,), 1.0)
        if self.design_mode == "exact":
            if len(vectors) <= GRID_MAX_ACTIONS:
                return exact_design_grid(vectors, self.grid_resolution)
            return frank_wolfe_design(vectors, self.d_span, max_iters=100_000, tol=1e-6)
        return frank_wolfe_design(vectors, self.d_span, tol=self.fw_tol)

    def _start_phase(self):
        self.ell += 1
        vectors = self.features[self.active]
        red = reduce_to_span(vectors)
        self.reduction = red
        # the design depends only on the active set, which rarely changes
        key = tuple(self.active.tolist())
        if key not in self._designs:
            self._designs[key] = self._design(vectors)
        self.design = self._designs[key]
        self.m, plays = phase_schedule(self.d_span, self.ell, self.design)
        self.plays = plays
        x = red.reduced
        self.moment = (x * plays[:, None]).T @ x
        self.queue = _round_major(self.active, plays)
        self.pos = 0
        self._reward_sums = np.zeros(self.n_actions)

    def phase_estimate(self) -> np.ndarray:
        """Least-squares ``theta`` in the phase's (possibly reduced) coordinates."""
        x = self.reduction.reduced
        response = x.T @ self._reward_sums[self.active]
        try:
            return np.linalg.solve(self.moment, response)
        except np.linalg.LinAlgError as exc:
            raise SingularDesignError("phase moment matrix is singular") from exc

    def _end_phase(self):
        theta = self.phase_estimate()
        pred = self.reduction.reduced @ theta
        spread = pred.max() - pred
        thr = elimination_threshold(self.d_span, self.m, self.n_actions, self.horizon, self.delta)
        keep = spread <= thr
        self.history.append({
            "phase": self.ell, "m": self.m, "threshold": thr, "theta": theta,
            "active": self.active.copy(), "spread": spread, "weights": self.design.weights,
        })
        self.active = self.active[keep]
        self._start_phase()

    def select(self, t):
        return int(self.queue[self.pos])

    def observe(self, action, context, reward):
        self._reward_sums[action] += reward
        self.pos += 1
        if self.pos == self.queue.size:
            self._end_phase()

    def commit(self, t, limit):
        """Actions fixed for the rest of the phase, at most ``limit`` of them."""
        return self.queue[self.pos:self.pos + limit]

    def observe_block(self, actions, contexts, rewards):
        np.add.at(self._reward_sums, actions, rewards)
        self.pos += len(actions)
        if self.pos == self.queue.size:
            self._end_phase()
