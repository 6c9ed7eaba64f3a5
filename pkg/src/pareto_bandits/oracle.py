"""Brute-force checks that validate the main code paths independently.

Nothing here is used by the policies except the exact grid design, which
doubles as the "exact-optimal design" option of phased elimination.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np

from .design import Design, reduce_to_span
from .env import Environment, is_conditionally_benign
from .errors import InapplicableOracleError, ParameterError

GRID_MAX_ACTIONS = 5
EVENTS = ("EA", "EZ", "EMG")


def kl_bernoulli(p: float, q: float) -> float:
    """``KL(B(p) || B(q))`` in nats, with ``0 log 0 = 0``."""
    if not 0 <= p <= 1 or not 0 <= q <= 1:
        raise ParameterError("p and q must lie in [0, 1]")
    if q in (0.0, 1.0):
        if p != q:
            raise ParameterError(f"KL(B({p}) || B({q})) is infinite")
        return 0.0
    out = 0.0
    if p > 0:
        out += p * math.log(p / q)
    if p < 1:
        out += (1 - p) * math.log((1 - p) / (1 - q))
    return max(out, 0.0)


def _compositions(total, parts):
    """All weight vectors of ``parts`` non-negative integers summing to ``total``, lexicographic."""
    bars = np.array(list(combinations(range(total + parts - 1), parts - 1)), dtype=np.int64)
    if parts == 1:
        return np.array([[total]])
    edges = np.hstack([np.full((bars.shape[0], 1), -1), bars,
                       np.full((bars.shape[0], 1), total + parts - 1)])
    return np.diff(edges, axis=1) - 1


def exact_design_grid(vectors, resolution: int = 60) -> Design:
    """Minimize ``g(pi)`` over the simplex grid with step ``1 / resolution``.

    Runs on the span of the vectors.  Singular grid points are skipped; ties
    go to the lexicographically smallest weight vector.
    """
    x = reduce_to_span(vectors).reduced
    n, r = x.shape
    if n > GRID_MAX_ACTIONS:
        raise ParameterError(f"grid search supports at most {GRID_MAX_ACTIONS} vectors, got {n}")
    if resolution < 10:
        raise ParameterError("resolution must be >= 10")
    grid = _compositions(resolution, n) / resolution
    outer = np.einsum("ni,nj->nij", x, x)
    best_g = np.inf
    best_w = None
    for lo in range(0, grid.shape[0], 20_000):
        w = grid[lo:lo + 20_000]
        v = np.einsum("kn,nij->kij", w, outer)
        eig = np.linalg.eigvalsh(v)
        ok = eig[:, 0] > 1e-12 * np.maximum(eig[:, -1], 1.0)
        if not ok.any():
            continue
        inv = np.linalg.inv(v[ok])
        g = np.einsum("ni,kij,nj->kn", x, inv, x).max(axis=1)
        k = int(np.argmin(g))
        if g[k] < best_g * (1 - 1e-12):
            best_g = float(g[k])
            best_w = w[ok][k]
    if best_w is None:
        raise ParameterError("no grid point gives a non-singular design")
    return Design(best_w.copy(), tuple(int(i) for i in np.flatnonzero(best_w > 0)), best_g)


def exact_regret_deterministic(env: Environment, policy, horizon: int) -> np.ndarray:
    """Unroll ``policy`` on ``env`` without any randomness.

    Valid only while every selected action has a point-mass context marginal
    and a deterministic reward there; anything else raises
    :class:`InapplicableOracleError`.  Returns cumulative pseudo-regret for
    ``t = 1..horizon``.
    """
    mu = env.action_means
    best = mu.max()
    out = np.empty(horizon)
    total = 0.0
    for t in range(1, horizon + 1):
        a = policy.select(t)
        row = env.marginals[a]
        z = int(np.argmax(row))
        if row[z] != 1.0:
            raise InapplicableOracleError(f"action {a} at round {t} has a random context")
        if not env.deterministic[a, z]:
            raise InapplicableOracleError(f"action {a} at round {t} has a random reward")
        policy.observe(a, z, float(env.reward_means[a, z]))
        total += best - mu[a]
        out[t - 1] = total
    return out


class Trace(NamedTuple):
    actions: np.ndarray
    contexts: np.ndarray
    rewards: np.ndarray


@dataclass(frozen=True)
class EventReport:
    name: str
    held: bool
    first_violation: Optional[int] = None


def _first_band_violation(keys, rewards, n_keys, truth, log_term):
    """First round where some key's running mean leaves its band, else None.

    Counts are clamped to one, so a key not yet seen has estimate 0 and the
    widest band; that case is checked at round 1.
    """
    first = None
    wide = math.sqrt(log_term / 2)
    for k in range(n_keys):
        hits = np.flatnonzero(keys == k)
        unseen_bad = abs(truth[k]) > wide
        if unseen_bad and (hits.size == 0 or hits[0] > 0):
            return 1
        if hits.size == 0:
            continue
        counts = np.arange(1, hits.size + 1)
        means = np.cumsum(rewards[hits]) / counts
        bad = np.flatnonzero(np.abs(means - truth[k]) > np.sqrt(log_term / (2 * counts)))
        if bad.size:
            t = int(hits[bad[0]]) + 1
            first = t if first is None else min(first, t)
    return first


def context_means(env: Environment) -> np.ndarray:
    """``mu^Z``; requires a conditionally benign environment.

    Unreachable contexts get NaN; they are never observed.
    """
    if not is_conditionally_benign(env):
        raise ParameterError("mu^Z is defined only for conditionally benign environments")
    out = np.full(env.n_contexts, np.nan)
    for z in range(env.n_contexts):
        reach = np.flatnonzero(env.marginals[:, z] > 0)
        if reach.size:
            out[z] = env.reward_means[reach[0], z]
    return out


def event_monitor(trace: Trace, env: Environment, delta: float, which: str,
                  horizon: int | None = None) -> EventReport:
    """Replay counters along ``trace`` and test one concentration event.

    ``EA``: action means inside ``sqrt(log(2|A|T/delta) / (2 N_t(a)))``.
    ``EZ``: context means inside ``sqrt(log(2|Z|T/delta) / (2 M_t(z)))``
    (benign environments only).
    ``EMG``: the context-count martingale stays below
    ``sqrt(2 t log(T/delta))``.
    """
    if which not in EVENTS:
        raise ParameterError(f"unknown event {which!r}; expected one of {EVENTS}")
    actions = np.asarray(trace.actions, dtype=np.intp)
    contexts = np.asarray(trace.contexts, dtype=np.intp)
    rewards = np.asarray(trace.rewards, dtype=float)
    T = len(actions) if horizon is None else int(horizon)

    if which == "EA":
        log_term = math.log(2 * env.n_actions * T / delta)
        first = _first_band_violation(actions, rewards, env.n_actions, env.action_means, log_term)
    elif which == "EZ":
        mu_z = context_means(env)
        log_term = math.log(2 * env.n_contexts * T / delta)
        first = _first_band_violation(contexts, rewards, env.n_contexts,
                                      np.nan_to_num(mu_z), log_term)
    else:
        n = len(actions)
        onehot = np.zeros((n, env.n_contexts))
        onehot[np.arange(n), contexts] = 1.0
        before = np.vstack([np.zeros((1, env.n_contexts)), np.cumsum(onehot, axis=0)[:-1]])
        scale = 1.0 / np.sqrt(np.maximum(before, 1.0))
        inc = np.einsum("sz,sz->s", scale, env.marginals[actions] - onehot)
        walk = np.cumsum(inc)
        t = np.arange(1, n + 1)
        bad = np.flatnonzero(walk > np.sqrt(2 * t * math.log(T / delta)))
        first = int(bad[0]) + 1 if bad.size else None
    return EventReport(which, first is None, first)

