"""Index policies: UCB over actions and C-UCB over post-action contexts.

Every policy follows the same protocol: ``select(t)`` is called with
``t = 1, 2, ...`` and must be followed by ``observe(action, context,
reward)`` for the action it returned.  Indices at round ``t`` use the
statistics gathered through round ``t - 1``.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError


class Policy:
    """Base class fixing the select/observe protocol."""

    name = "policy"
    learner_id = -1

    def select(self, t: int) -> int:
        raise NotImplementedError

    def observe(self, action: int, context: int, reward: float) -> None:
        raise NotImplementedError


def _check_common(n_actions, horizon, delta):
    if n_actions < 1:
        raise ParameterError("need at least one action")
    if horizon < 1:
        raise ParameterError("horizon must be >= 1")
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")


class FixedArm(Policy):
    """Plays one action forever; used as a zero-regret reference."""

    name = "fixed"

    def __init__(self, action: int):
        self.action = int(action)

    def select(self, t):
        return self.action

    def observe(self, action, context, reward):
        pass


class UCB(Policy):
    """Anytime UCB with bonus ``sqrt(log(2|A|T/delta) / (2 N))``.

    ``N`` is clamped below by one, so untried arms get mean 0 and the
    largest bonus; no forced round-robin start.
    """

    name = "ucb"

    def __init__(self, n_actions: int, horizon: int, delta: float = 0.1):
        _check_common(n_actions, horizon, delta)
        self.n_actions = n_actions
        self.horizon = horizon
        self.delta = delta
        self.counts = np.zeros(n_actions, dtype=np.int64)
        self.sums = np.zeros(n_actions)
        self.log_term = math.log(2 * n_actions * horizon / delta)
        self._index = [self._compute(0, 0.0)] * n_actions

    def _compute(self, count, total):
        n = max(count, 1)
        return total / n + math.sqrt(self.log_term / (2 * n))

    def index(self, a: int) -> float:
        return self._compute(int(self.counts[a]), float(self.sums[a]))

    def select(self, t):
        idx = self._index
        return idx.index(max(idx))

    def observe(self, action, context, reward):
        self.counts[action] += 1
        self.sums[action] += reward
        self._index[action] = self._compute(int(self.counts[action]), float(self.sums[action]))


class CUCB(Policy):
    """C-UCB: context-level UCBs averaged under the given action marginals.

    ``marginals`` is the prior knowledge ``q``; it may differ from the
    environment's true marginals.  Statistics are keyed on contexts only,
    so the observed action does not enter the update.
    """

    name = "cucb"

    def __init__(self, marginals, horizon: int, delta: float = 0.1):
        q = np.array(marginals, dtype=float)
        if q.ndim != 2:
            raise ParameterError("marginals must be a 2-d array")
        _check_common(q.shape[0], horizon, delta)
        self.marginals = q
        self.n_actions, self.n_contexts = q.shape
        self.horizon = horizon
        self.delta = delta
        self.context_counts = np.zeros(self.n_contexts, dtype=np.int64)
        self.context_sums = np.zeros(self.n_contexts)
        self.log_term = math.log(2 * self.n_contexts * horizon / delta)
        self._ucb = np.full(self.n_contexts, self._compute(0, 0.0))

    def _compute(self, count, total):
        n = max(count, 1)
        return total / n + math.sqrt(self.log_term / (2 * n))

    def context_ucb(self) -> np.ndarray:
        return self._ucb.copy()

    def index(self, a: int) -> float:
        return float(self.marginals[a] @ self._ucb)

    def select(self, t):
        return int(np.argmax(self.marginals @ self._ucb))

    def observe(self, action, context, reward):
        self.context_counts[context] += 1
        self.context_sums[context] += reward
        self._ucb[context] = self._compute(int(self.context_counts[context]),
                                           float(self.context_sums[context]))


def ucb_index(state: UCB, a: int) -> float:
    return state.index(a)


def cucb_index(state: CUCB, a: int) -> float:
    return state.index(a)
