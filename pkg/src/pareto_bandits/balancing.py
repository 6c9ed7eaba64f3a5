"""Dynamic balancing over two base learners.

Each round the balancer picks, among the currently active learners, the
one with the smallest putative regret ``v_i d_i sqrt(n_i)``, forwards the
round to it, and then re-runs a misspecification test that can switch a
learner off (and later back on).  Only the selected learner is updated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

from .errors import ParameterError
from .policies import Policy

RATE_TOL = 1e-9


def _loglog_arg(n: float) -> float:
    """``max(log n, 1)``, keeping ``log(2 log n / delta)`` finite for n < e."""
    return max(math.log(n), 1.0) if n > 0 else 1.0


def bias(t: float, z_scale: float, delta: float) -> float:
    """``b(t) = max(2 Z / sqrt(t), 3 sqrt(2 log(2 log t / delta)) / sqrt(t))`` with ``t >= 1``."""
    t = max(t, 1)
    root = math.sqrt(t)
    return max(2 * z_scale / root,
               3 * math.sqrt(2 * math.log(2 * _loglog_arg(t) / delta)) / root)


def confidence_width(n: int, delta: float) -> float:
    """``gamma = 3 sqrt(log(2 log n / delta) / n)`` with both clamps applied."""
    return 3 * math.sqrt(math.log(2 * _loglog_arg(n) / delta) / max(n, 1))


def d_ucb(n_actions: int, horizon: int, delta: float) -> float:
    return math.sqrt(8 * n_actions * math.log(2 * n_actions * horizon / delta))


def d_cucb(n_contexts: int, horizon: int, delta: float) -> float:
    return (math.sqrt(math.log(2 * n_contexts * horizon / delta))
            * (math.sqrt(8 * n_contexts) + math.sqrt(4 * math.log(horizon / delta))))


def d_pe(d_span: int, n_actions: int, horizon: int, delta: float, scale: float = 8.0) -> float:
    log2t = max(math.log2(horizon), 1.0)
    return scale * math.sqrt(d_span * math.log(2 * n_actions * log2t / delta))


@dataclass(frozen=True)
class RatePair:
    r1: float
    r2: float

    def check(self, n_actions: int, n_contexts: int, horizon: int) -> None:
        """Raise unless the pair is reasonable and ``R1 R2 >= |A| T``."""
        lo1 = math.sqrt(n_contexts * horizon)
        lo2 = math.sqrt(n_actions * horizon)
        if self.r1 < lo1 * (1 - RATE_TOL):
            raise ParameterError(f"R1 = {self.r1:.6g} < sqrt(|Z| T) = {lo1:.6g}")
        if self.r2 < lo2 * (1 - RATE_TOL):
            raise ParameterError(f"R2 = {self.r2:.6g} < sqrt(|A| T) = {lo2:.6g}")
        if self.r1 * self.r2 < n_actions * horizon * (1 - RATE_TOL):
            raise ParameterError(
                f"R1 R2 = {self.r1 * self.r2:.6g} < |A| T = {n_actions * horizon}")


def corollary_rates(n_actions: int, n_contexts: int, horizon: int) -> RatePair:
    """``R1 = sqrt(|Z| T)``, ``R2 = sqrt(|A| / |Z|) sqrt(|A| T)``."""
    return RatePair(math.sqrt(n_contexts * horizon),
                    math.sqrt(n_actions / n_contexts) * math.sqrt(n_actions * horizon))


@dataclass(frozen=True)
class Hyperparams:
    z: tuple
    v: tuple
    d: tuple
    biases: tuple

    def bias(self, i: int, t: float) -> float:
        return self.biases[i](t)


def db_hyperparams(rates: RatePair, d1: float, d2: float, n_actions: int, n_contexts: int,
                   horizon: int, delta: float) -> Hyperparams:
    """``Z1 = 1``, ``Z2 = R2 / sqrt(|A| T)``, ``v_i = sqrt(Z_i / d_i^3)``, and the biases ``b_i``."""
    rates.check(n_actions, n_contexts, horizon)
    if d1 <= 0 or d2 <= 0:
        raise ParameterError("candidate regret factors must be positive")
    z = (1.0, rates.r2 / math.sqrt(n_actions * horizon))
    d = (float(d1), float(d2))
    v = tuple(math.sqrt(zi / di ** 3) for zi, di in zip(z, d))
    biases = tuple(partial(bias, z_scale=zi, delta=delta) for zi in z)
    return Hyperparams(z, v, d, biases)


@dataclass
class LearnerSlot:
    policy: Policy
    d: float
    v: float
    bias: Callable[[float], float]
    U: float = 0.0
    n: int = 0
    active: bool = True

    def stats(self, delta: float):
        """Return ``(eta, gamma)``; the bias is evaluated at the slot's own count."""
        n = max(self.n, 1)
        return self.U / n - self.bias(n), confidence_width(self.n, delta)


def select_learner(slots: Sequence[LearnerSlot]) -> int:
    """Lowest-index minimizer of ``v d sqrt(n)`` over active slots (all slots if none is active)."""
    pool = [i for i, s in enumerate(slots) if s.active] or list(range(len(slots)))
    return min(pool, key=lambda i: (slots[i].v * slots[i].d * math.sqrt(slots[i].n), i))


def update_active_set(slots: Sequence[LearnerSlot], delta: float) -> list:
    stats = [s.stats(delta) for s in slots]
    best = max(eta + gamma for eta, gamma in stats)
    flags = [eta + gamma + s.d / math.sqrt(max(s.n, 1)) >= best
             for s, (eta, gamma) in zip(slots, stats)]
    if not any(flags):
        flags = [True] * len(slots)
    for s, f in zip(slots, flags):
        s.active = f
    return flags


class DynamicBalancing(Policy):
    """Balance two base learners with fixed hyperparameters.

    ``learner_id`` holds the 0-based index of the learner that played the
    most recent round.
    """

    name = "db"

    def __init__(self, learners: Sequence[Policy], hyper: Hyperparams, delta: float):
        if len(learners) != 2:
            raise ParameterError("dynamic balancing takes exactly two base learners")
        self.delta = delta
        self.hyper = hyper
        self.slots = [LearnerSlot(p, hyper.d[i], hyper.v[i], hyper.biases[i])
                      for i, p in enumerate(learners)]
        self.learner_id = -1

    def select(self, t):
        i = select_learner(self.slots)
        self.learner_id = i
        slot = self.slots[i]
        return slot.policy.select(slot.n + 1)

    def observe(self, action, context, reward):
        slot = self.slots[self.learner_id]
        slot.policy.observe(action, context, reward)
        slot.U += reward
        slot.n += 1
        update_active_set(self.slots, self.delta)
