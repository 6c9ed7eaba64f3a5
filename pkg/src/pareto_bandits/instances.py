"""Named environment families used for lower-bound and failure-mode experiments.

Action ids follow the construction labels directly: the distinguished
"arm 1" of the two-block families is action id 1, and ``a0`` is passed as
an action id.  In the elimination-adversarial instance the optimal arm is
id 0 and arm ``a_i`` is id ``i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import BERNOULLI, Bernoulli, BenignSpec, Deterministic, Environment, benign_from_parts
from .errors import ParameterError

D1_DELTA_MAX = 1 / 20
D2_DELTA_MAX = 1 / 40
SPECIAL_ARM = 1


@dataclass(frozen=True)
class SplitSpec:
    """Context split ``Z0 = {0..z0_size-1}``, ``Z1`` = the rest, and gap ``delta``."""

    z0_size: int
    delta: float

    def check(self, n_contexts: int, delta_max: float) -> None:
        if not 1 <= self.z0_size <= n_contexts - 1:
            raise ParameterError(
                f"z0_size must be in [1, {n_contexts - 1}], got {self.z0_size}")
        if not 0 < self.delta <= delta_max:
            raise ParameterError(f"delta must lie in (0, {delta_max:g}], got {self.delta}")


def _split(n_actions, n_contexts, delta, z0_size, delta_max):
    if n_contexts < 2:
        raise ParameterError("need at least 2 contexts for a Z0/Z1 split")
    if n_actions < 2:
        raise ParameterError("need at least 2 actions")
    split = SplitSpec(n_contexts // 2 if z0_size is None else int(z0_size), float(delta))
    split.check(n_contexts, delta_max)
    return split


def _block_row(n_contexts, z0_size, mass0):
    row = np.empty(n_contexts)
    row[:z0_size] = mass0 / z0_size
    row[z0_size:] = (1 - mass0) / (n_contexts - z0_size)
    return row


def _two_block_marginals(n_actions, n_contexts, split, z0_mass):
    q = np.empty((n_actions, n_contexts))
    for a in range(n_actions):
        q[a] = _block_row(n_contexts, split.z0_size, z0_mass.get(a, 0.5))
    return q


def _shared_conditionals(n_contexts, z0_size):
    return np.where(np.arange(n_contexts) < z0_size, 0.75, 0.25)


def hard_benign(n_actions: int, n_contexts: int, delta: float, z0_size: int | None = None) -> Environment:
    """Benign two-block instance: arm 1 tilts ``2*delta`` extra mass onto ``Z0``.

    Rewards are Bernoulli(3/4) on ``Z0`` and Bernoulli(1/4) on ``Z1`` for
    every action, so arm 1 is optimal with every gap equal to ``delta``.
    ``delta`` only needs to keep the marginals valid here (``< 1/4``).
    """
    split = _split(n_actions, n_contexts, delta, z0_size, 0.25)
    q = _two_block_marginals(n_actions, n_contexts, split, {SPECIAL_ARM: 0.5 + 2 * split.delta})
    spec = BenignSpec(q, _shared_conditionals(n_contexts, split.z0_size), BERNOULLI)
    return benign_from_parts(spec, name=f"d1-benign-A{n_actions}-Z{n_contexts}-d{delta:g}")


def hard_nonbenign_variant(n_actions: int, n_contexts: int, delta: float, a0: int,
                           z0_size: int | None = None) -> Environment:
    """Same marginals as :func:`hard_benign`; arm ``a0`` pays Bernoulli(3/4 + 4 delta) on ``Z0``."""
    split = _split(n_actions, n_contexts, delta, z0_size, D1_DELTA_MAX)
    if a0 == SPECIAL_ARM:
        raise ParameterError("a0 must differ from arm 1")
    if not 0 <= a0 < n_actions:
        raise ParameterError(f"a0={a0} out of range")
    q = _two_block_marginals(n_actions, n_contexts, split, {SPECIAL_ARM: 0.5 + 2 * split.delta})
    base = _shared_conditionals(n_contexts, split.z0_size)
    rewards = []
    for a in range(n_actions):
        p = base.copy()
        if a == a0:
            p[:split.z0_size] = 0.75 + 4 * split.delta
        rewards.append([Bernoulli(v) for v in p])
    return Environment(q, rewards, name=f"d1-variant-A{n_actions}-Z{n_contexts}-d{delta:g}-a{a0}")


def agnostic_variant(n_actions: int, n_contexts: int, delta: float, a0: int | None = None,
                     z0_size: int | None = None) -> Environment:
    """Benign family where only the marginal of ``a0`` moves (to ``1/2 + 4 delta`` on ``Z0``)."""
    split = _split(n_actions, n_contexts, delta, z0_size, D2_DELTA_MAX)
    tilt = {SPECIAL_ARM: 0.5 + 2 * split.delta}
    if a0 is not None:
        if a0 == SPECIAL_ARM:
            raise ParameterError("a0 must differ from arm 1")
        if not 0 <= a0 < n_actions:
            raise ParameterError(f"a0={a0} out of range")
        tilt[a0] = 0.5 + 4 * split.delta
    q = _two_block_marginals(n_actions, n_contexts, split, tilt)
    spec = BenignSpec(q, _shared_conditionals(n_contexts, split.z0_size), BERNOULLI)
    suffix = "" if a0 is None else f"-a{a0}"
    return benign_from_parts(spec, name=f"d2-A{n_actions}-Z{n_contexts}-d{delta:g}{suffix}")


def agnostic_default_delta(n_actions: int, horizon: int) -> float:
    """Gap ``(1/40) sqrt((|A| - 1) / T)`` used for the marginal-agnostic family."""
    return math.sqrt((n_actions - 1) / horizon) / 40


def pe_adversarial(n_contexts: int, delta: float, n_actions: int | None = None) -> Environment:
    """Non-benign instance on which exact-design phased elimination never plays the best arm.

    Action 0 is ``a*`` with marginal ``(e1 + e2) / 2`` and reward 1 on both
    contexts.  Action ``i`` (1-based context ``i``) sees context ``i - 1`` with
    deterministic reward 0, except the last one which pays ``1 - delta``.
    Extra actions beyond ``n_contexts + 1`` copy action 1.
    """
    if n_contexts < 3:
        raise ParameterError("pe_adversarial needs at least 3 contexts")
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    n_named = n_contexts + 1
    n_actions = n_named if n_actions is None else int(n_actions)
    if n_actions < n_named:
        raise ParameterError(f"need at least {n_named} actions")
    q = np.zeros((n_actions, n_contexts))
    rewards = []
    q[0, 0] = q[0, 1] = 0.5
    rewards.append([Deterministic(1.0)] * 2 + [Deterministic(0.0)] * (n_contexts - 2))
    for a in range(1, n_actions):
        i = a if a < n_named else 1
        q[a, i - 1] = 1.0
        pay = 1.0 - delta if i == n_contexts else 0.0
        rewards.append([Deterministic(pay if z == i - 1 else 0.0) for z in range(n_contexts)])
    return Environment(q, rewards, name=f"pe-adversarial-Z{n_contexts}-d{delta:g}")


def perturb_marginals(marginals, epsilon: float) -> np.ndarray:
    """Move ``epsilon / 2`` of mass per row from its heaviest to its lightest context.

    The heaviest context is the lowest-index argmax; the lightest is the
    lowest-index argmin among the remaining contexts.  The move is capped by
    the donor's mass, so each row stays a distribution and its L1 distance
    to the input is at most ``epsilon`` (exactly ``epsilon`` when uncapped).
    """
    q = np.array(marginals, dtype=float)
    if not 0 <= epsilon <= 2:
        raise ParameterError("epsilon must lie in [0, 2]")
    if epsilon == 0:
        return q
    if q.shape[1] < 2:
        raise ParameterError("row 0 has a single context; no mass can move")
    for a, row in enumerate(q):
        donor = int(np.argmax(row))
        rest = np.delete(np.arange(row.size), donor)
        recipient = int(rest[np.argmin(row[rest])])
        amount = min(epsilon / 2, row[donor])
        if row[donor] <= 0:
            raise ParameterError(f"row {a} has no movable mass")
        row[donor] -= amount
        row[recipient] += amount
    return q


def low_rank_benign(n_actions: int, n_contexts: int, gap: float, *, min_gap: float | None = None,
                    seed: int = 0) -> Environment:
    """Benign instance whose marginal rows span a 2-dimensional subspace.

    Rows are ``lam * p + (1 - lam) * q`` with ``p`` uniform on the first half
    of the contexts and ``q`` uniform on the second half.  Conditional means
    are ``1/2 +/- gap/2`` on the two halves, so ``mu(a) = 1/2 - gap/2 +
    gap * lam_a``.  Action 0 has ``lam = 1`` and is optimal; the other
    mixing weights are drawn uniformly from ``[0, 1 - min_gap / gap]``
    (``[0, 1)`` when ``min_gap`` is None).
    """
    if n_contexts < 2 or n_contexts % 2:
        raise ParameterError("n_contexts must be even and >= 2")
    if not 0 < gap <= 1:
        raise ParameterError("gap must lie in (0, 1]")
    hi = 1.0 if min_gap is None else 1.0 - min_gap / gap
    if hi <= 0:
        raise ParameterError("min_gap must be smaller than gap")
    rng = np.random.default_rng(seed)
    lam = np.concatenate([[1.0], rng.uniform(0.0, hi, size=n_actions - 1)])
    if min_gap is not None:
        lam[1] = hi
    half = n_contexts // 2
    p = np.r_[np.full(half, 1 / half), np.zeros(half)]
    q = np.r_[np.zeros(half), np.full(half, 1 / half)]
    rows = lam[:, None] * p + (1 - lam[:, None]) * q
    mu_z = np.r_[np.full(half, 0.5 + gap / 2), np.full(half, 0.5 - gap / 2)]
    return benign_from_parts(BenignSpec(rows, mu_z), name=f"lowrank-A{n_actions}-Z{n_contexts}-g{gap:g}")
