"""Finite stochastic environments with post-action contexts.

An environment assigns to every action ``a`` a distribution over
context-reward pairs: a context marginal (row ``a`` of ``marginals``) and,
for each context ``z``, a reward model for ``Y | Z = z``.  Rewards live in
``[0, 1]`` and are either Bernoulli or deterministic.
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ParameterError, ValidationError

ROW_SUM_TOL = 1e-12
RANK_TOL = 1e-9

BERNOULLI = "bernoulli"
DETERMINISTIC = "det"


@dataclass(frozen=True)
class RewardModel:
    """Conditional reward law at one (action, context) cell.

    ``value`` is the success probability for Bernoulli models and the
    constant reward for deterministic ones; in both cases it is the mean.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in (BERNOULLI, DETERMINISTIC):
            raise ValidationError(f"unknown reward kind {self.kind!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValidationError(f"reward parameter {self.value} outside [0, 1]")

    @property
    def mean(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        key = "p" if self.kind == BERNOULLI else "v"
        return {"kind": self.kind, key: self.value}


def Bernoulli(p: float) -> RewardModel:
    return RewardModel(BERNOULLI, float(p))


def Deterministic(v: float) -> RewardModel:
    return RewardModel(DETERMINISTIC, float(v))


class StepOutcome(NamedTuple):
    context: int
    reward: float


@dataclass(frozen=True)
class BenignSpec:
    """Marginals plus one conditional mean per context.

    Every action shares the reward law at a given context, which is what
    makes the resulting environment conditionally benign.
    """

    marginals: np.ndarray
    mu_z: np.ndarray
    reward_kind: str = BERNOULLI


class Environment:
    """Immutable ``|A| x |Z|`` environment.

    Parameters
    ----------
    marginals : array_like, shape (n_actions, n_contexts)
        Row-stochastic matrix; row ``a`` is the context distribution of ``a``.
    rewards : sequence of sequences of RewardModel
        ``rewards[a][z]`` is the law of ``Y`` given ``Z = z`` under action ``a``.
    name : str, optional
        Label carried into simulation output.
    """

    def __init__(self, marginals, rewards: Sequence[Sequence[RewardModel]], name: str = "env"):
        q = np.array(marginals, dtype=float)
        if q.ndim != 2 or q.shape[0] < 1 or q.shape[1] < 1:
            raise ValidationError("marginals must be a non-empty 2-d array")
        _check_marginals(q)
        n_actions, n_contexts = q.shape
        if len(rewards) != n_actions:
            raise ValidationError(f"rewards has {len(rewards)} rows, expected {n_actions}")
        table = []
        for a, row in enumerate(rewards):
            if len(row) != n_contexts:
                raise ValidationError(
                    f"rewards row {a} has {len(row)} entries, expected {n_contexts}")
            table.append(tuple(row))
        self.name = name
        self.n_actions = n_actions
        self.n_contexts = n_contexts
        self.rewards = tuple(table)
        q.setflags(write=False)
        self.marginals = q

        means = np.array([[m.value for m in row] for row in table], dtype=float)
        det = np.array([[m.kind == DETERMINISTIC for m in row] for row in table])
        means.setflags(write=False)
        det.setflags(write=False)
        self.reward_means = means
        self.deterministic = det

        cum = np.cumsum(q, axis=1)
        for a in range(n_actions):
            last = int(np.flatnonzero(q[a] > 0)[-1])
            cum[a, last:] = 1.0
        cum.setflags(write=False)
        self._cum = cum
        # plain-Python copies for the per-step sampler
        self._cum_rows = [list(r) for r in cum]
        self._value_rows = [list(r) for r in means]
        self._det_rows = [list(map(bool, r)) for r in det]

    def __repr__(self):
        return f"Environment({self.name!r}, n_actions={self.n_actions}, n_contexts={self.n_contexts})"

    @property
    def action_means(self) -> np.ndarray:
        """Vector of ``mu(a)`` over all actions."""
        return np.einsum("az,az->a", self.marginals, self.reward_means)

    def to_dict(self) -> dict:
        return {
            "n_actions": self.n_actions,
            "n_contexts": self.n_contexts,
            "marginals": self.marginals.tolist(),
            "rewards": [[m.to_dict() for m in row] for row in self.rewards],
        }

    def with_marginals(self, marginals, name: str | None = None) -> "Environment":
        return Environment(marginals, self.rewards, name=name or self.name)


def _check_marginals(q: np.ndarray) -> None:
    bad = np.argwhere(~np.isfinite(q) | (q < 0))
    if bad.size:
        a, z = bad[0]
        raise ValidationError(f"marginal entry at row {a}, column {z} is negative or not finite")
    sums = q.sum(axis=1)
    off = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if off.size:
        a = int(off[0])
        raise ValidationError(f"marginal row {a} sums to {sums[a]!r}, not 1")


def _check_action(env: Environment, a: int) -> None:
    if not 0 <= a < env.n_actions:
        raise ParameterError(f"action {a} out of range for {env.n_actions} actions")


def mean_reward(env: Environment, a: int) -> float:
    """Expected reward ``sum_z nu_a(z) * E[Y | Z=z, a]``."""
    _check_action(env, a)
    return float(env.marginals[a] @ env.reward_means[a])


def optimal_stats(env: Environment) -> tuple[int, float]:
    """Return the lowest-index optimal action and the minimal positive-side gap."""
    if env.n_actions < 2:
        raise ParameterError("degenerate action set: need at least 2 actions")
    mu = env.action_means
    a_star = int(np.argmax(mu))
    others = np.delete(mu, a_star)
    return a_star, float(mu[a_star] - others.max())


def sample_step(env: Environment, a: int, rng: np.random.Generator) -> StepOutcome:
    """Draw one (context, reward) pair for action ``a``.

    Consumes exactly two uniforms from ``rng``: the first picks the context,
    the second resolves a Bernoulli reward (and is discarded for
    deterministic cells).  ``sample_many`` and :class:`StreamSampler` consume
    the stream identically.
    """
    _check_action(env, a)
    u_ctx = rng.random()
    u_rew = rng.random()
    return _outcome(env, a, u_ctx, u_rew)


def _outcome(env: Environment, a: int, u_ctx: float, u_rew: float) -> StepOutcome:
    z = bisect_right(env._cum_rows[a], u_ctx)
    if env._det_rows[a][z]:
        return StepOutcome(z, env._value_rows[a][z])
    return StepOutcome(z, 1.0 if u_rew < env._value_rows[a][z] else 0.0)


def sample_many(env: Environment, actions, rng: np.random.Generator):
    """Vectorized :func:`sample_step` over a fixed action sequence.

    Returns ``(contexts, rewards)`` arrays; the rng stream is consumed
    exactly as ``len(actions)`` successive ``sample_step`` calls would.
    """
    actions = np.asarray(actions, dtype=np.intp)
    n = actions.size
    if n == 0:
        return np.empty(0, dtype=np.intp), np.empty(0)
    u = rng.random((n, 2))
    cum = env._cum[actions]
    contexts = (cum <= u[:, :1]).sum(axis=1)
    values = env.reward_means[actions, contexts]
    det = env.deterministic[actions, contexts]
    rewards = np.where(det, values, (u[:, 1] < values).astype(float))
    return contexts, rewards


class StreamSampler:
    """Per-step sampler drawing uniforms from ``rng`` in blocks.

    Produces the same outcome sequence as repeated :func:`sample_step` calls
    on the same generator, at a fraction of the per-call overhead.
    """

    def __init__(self, env: Environment, rng: np.random.Generator, block: int = 4096):
        self.env = env
        self.rng = rng
        self.block = block
        self._buf: list[float] = []
        self._pos = 0

    def step(self, a: int) -> StepOutcome:
        pos = self._pos
        if pos + 2 > len(self._buf):
            self._buf = self.rng.random(2 * self.block).tolist()
            pos = 0
        self._pos = pos + 2
        buf = self._buf
        return _outcome(self.env, a, buf[pos], buf[pos + 1])

    def many(self, actions):
        """Batch draw; continues the stream where ``step`` left off."""
        actions = np.asarray(actions, dtype=np.intp)
        n = actions.size
        left = (len(self._buf) - self._pos) // 2
        if left >= n:
            u = np.array(self._buf[self._pos:self._pos + 2 * n]).reshape(n, 2)
            self._pos += 2 * n
        else:
            head = np.array(self._buf[self._pos:self._pos + 2 * left])
            self._buf, self._pos = [], 0
            u = np.concatenate([head, self.rng.random(2 * (n - left))]).reshape(n, 2)
        env = self.env
        cum = env._cum[actions]
        contexts = (cum <= u[:, :1]).sum(axis=1)
        values = env.reward_means[actions, contexts]
        det = env.deterministic[actions, contexts]
        rewards = np.where(det, values, (u[:, 1] < values).astype(float))
        return contexts, rewards


def is_conditionally_benign(env: Environment, tol: float = 1e-12) -> bool:
    """True iff every reachable context has one shared reward law.

    Only actions putting positive mass on ``z`` are compared at ``z``.
    """
    if tol < 0:
        raise ParameterError("tol must be non-negative")
    for z in range(env.n_contexts):
        reach = np.flatnonzero(env.marginals[:, z] > 0)
        if reach.size <= 1:
            continue
        kinds = env.deterministic[reach, z]
        if kinds.any() != kinds.all():
            return False
        vals = env.reward_means[reach, z]
        if vals.max() - vals.min() > tol:
            return False
    return True


def dim_span(marginals, tol: float = RANK_TOL) -> int:
    """Numerical rank of the marginal matrix (relative singular-value cut)."""
    m = np.atleast_2d(np.asarray(marginals, dtype=float))
    if m.shape[0] == 0:
        raise ParameterError("need at least one row")
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 1
    return max(1, int(np.sum(s > tol * s[0])))


def benign_from_parts(spec: BenignSpec, name: str = "benign") -> Environment:
    q = np.asarray(spec.marginals, dtype=float)
    mu = np.asarray(spec.mu_z, dtype=float)
    if q.ndim != 2 or mu.shape != (q.shape[1],):
        raise ValidationError("mu_z length must equal the number of contexts")
    if np.any(mu < 0) or np.any(mu > 1):
        raise ValidationError("mu_z entries must lie in [0, 1]")
    if spec.reward_kind not in (BERNOULLI, DETERMINISTIC):
        raise ValidationError(f"unknown reward kind {spec.reward_kind!r}")
    row = [RewardModel(spec.reward_kind, float(v)) for v in mu]
    return Environment(q, [row] * q.shape[0], name=name)


def environment_from_dict(data: dict, name: str = "env") -> Environment:
    """Build an environment from the JSON object layout, validating as it goes."""
    try:
        n_actions = int(data["n_actions"])
        n_contexts = int(data["n_contexts"])
        marg = data["marginals"]
        raw = data["rewards"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed environment object: {exc}") from exc
    if len(marg) != n_actions or len(raw) != n_actions:
        raise ValidationError("marginals/rewards row count differs from n_actions")
    for a, row in enumerate(marg):
        if len(row) != n_contexts:
            raise ValidationError(f"marginal row {a} has {len(row)} columns, expected {n_contexts}")
    rewards = []
    for a, row in enumerate(raw):
        if len(row) != n_contexts:
            raise ValidationError(f"rewards row {a} has {len(row)} columns, expected {n_contexts}")
        out = []
        for z, cell in enumerate(row):
            try:
                kind = cell["kind"]
                if kind == BERNOULLI:
                    out.append(Bernoulli(cell["p"]))
                elif kind == DETERMINISTIC:
                    out.append(Deterministic(cell["v"]))
                else:
                    raise ValidationError(f"unknown kind {kind!r}")
            except (KeyError, TypeError, ValidationError) as exc:
                raise ValidationError(f"reward cell at row {a}, column {z}: {exc}") from exc
        rewards.append(out)
    return Environment(marg, rewards, name=name)


def load_environment(path) -> Environment:
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    return environment_from_dict(data, name=path.stem)


def save_environment(env: Environment, path) -> None:
    with open(path, "w") as fh:
        json.dump(env.to_dict(), fh, indent=1)
        fh.write("\n")
