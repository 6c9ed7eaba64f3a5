"""Seeded Monte Carlo runs, pseudo-regret accounting and result export."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .balancing import DynamicBalancing
from .config import build_environment, build_policy, policy_label, rate_pair, with_r2_scale
from .env import Environment, StreamSampler
from .errors import ConfigError, ParameterError

log = logging.getLogger(__name__)

GENERATOR = "numpy.random.PCG64 seeded with splitmix64(base_seed XOR replicate)"
CSV_COLUMNS = ("run_id", "policy", "env", "replicate", "t", "cum_regret", "learner")
_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def replicate_seed(base_seed: int, replicate: int) -> int:
    return splitmix64((int(base_seed) ^ int(replicate)) & _MASK64)


def make_rng(base_seed: int, replicate: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(replicate_seed(base_seed, replicate)))


def default_checkpoints(horizon: int, n: int = 32) -> np.ndarray:
    pts = np.unique(np.round(np.logspace(0, math.log10(horizon), n)).astype(np.int64))
    return np.union1d(pts[(pts >= 1) & (pts <= horizon)], [horizon])


@dataclass
class RunConfig:
    env: object
    policy: dict
    horizon: int
    replicates: int = 1
    seed: int = 0
    checkpoints: object = None
    delta: object = 0.1
    workers: int = 1
    base_dir: object = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.checkpoints is None or isinstance(self.checkpoints, int):
            self.checkpoints = default_checkpoints(self.horizon, self.checkpoints or 32)
        cps = np.asarray(self.checkpoints, dtype=np.int64)
        if cps.size == 0 or np.any(np.diff(cps) <= 0) or cps[0] < 1 or cps[-1] > self.horizon:
            raise ConfigError("checkpoints must be sorted, distinct and within [1, horizon]")
        self.checkpoints = cps

    def environment(self) -> Environment:
        return build_environment(self.env, self.base_dir)

    def describe(self) -> dict:
        env = self.env
        env_desc = env.to_dict() if isinstance(env, Environment) else env
        return {
            "env": env_desc, "policy": self.policy, "horizon": self.horizon,
            "replicates": self.replicates, "seed": self.seed, "delta": self.delta,
            "checkpoints": [int(c) for c in self.checkpoints],
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.describe(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "RunConfig":
        try:
            return cls(env=data["env"], policy=data["policy"], horizon=int(data["horizon"]),
                       replicates=int(data.get("replicates", 1)), seed=int(data.get("seed", 0)),
                       checkpoints=data.get("checkpoints"), delta=data.get("delta", 0.1),
                       workers=int(data.get("workers", 1)), base_dir=base_dir)
        except KeyError as exc:
            raise ConfigError(f"run config is missing {exc}") from exc


@dataclass
class Replicate:
    regret: np.ndarray
    learners: np.ndarray
    reward: float
    actions: np.ndarray = field(default=None, repr=False)
    contexts: np.ndarray = field(default=None, repr=False)
    rewards: np.ndarray = field(default=None, repr=False)


def pseudo_regret(env: Environment, actions) -> np.ndarray:
    """Cumulative ``t mu(a*) - sum_s mu(A_s)`` as prefix sums of gaps."""
    actions = np.asarray(actions, dtype=np.intp)
    if actions.size and (actions.min() < 0 or actions.max() >= env.n_actions):
        raise ParameterError("action index out of range")
    mu = env.action_means
    return np.cumsum(mu.max() - mu[actions])


def play(env: Environment, policy, horizon: int, rng: np.random.Generator, keep_trace=False):
    """Run one episode; returns ``(actions, learners, contexts, rewards, total_reward)``.

    ``learners`` is None unless the policy is a balancer; ``contexts`` and
    ``rewards`` are None unless ``keep_trace``.
    """
    sampler = StreamSampler(env, rng)
    actions = np.empty(horizon, dtype=np.intp)
    learners = np.empty(horizon, dtype=np.int8) if isinstance(policy, DynamicBalancing) else None
    ctx_log = np.empty(horizon, dtype=np.intp) if keep_trace else None
    rew_log = np.empty(horizon) if keep_trace else None
    total = 0.0
    commit = getattr(policy, "commit", None)
    select, observe, step = policy.select, policy.observe, sampler.step
    t = 1
    while t <= horizon:
        if commit is not None:
            block = commit(t, horizon - t + 1)
            n = len(block)
            if n > 1:
                ctx, rew = sampler.many(block)
                policy.observe_block(block, ctx, rew)
                actions[t - 1:t - 1 + n] = block
                total += float(rew.sum())
                if keep_trace:
                    ctx_log[t - 1:t - 1 + n] = ctx
                    rew_log[t - 1:t - 1 + n] = rew
                t += n
                continue
        a = select(t)
        z, y = step(a)
        observe(a, z, y)
        actions[t - 1] = a
        total += y
        if learners is not None:
            learners[t - 1] = policy.learner_id
        if keep_trace:
            ctx_log[t - 1] = z
            rew_log[t - 1] = y
        t += 1
    return actions, learners, ctx_log, rew_log, total


def run_replicate(cfg: RunConfig, replicate: int, keep_trace: bool = False) -> Replicate:
    env = cfg.environment()
    policy = build_policy(cfg.policy, env, cfg.horizon, cfg.delta, cfg.base_dir)
    if getattr(policy, "n_actions", env.n_actions) != env.n_actions:
        raise ConfigError(
            f"policy expects {policy.n_actions} actions, environment has {env.n_actions}")
    rng = make_rng(cfg.seed, replicate)
    actions, learners, ctx, rew, total = play(env, policy, cfg.horizon, rng, keep_trace)
    idx = cfg.checkpoints - 1
    regret = pseudo_regret(env, actions)[idx]
    lrn = learners[idx].astype(np.int64) if learners is not None else np.full(idx.size, -1)
    out = Replicate(regret, lrn, total)
    if keep_trace:
        out.actions, out.contexts, out.rewards = actions, ctx, rew
    return out


def _run_one(args):
    cfg, r, keep = args
    return run_replicate(cfg, r, keep)


@dataclass
class RegretCurve:
    checkpoints: np.ndarray
    per_replicate: np.ndarray
    learners: np.ndarray
    rewards: np.ndarray
    replicate_ids: np.ndarray
    traces: list = field(default=None, repr=False)

    @property
    def mean(self) -> np.ndarray:
        return self.per_replicate.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        n = self.per_replicate.shape[0]
        if n < 2:
            return np.zeros(self.per_replicate.shape[1])
        return self.per_replicate.std(axis=0, ddof=1) / math.sqrt(n)

    @property
    def final(self) -> np.ndarray:
        return self.per_replicate[:, -1]


def run_simulation(cfg: RunConfig, replicates=None, keep_trace: bool = False) -> RegretCurve:
    """Run every replicate and reduce them in replicate order.

    With ``cfg.workers > 1`` replicates run in worker processes; results are
    collected in index order, so output does not depend on scheduling.
    """
    ids = list(range(cfg.replicates)) if replicates is None else list(replicates)
    jobs = [(cfg, r, keep_trace) for r in ids]
    if cfg.workers > 1 and len(ids) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    return RegretCurve(
        checkpoints=cfg.checkpoints.copy(),
        per_replicate=np.vstack([r.regret for r in results]),
        learners=np.vstack([r.learners for r in results]),
        rewards=np.array([r.reward for r in results]),
        replicate_ids=np.array(ids),
        traces=[(r.actions, r.contexts, r.rewards) for r in results] if keep_trace else None,
    )


def curve_csv(curve: RegretCurve, run_id: str, policy: str, env: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for i, rep in enumerate(curve.replicate_ids):
        for j, t in enumerate(curve.checkpoints):
            w.writerow([run_id, policy, env, int(rep), int(t),
                        repr(float(curve.per_replicate[i, j])), int(curve.learners[i, j])])
    return buf.getvalue()


def summary_csv(curve: RegretCurve) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "mean_regret", "stderr"))
    for t, m, s in zip(curve.checkpoints, curve.mean, curve.stderr):
        w.writerow([int(t), repr(float(m)), repr(float(s))])
    return buf.getvalue()


def write_run(cfg: RunConfig, curve: RegretCurve, out_dir, plot: bool = True) -> dict:
    """Write ``regret.csv``, ``summary.csv``, ``metadata.json`` and ``regret.svg``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    env = cfg.environment()
    digest = cfg.config_hash()
    run_id = digest[:12]
    label = policy_label(cfg.policy)
    (out / "regret.csv").write_text(curve_csv(curve, run_id, label, env.name))
    (out / "summary.csv").write_text(summary_csv(curve))
    meta = {
        "run_id": run_id, "config_hash": digest, "seed": cfg.seed, "generator": GENERATOR,
        "code_version": __version__, "policy": label, "env": env.name,
        "horizon": cfg.horizon, "replicates": cfg.replicates,
        "mean_final_regret": float(curve.final.mean()),
        "mean_realized_reward": float(curve.rewards.mean()),
        "config": cfg.describe(),
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=1, sort_keys=True, default=str) + "\n")
    if plot:
        from .plotting import plot_regret
        plot_regret({label: curve}, out / "regret.svg", title=env.name)
    return meta


def spearman(x, y) -> float:
    """Spearman rank correlation (average ranks for ties); 0 for constant input."""
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    return float(stats.spearmanr(x, y).statistic)


@dataclass
class SweepRow:
    z2: float
    benign_regret: float
    benign_stderr: float
    hard_regret: float
    hard_stderr: float


def sweep_pareto(cfg: RunConfig, z2_grid, benign_env, hard_env) -> list:
    """Run the balancer at each ``Z2`` on both environments.

    ``Z2`` sets ``R2 = Z2 sqrt(|A| T)``; values giving an invalid rate pair
    are skipped with a warning.
    """
    if cfg.policy.get("policy") != "db":
        raise ConfigError("sweep_pareto needs a 'db' policy spec")
    if len(z2_grid) == 0:
        raise ConfigError("z2 grid is empty")
    benign = build_environment(benign_env, cfg.base_dir)
    hard = build_environment(hard_env, cfg.base_dir)
    if (benign.n_actions, benign.n_contexts) != (hard.n_actions, hard.n_contexts):
        raise ConfigError("benign and hard environments must share |A| and |Z|")
    rows = []
    for z2 in z2_grid:
        spec = with_r2_scale(cfg.policy, z2)
        try:
            rate_pair(spec["rates"], benign.n_actions, benign.n_contexts, cfg.horizon).check(
                benign.n_actions, benign.n_contexts, cfg.horizon)
        except ParameterError as exc:
            warnings.warn(f"skipping Z2={z2}: {exc}")
            continue
        res = []
        for env in (benign, hard):
            sub = RunConfig(env=env, policy=spec, horizon=cfg.horizon, replicates=cfg.replicates,
                            seed=cfg.seed, checkpoints=[cfg.horizon], delta=cfg.delta,
                            workers=cfg.workers, base_dir=cfg.base_dir)
            curve = run_simulation(sub)
            res.append((float(curve.final.mean()), float(curve.stderr[-1])))
        rows.append(SweepRow(float(z2), res[0][0], res[0][1], res[1][0], res[1][1]))
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("z2", "benign_regret", "benign_stderr", "hard_regret", "hard_stderr"))
    for r in rows:
        w.writerow([repr(r.z2), repr(r.benign_regret), repr(r.benign_stderr),
                    repr(r.hard_regret), repr(r.hard_stderr)])
    return buf.getvalue()
