"""Build environments and policies from plain dict specs (JSON/TOML fragments)."""
from __future__ import annotations

import copy
import math
import sys
from pathlib import Path

import numpy as np

from . import instances
from .balancing import (DynamicBalancing, RatePair, d_cucb, d_pe, d_ucb, db_hyperparams)
from .elimination import PhasedElimination
from .env import Environment, environment_from_dict, load_environment
from .errors import BanditError, ConfigError
from .policies import CUCB, UCB, FixedArm

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

FAMILIES = ("d1-benign", "d1-variant", "d2", "pe-adversarial", "low-rank")


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def build_environment(spec, base_dir=None) -> Environment:
    """Environment from ``{"file": ...}``, ``{"family": ...}``, an inline env object, or an Environment."""
    if isinstance(spec, Environment):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError(f"environment spec must be a table, got {type(spec).__name__}")
    try:
        if "file" in spec:
            path = Path(spec["file"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return load_environment(path)
        if "marginals" in spec:
            return environment_from_dict(spec, name=spec.get("name", "inline"))
        family = spec.get("family")
        n_a, n_z = spec.get("actions"), spec.get("contexts")
        delta = spec.get("delta")
        if family == "d1-benign":
            return instances.hard_benign(n_a, n_z, delta, spec.get("z0_size"))
        if family == "d1-variant":
            return instances.hard_nonbenign_variant(n_a, n_z, delta, spec.get("a0", 2),
                                                    spec.get("z0_size"))
        if family == "d2":
            return instances.agnostic_variant(n_a, n_z, delta, spec.get("a0"), spec.get("z0_size"))
        if family == "pe-adversarial":
            return instances.pe_adversarial(n_z, delta, n_a)
        if family == "low-rank":
            return instances.low_rank_benign(n_a, n_z, spec["gap"], min_gap=spec.get("min_gap"),
                                             seed=spec.get("seed", 0))
    except (BanditError, KeyError, TypeError, OSError) as exc:
        raise ConfigError(f"cannot build environment from {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown environment family {spec.get('family')!r}; expected one of {FAMILIES}")


def resolve_delta(value, horizon: int) -> float:
    if isinstance(value, str):
        if value.replace(" ", "") == "1/T":
            return 1.0 / horizon
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse delta {value!r}") from exc
    return float(value)


def resolve_marginals(value, env: Environment, base_dir=None) -> np.ndarray:
    """``"true"``, ``"file:<path>"`` (env JSON or bare matrix) or ``"perturbed:<eps>"``."""
    if value is None or value == "true":
        return np.array(env.marginals)
    if not isinstance(value, str):
        return np.asarray(value, dtype=float)
    kind, _, arg = value.partition(":")
    if kind == "perturbed":
        return instances.perturb_marginals(env.marginals, float(arg))
    if kind == "file":
        path = Path(arg)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        import json
        with open(path) as fh:
            data = json.load(fh)
        q = np.asarray(data["marginals"] if isinstance(data, dict) else data, dtype=float)
        if q.shape != env.marginals.shape:
            raise ConfigError(f"marginals in {path} have shape {q.shape}, expected {env.marginals.shape}")
        return q
    raise ConfigError(f"unknown marginals source {value!r}")


def _learner_factor(spec: dict, policy, env: Environment, horizon: int, delta: float,
                    overrides: dict, slot: int) -> float:
    key = f"d{slot + 1}"
    if key in overrides:
        return float(overrides[key])
    kind = spec["policy"]
    if kind == "ucb":
        return d_ucb(env.n_actions, horizon, delta)
    if kind == "cucb":
        return d_cucb(env.n_contexts, horizon, delta)
    if kind == "pe":
        return d_pe(policy.d_span, env.n_actions, horizon, delta, overrides.get("pe_scale", 8.0))
    raise ConfigError(f"no default candidate-regret factor for base policy {kind!r}; set d_overrides.{key}")


def build_policy(spec: dict, env: Environment, horizon: int, default_delta=0.1, base_dir=None):
    """Instantiate a fresh policy for one run."""
    if not isinstance(spec, dict) or "policy" not in spec:
        raise ConfigError(f"policy spec needs a 'policy' key: {spec!r}")
    kind = spec["policy"]
    delta = resolve_delta(spec.get("delta", default_delta), horizon)
    try:
        if kind == "ucb":
            return UCB(env.n_actions, horizon, delta)
        if kind == "cucb":
            q = resolve_marginals(spec.get("marginals", "true"), env, base_dir)
            return CUCB(q, horizon, delta)
        if kind == "pe":
            q = resolve_marginals(spec.get("marginals", "true"), env, base_dir)
            return PhasedElimination(q, horizon, delta, design=spec.get("design", "fw"),
                                     fw_tol=spec.get("fw_tol", 0.01),
                                     grid_resolution=spec.get("grid_resolution", 60))
        if kind == "fixed":
            action = spec.get("action", "best")
            if action == "best":
                action = int(np.argmax(env.action_means))
            return FixedArm(int(action))
        if kind == "db":
            return _build_db(spec, env, horizon, delta, base_dir)
    except BanditError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid policy spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown policy {kind!r}")


def _build_db(spec, env, horizon, delta, base_dir):
    bases = spec.get("base")
    if not isinstance(bases, list) or len(bases) != 2:
        raise ConfigError("db needs exactly two base policy specs")
    overrides = spec.get("d_overrides", {})
    learners, factors = [], []
    for i, b in enumerate(bases):
        b = dict(b)
        b.setdefault("delta", delta)
        pol = build_policy(b, env, horizon, delta, base_dir)
        learners.append(pol)
        factors.append(_learner_factor(b, pol, env, horizon, resolve_delta(b["delta"], horizon),
                                       overrides, i))
    rates = rate_pair(spec.get("rates", {}), env.n_actions, env.n_contexts, horizon)
    hyper = db_hyperparams(rates, factors[0], factors[1], env.n_actions, env.n_contexts,
                           horizon, delta)
    return DynamicBalancing(learners, hyper, delta)


def rate_pair(rates: dict, n_actions: int, n_contexts: int, horizon: int) -> RatePair:
    r1 = rates.get("r1", "sqrt_ZT")
    if r1 == "sqrt_ZT":
        r1 = math.sqrt(n_contexts * horizon)
    scale = rates.get("r2_scale", "sqrt_A_over_Z")
    if scale == "sqrt_A_over_Z":
        scale = math.sqrt(n_actions / n_contexts)
    return RatePair(float(r1), float(scale) * math.sqrt(n_actions * horizon))


def with_r2_scale(spec: dict, z2: float) -> dict:
    out = copy.deepcopy(spec)
    out.setdefault("rates", {})["r2_scale"] = float(z2)
    return out


def policy_label(spec: dict) -> str:
    kind = spec.get("policy", "?")
    if kind == "db":
        return "db(" + ",".join(policy_label(b) for b in spec.get("base", [])) + ")"
    extra = []
    if spec.get("design") == "exact":
        extra.append("exact")
    m = spec.get("marginals")
    if isinstance(m, str) and m != "true":
        extra.append(m)
    return kind + (f"[{';'.join(extra)}]" if extra else "")

