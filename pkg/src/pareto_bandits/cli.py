"""Command-line entry point: ``pareto-bandits <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, instances
from .config import build_environment, load_toml, policy_label
from .design import frank_wolfe_design, kw_gap, support_bound
from .env import dim_span, is_conditionally_benign, load_environment
from .errors import BanditError
from .harness import RunConfig, make_rng, play, spearman, sweep_csv, sweep_pareto, write_run
from .oracle import EVENTS, Trace, event_monitor, exact_design_grid
from .policies import CUCB, UCB

log = logging.getLogger("pareto_bandits")


def _cmd_instance(args):
    fam = args.family
    if fam == "d1-benign":
        env = instances.hard_benign(args.actions, args.contexts, args.delta)
    elif fam == "d1-variant":
        env = instances.hard_nonbenign_variant(args.actions, args.contexts, args.delta,
                                               args.a0 if args.a0 is not None else 2)
    elif fam == "d2":
        env = instances.agnostic_variant(args.actions, args.contexts, args.delta, args.a0)
    else:
        env = instances.pe_adversarial(args.contexts, args.delta, args.actions)
    text = json.dumps(env.to_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _cmd_design(args):
    env = load_environment(args.env)
    vectors = np.asarray(env.marginals)
    d = dim_span(vectors)
    if args.exact:
        design = exact_design_grid(vectors, args.resolution)
    else:
        design = frank_wolfe_design(vectors, d, tol=args.tol)
    g = kw_gap(vectors, design)
    print(f"dim_span      {d}")
    print(f"support size  {len(design.support)}  (bound {support_bound(d):.4g})")
    print(f"g(pi)         {g:.6f}  (certified <= {2 * d})" if not args.exact else f"g(pi)         {g:.6f}")
    for a in design.support:
        print(f"  action {a:4d}  weight {design.weights[a]:.6f}")


def _event_runs(env, which, runs, horizon, delta, seed):
    bad, firsts = 0, []
    for r in range(runs):
        if which == "EA":
            pol = UCB(env.n_actions, horizon, delta)
        else:
            pol = CUCB(env.marginals, horizon, delta)
        actions, _, ctx, rew, _ = play(env, pol, horizon, make_rng(seed, r), keep_trace=True)
        rep = event_monitor(Trace(actions, ctx, rew), env, delta, which)
        if not rep.held:
            bad += 1
            firsts.append(rep.first_violation)
    return bad, firsts


def _cmd_verify(args):
    if args.design:
        return _verify_design()
    if not args.env:
        raise BanditError("verify needs --env <file> or --design")
    env = load_environment(args.env)
    events = [args.event] if args.event else list(EVENTS)
    if "EZ" in events and not is_conditionally_benign(env):
        print("EZ skipped: environment is not conditionally benign")
        events.remove("EZ")
    for which in events:
        bad, firsts = _event_runs(env, which, args.runs, args.horizon, args.delta, args.seed)
        rate = bad / args.runs
        allow = args.delta + 3 * math.sqrt(args.delta * (1 - args.delta) / args.runs)
        first = min(firsts) if firsts else "-"
        print(f"{which:4s} runs={args.runs} violations={bad} rate={rate:.4f} "
              f"allowance={allow:.4f} earliest={first} {'ok' if rate <= allow else 'EXCEEDED'}")


def _verify_design():
    rng = np.random.default_rng(2024)
    cases = [("basis pair", np.eye(2)),
             ("pe_adversarial |Z|=3", instances.pe_adversarial(3, 0.3).marginals)]
    for k in range(5):
        cases.append((f"random d=2 #{k}", instances.low_rank_benign(3, 4, 0.5, seed=k).marginals))
    cases.append(("random simplex 4x3", rng.dirichlet(np.ones(3), size=4)))
    worst = 0.0
    for name, vec in cases:
        fw = frank_wolfe_design(vec, tol=1e-4)
        ex = exact_design_grid(vec, 100)
        g_fw, g_ex = kw_gap(vec, fw), kw_gap(vec, ex)
        rel = g_fw / g_ex - 1
        worst = max(worst, rel)
        print(f"{name:24s} d={dim_span(vec)} fw g={g_fw:.5f} grid g={g_ex:.5f} rel={rel:+.4f}")
    print(f"worst relative excess {worst:+.4f}")


def _load_cfg(path):
    data = load_toml(path)
    return data, Path(path).resolve().parent


def _cmd_simulate(args):
    data, base = _load_cfg(args.config)
    cfg = RunConfig.from_dict(data, base_dir=base)
    if args.workers:
        cfg.workers = args.workers
    from .harness import run_simulation
    curve = run_simulation(cfg)
    meta = write_run(cfg, curve, args.out, plot=not args.no_plot)
    print(f"{policy_label(cfg.policy)} on {meta['env']}: mean Reg(T={cfg.horizon}) = "
          f"{meta['mean_final_regret']:.3f} over {cfg.replicates} replicates -> {args.out}")


def _cmd_sweep(args):
    data, base = _load_cfg(args.config)
    cfg = RunConfig.from_dict({**data, "env": data["benign_env"]}, base_dir=base)
    if args.workers:
        cfg.workers = args.workers
    benign = build_environment(data["benign_env"], base)
    grid = [float(z) for z in data.get("z2", [])]
    if "z2_multipliers" in data:
        scale = math.sqrt(benign.n_actions / benign.n_contexts)
        grid += [float(m) * scale for m in data["z2_multipliers"]]
    rows = sweep_pareto(cfg, grid, data["benign_env"], data["hard_env"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "pareto.csv").write_text(sweep_csv(rows))
    rho = spearman([r.benign_regret for r in rows], [r.hard_regret for r in rows])
    meta = {"config_hash": cfg.config_hash(), "seed": cfg.seed, "code_version": __version__,
            "z2_grid": grid, "rows": len(rows), "spearman": rho}
    (out / "metadata.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    if not args.no_plot and rows:
        from .plotting import plot_pareto
        plot_pareto(rows, out / "pareto.svg")
    for r in rows:
        print(f"Z2={r.z2:8.4f}  benign={r.benign_regret:10.2f}  hard={r.hard_regret:10.2f}")
    print(f"spearman(benign, hard) = {rho:+.3f}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pareto-bandits",
                                description="Bandits with post-action contexts.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("instance", help="emit a hard instance as environment JSON")
    s.add_argument("--family", required=True,
                   choices=["d1-benign", "d1-variant", "d2", "pe-adversarial"])
    s.add_argument("--actions", type=int, required=True)
    s.add_argument("--contexts", type=int, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--a0", type=int)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_instance)

    s = sub.add_parser("design", help="compute a G-optimal design for an environment")
    s.add_argument("--env", required=True)
    s.add_argument("--exact", action="store_true", help="grid search (at most 5 actions)")
    s.add_argument("--tol", type=float, default=0.01)
    s.add_argument("--resolution", type=int, default=100)
    s.set_defaults(func=_cmd_design)

    s = sub.add_parser("simulate", help="run a seeded Monte Carlo experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.add_argument("--no-plot", action="store_true")
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("sweep-pareto", help="trace the benign/hard regret trade-off")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.add_argument("--no-plot", action="store_true")
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("verify", help="run the brute-force oracles")
    s.add_argument("--env")
    s.add_argument("--event", choices=list(EVENTS))
    s.add_argument("--runs", type=int, default=100)
    s.add_argument("--horizon", type=int, default=2000)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--design", action="store_true")
    s.set_defaults(func=_cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (BanditError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
