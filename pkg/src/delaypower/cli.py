"""Command-line front end.

    delaypower solve    --B 10 --M 5 --C 4 --alpha 0.4 --lambda 1 --out out/
    delaypower train    --agent qgreedyucb --horizon 10000000 --seed 3
    delaypower tradeoff --B 6 --M 3 --C 3 --alpha 0.5
    delaypower sweep    --sweep lambda --lambdas 0,1,2
    delaypower compare  --agents qgreedyucb,qlearning --seeds 0-9

Flags override keys read from ``--config``.  Each command writes its CSVs and
a ``run.meta`` sidecar holding the effective configuration.  Exit status is 0
only when every requested output was written.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from . import config as cfgmod
from . import io
from .exact import (NoConvergenceError, SingularChainError, InfeasibleConstraintError,
                    constraint_solve, count_monotone_policies, evaluate_policy,
                    policy_points, relative_value_iteration, sweep_lambda, tradeoff_frontier)
from .learners import ActionSpace
from .mdp import ParameterError, build_transition_model
from .sim import exact_reference, multi_seed_compare, run_experiment
from .streams import GENERATOR_NAME


class UsageError(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--config", help="key = value config file; flags override its entries")
    g.add_argument("--out", help="output directory")
    g.add_argument("--B", type=int)
    g.add_argument("--M", type=int)
    g.add_argument("--C", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--phi", type=float)
    g.add_argument("--theta", type=float)
    g.add_argument("--ref-state", dest="ref_state", type=int)
    g.add_argument("--horizon", type=int)
    g.add_argument("--seed", "--seeds", dest="seeds", type=_ints,
                   help="seed list, e.g. 0,1,2 or 0-9")
    g.add_argument("--agent", "--agents", dest="agents", type=_names,
                   help="qgreedyucb, qlearning and/or arl (comma separated)")
    g.add_argument("--lambdas", type=_floats)
    g.add_argument("--alphas", type=_floats)
    g.add_argument("--sweep", choices=("lambda", "alpha"))
    g.add_argument("--cap", type=int, help="maximum number of policies to enumerate")
    g.add_argument("--e-th", dest="e_th", type=float, help="average power budget for tradeoff")
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)

    parser = argparse.ArgumentParser(prog="delaypower", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="exact optimal gain and policy")
    sub.add_parser("train", parents=[common], help="train one agent, write metrics and policy")
    sub.add_parser("tradeoff", parents=[common], help="delay-power points of all monotone policies")
    sub.add_parser("sweep", parents=[common], help="lambda or alpha sweep of the exact solution")
    sub.add_parser("compare", parents=[common], help="multi-seed comparison of agents")
    return parser


_FLAG_KEYS = ("out", "B", "M", "C", "alpha", "lam", "sigma", "delta", "epsilon", "phi", "theta",
              "ref_state", "horizon", "seeds", "agents", "lambdas", "alphas", "sweep", "cap",
              "e_th", "tol", "max_iter")


def resolve_config(args: argparse.Namespace) -> cfgmod.RunConfig:
    base = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    cfg = cfgmod.override(base, **{k: getattr(args, k) for k in _FLAG_KEYS})
    # enumeration is meaningful on the degenerate B == M chain; everything else needs B > M
    problems = cfgmod.problems(cfg, strict=args.command != "tradeoff")
    if problems:
        raise ParameterError(problems)
    return cfg


def _meta(cfg: cfgmod.RunConfig, command: str, **extra) -> dict:
    items = {"command": command, "version": __version__, "generator": GENERATOR_NAME}
    items.update(cfg.as_dict())
    items.update(extra)
    return items


def cmd_solve(cfg: cfgmod.RunConfig, out: Path) -> int:
    model = build_transition_model(cfg.queue_params())
    res = relative_value_iteration(model, tol=cfg.tol, max_iter=cfg.max_iter)
    ev = evaluate_policy(model, res.policy)
    io.write_policy(out / "policy.csv", res.policy)
    io.write_metadata(out / "run.meta", _meta(cfg, "solve", method="exact/PI baseline (relative value iteration)",
                                              gain=res.gain, D=ev.D, E=ev.E, iterations=res.iterations))
    print(f"gain = {res.gain:.6g}  (exact/PI baseline)")
    print(f"policy = {io.join_policy(res.policy)}  D = {ev.D:.6g}  E = {ev.E:.6g}")
    return 0


def cmd_train(cfg: cfgmod.RunConfig, out: Path) -> int:
    if cfg.horizon < 1:
        raise UsageError("horizon must be >= 1")
    if not cfg.seeds or not cfg.agents:
        raise UsageError("train needs one agent and one seed")
    p = cfg.queue_params()
    kind, seed = cfg.agents[0], cfg.seeds[0]
    g_star, policy = exact_reference(p)
    m = run_experiment(p, kind, cfg.learner_config(seed), cfg.horizon, g_star, exact_policy=policy)
    learned = io.deterministic_from_stochastic(m.final_policy)
    io.write_metrics(out / "metrics.csv", m)
    io.write_policy(out / "policy.csv", learned)
    io.write_qtable(out / "qtable.csv", m.tables, ActionSpace.from_params(p))
    io.write_metadata(out / "run.meta", _meta(
        cfg, "train", agent=kind, seed=seed, g_star=g_star, final_avg_reward=m.final_avg_reward,
        final_regret=m.final_regret, matches_exact=bool(m.match[-1]), dropped_total=m.dropped_total))
    print(f"{kind} seed {seed}: final average reward {m.final_avg_reward:.6g} "
          f"(exact {g_star:.6g}), regret {m.final_regret:.6g}")
    print(f"learned policy = {io.join_policy(learned)}  matches exact: {bool(m.match[-1])}")
    return 0


def cmd_tradeoff(cfg: cfgmod.RunConfig, out: Path) -> int:
    p = cfg.queue_params()
    count = count_monotone_policies(p)
    if count > cfg.cap:
        raise UsageError(f"{count} monotone policies exceed the cap of {cfg.cap}")
    policies, _, points = policy_points(p)
    frontier = tradeoff_frontier(points)
    io.write_tradeoff(out / "tradeoff.csv", points, frontier)
    extra = {"n_policies": count, "frontier": [v.policy_id for v in frontier]}
    print(f"{count} monotone policies, {len(frontier)} frontier vertices")
    for v in frontier:
        print(f"  policy {v.policy_id}: D = {v.D:.6g}  E = {v.E:.6g}  actions {io.join_policy(policies[v.policy_id])}")
    if cfg.e_th is not None:
        mix = constraint_solve(frontier, cfg.e_th)
        extra["constraint_weights"] = [f"{k}:{w!r}" for k, w in mix.weights.items()]
        print(f"E_th = {cfg.e_th}: D = {mix.D:.6g}, E = {mix.E:.6g}, time-sharing "
              + ", ".join(f"policy {k} w={w:.6g}" for k, w in mix.weights.items()))
    io.write_metadata(out / "run.meta", _meta(cfg, "tradeoff", **extra))
    return 0


def cmd_sweep(cfg: cfgmod.RunConfig, out: Path) -> int:
    p = cfg.queue_params()
    failures = []
    if cfg.sweep == "lambda":
        if not cfg.lambdas:
            raise UsageError("empty lambda grid")
        points = []
        for lam in cfg.lambdas:
            try:
                points.extend(sweep_lambda(p, [lam], tol=cfg.tol, max_iter=cfg.max_iter))
            except (NoConvergenceError, SingularChainError, ValueError) as exc:
                failures.append(f"lambda={lam}: {exc}")
        io.write_sweep(out / "sweep.csv", points)
        for pt in points:
            print(f"lambda = {pt.lam:g}: gain {pt.result.gain:.6g}  D {pt.evaluation.D:.6g}  "
                  f"E {pt.evaluation.E:.6g}  policy {io.join_policy(pt.result.policy)}")
    else:
        if not cfg.alphas:
            raise UsageError("empty alpha grid")
        rows = []
        for alpha in cfg.alphas:
            try:
                pa = p.with_alpha(alpha)
                model = build_transition_model(pa)
                res = relative_value_iteration(model, tol=cfg.tol, max_iter=cfg.max_iter)
                ev = evaluate_policy(model, res.policy)
            except (NoConvergenceError, SingularChainError, ValueError) as exc:
                failures.append(f"alpha={alpha}: {exc}")
                continue
            rows.append((alpha, res.gain, ev.D, ev.E, io.join_policy(res.policy)))
            io.write_policy(out / f"policy_alpha_{alpha:g}.csv", res.policy)
            line = f"alpha = {alpha:g}: gain {res.gain:.6g}  policy {io.join_policy(res.policy)}"
            if cfg.horizon > 0 and cfg.agents:
                m = run_experiment(pa, cfg.agents[0], cfg.learner_config(), cfg.horizon, res.gain,
                                   exact_policy=res.policy)
                learned = io.deterministic_from_stochastic(m.final_policy)
                io.write_policy(out / f"learned_policy_alpha_{alpha:g}.csv", learned)
                io.write_metrics(out / f"metrics_alpha_{alpha:g}.csv", m)
                line += f"  learned {io.join_policy(learned)}"
            print(line)
        io.write_csv(out / "alpha_sweep.csv", io.ALPHA_SWEEP_COLUMNS, rows)
    io.write_metadata(out / "run.meta", _meta(cfg, "sweep", failures=len(failures)))
    for f in failures:
        print(f"failed: {f}", file=sys.stderr)
    return 1 if failures else 0


def cmd_compare(cfg: cfgmod.RunConfig, out: Path) -> int:
    if len(cfg.agents) < 2:
        raise UsageError("compare needs at least two agent kinds")
    if len(set(cfg.agents)) != len(cfg.agents):
        raise UsageError(f"duplicate agent kinds in {list(cfg.agents)}")
    if not cfg.seeds:
        raise UsageError("compare needs at least one seed")
    if cfg.horizon < 1:
        raise UsageError("horizon must be >= 1")
    p = cfg.queue_params()
    rows, summary, runs = multi_seed_compare(p, cfg.agents, cfg.learner_config(), cfg.horizon,
                                             cfg.seeds, keep_runs=True)
    io.write_compare(out / "compare.csv", rows)
    for (kind, seed), m in runs.items():
        io.write_metrics(out / f"metrics_{kind}_seed{seed}.csv", m)
    io.write_metadata(out / "run.meta", _meta(cfg, "compare"))
    for kind, s in summary.items():
        print(f"{kind}: mean final avg reward {s['mean_final_avg_reward']:.6g}, "
              f"mean final regret {s['mean_final_regret']:.6g}, "
              f"exact policy at T for {s['final_matches']}/{len(cfg.seeds)} seeds")
    return 0


COMMANDS = {"solve": cmd_solve, "train": cmd_train, "tradeoff": cmd_tradeoff,
            "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        return COMMANDS[args.command](cfg, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"delaypower {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, cfgmod.ConfigError, NoConvergenceError, SingularChainError,
            InfeasibleConstraintError) as exc:
        print(f"delaypower {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
