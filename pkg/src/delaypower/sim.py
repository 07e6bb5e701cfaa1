"""Seeded simulation of the queue and long-horizon training runs.

A run starts from an empty queue and alternates ``agent.select`` / env step /
``agent.observe`` for ``T`` slots.  Cumulative reward is recorded on a
log-spaced schedule, from which the running average reward and the gain-based
regret ``t * g_star - sum(r)`` follow.

Two engines produce identical numbers: ``"python"`` drives the agent objects
from :mod:`delaypower.learners` one step at a time; ``"compiled"`` (default)
runs the same arithmetic in a numba loop, which is what makes 10^7-step runs
practical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernel
from .exact import relative_value_iteration
from .learners import (AGENT_KINDS, ActionSpace, LearnerConfig, QTables, extract_policy,
                       make_agent, matches_policy)
from .mdp import QueueParams, build_transition_model, check_params, immediate_reward, next_state
from .streams import AGENT_DRAWS_PER_STEP, GENERATOR_NAME, UniformStream, spawn_generators

CHUNK = 1 << 18
MAX_RECORDS = 2000


@dataclass(frozen=True)
class EnvState:
    q: int
    rng: UniformStream = field(repr=False, compare=False)
    t: int = 0
    dropped_total: int = 0


def make_env(seed: int, q0: int = 0) -> EnvState:
    env_gen, _ = spawn_generators(seed)
    return EnvState(q0, UniformStream(env_gen))


def env_step(env: EnvState, a: int, p: QueueParams) -> tuple[float, EnvState, int, int]:
    """One slot: reward on the pre-transition ``(q, a)``, then a Bernoulli arrival.

    The returned state shares ``env.rng`` (the stream advances by one draw).
    """
    r = immediate_reward(p, env.q, a)
    tau = 1 if env.rng.next() < p.alpha else 0
    q_next, dropped = next_state(p, env.q, a, tau)
    return r, replace(env, q=q_next, t=env.t + 1, dropped_total=env.dropped_total + dropped), tau, dropped


def log_schedule(T: int, max_points: int = MAX_RECORDS) -> np.ndarray:
    """Up to ``max_points`` log-spaced integer steps in ``[1, T]``, always containing both ends."""
    if T < 1:
        raise ValueError("T must be >= 1")
    n = min(max_points, T)
    pts = np.unique(np.round(np.logspace(0.0, np.log10(T), n)).astype(np.int64))
    return np.unique(np.concatenate([[1], pts, [T]])).astype(np.int64)


def regret_series(t: Sequence[int], cum_reward: Sequence[float], g_star: float) -> np.ndarray:
    """``regret(t) = t * g_star - cumulative reward``; unclamped."""
    if not np.isfinite(g_star):
        raise ValueError("g_star must be finite")
    t = np.asarray(t, dtype=float)
    return t * g_star - np.asarray(cum_reward, dtype=float)


@dataclass
class RunMetrics:
    agent: str
    seed: int
    horizon: int
    t: np.ndarray
    cum_reward: np.ndarray
    regret: np.ndarray | None
    match: np.ndarray | None
    final_policy: np.ndarray
    visit_histogram: np.ndarray
    tables: QTables
    dropped_total: int
    g_star: float | None = None
    rho: float | None = None
    generator: str = GENERATOR_NAME

    @property
    def avg_reward(self) -> np.ndarray:
        return self.cum_reward / self.t

    @property
    def avg_reward_series(self) -> list[tuple[int, float]]:
        return list(zip(self.t.tolist(), self.avg_reward.tolist()))

    @property
    def regret_series(self) -> list[tuple[int, float]] | None:
        if self.regret is None:
            return None
        return list(zip(self.t.tolist(), self.regret.tolist()))

    @property
    def final_avg_reward(self) -> float:
        return float(self.avg_reward[-1])

    @property
    def final_regret(self) -> float | None:
        return None if self.regret is None else float(self.regret[-1])

    @property
    def first_match_step(self) -> int | None:
        """First recorded step whose greedy policy equals the exact one."""
        if self.match is None or not self.match.any():
            return None
        return int(self.t[np.argmax(self.match)])


def _check_kind(kind: str) -> None:
    if kind not in AGENT_KINDS + ("fixed",):
        raise ValueError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}")


def run_experiment(p: QueueParams, kind: str, cfg: LearnerConfig | None = None, T: int = 1,
                   g_star: float | None = None, record: Sequence[int] | None = None, *,
                   exact_policy: Sequence[int] | None = None, policy: Sequence[int] | None = None,
                   engine: str = "compiled") -> RunMetrics:
    """Train one agent for ``T`` slots from an empty queue.

    ``cfg.seed`` seeds both the arrival stream and the agent stream.  Pass
    ``g_star`` to get a regret series and ``exact_policy`` to track when the
    greedy policy matches it.  ``kind="fixed"`` plays ``policy`` unchanged.
    """
    check_params(p)
    _check_kind(kind)
    cfg = cfg or LearnerConfig()
    problems = cfg.problems()
    if problems:
        raise ValueError("; ".join(problems))
    if T < 1:
        raise ValueError("T must be >= 1")
    record_t = log_schedule(T) if record is None else np.unique(np.asarray(record, dtype=np.int64))
    if len(record_t) == 0 or record_t[0] < 1 or record_t[-1] > T:
        raise ValueError("record steps must lie in [1, T]")

    if engine == "compiled":
        cum, match, tables, dropped, rho = _run_compiled(p, kind, cfg, T, record_t, exact_policy, policy)
    elif engine == "python":
        cum, match, tables, dropped, rho = _run_python(p, kind, cfg, T, record_t, exact_policy, policy)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    space = ActionSpace.from_params(p)
    if kind == "fixed":
        final = np.zeros((p.n_states, p.n_actions))
        final[np.arange(p.n_states), np.asarray(policy)] = 1.0
    else:
        final = extract_policy(tables, space)
    return RunMetrics(
        agent=kind, seed=cfg.seed, horizon=T, t=record_t, cum_reward=cum,
        regret=None if g_star is None else regret_series(record_t, cum, g_star),
        match=match, final_policy=final, visit_histogram=tables.N.copy(), tables=tables,
        dropped_total=dropped, g_star=g_star, rho=rho if kind == "arl" else None)


def _run_python(p, kind, cfg, T, record_t, exact_policy, policy):
    env_gen, agent_gen = spawn_generators(cfg.seed)
    env = EnvState(0, UniformStream(env_gen))
    agent = make_agent(kind, p, cfg, UniformStream(agent_gen), policy=policy)
    space = agent.space
    cum = 0.0
    out_cum = np.zeros(len(record_t))
    out_match = np.zeros(len(record_t), dtype=bool) if exact_policy is not None else None
    rec = 0
    for _ in range(T):
        s = env.q
        a = agent.select(s)
        r, env, _, _ = env_step(env, a, p)
        agent.observe(s, a, r, env.q)
        cum += r
        if rec < len(record_t) and env.t == record_t[rec]:
            out_cum[rec] = cum
            if out_match is not None:
                out_match[rec] = matches_policy(agent.tables, space, exact_policy)
            rec += 1
    return out_cum, out_match, agent.tables, env.dropped_total, getattr(agent, "rho", None)


def _run_compiled(p, kind, cfg, T, record_t, exact_policy, policy):
    model = build_transition_model(p)
    S, A = p.n_states, p.n_actions
    tables = QTables.zeros(S, A)
    env_gen, agent_gen = spawn_generators(cfg.seed)
    env_stream, agent_stream = UniformStream(env_gen), UniformStream(agent_gen)
    ints = np.zeros(5, dtype=np.int64)
    floats = np.zeros(2)
    lo = np.ascontiguousarray(model.lo)
    hi = np.ascontiguousarray(model.hi)
    R = np.ascontiguousarray(model.rewards)
    fixed = np.zeros(S, dtype=np.int64) if policy is None else np.asarray(policy, dtype=np.int64)
    has_exact = exact_policy is not None
    exact = np.asarray(exact_policy if has_exact else np.zeros(S), dtype=np.int64)
    out_cum = np.zeros(len(record_t))
    out_match = np.zeros(len(record_t), dtype=np.bool_)
    code = _kernel.KIND_CODES[kind]
    done = 0
    while done < T:
        n = min(CHUNK, T - done)
        env_u = env_stream.take(n)
        agent_u = agent_stream.take(AGENT_DRAWS_PER_STEP * n)
        _kernel.run_chunk(code, tables.Q, tables.Qhat, tables.N, ints, floats, lo, hi, R,
                          p.B, p.M, p.alpha, cfg.sigma, cfg.delta, cfg.epsilon, cfg.phi,
                          cfg.theta, cfg.ref_state, fixed, env_u, agent_u, record_t,
                          out_cum, out_match, exact, has_exact)
        done += n
    tables.t = int(ints[1])
    return out_cum, (out_match if has_exact else None), tables, int(ints[3]), float(floats[1])


def exact_reference(p: QueueParams):
    """Exact gain and optimal policy used as the regret / match baseline."""
    res = relative_value_iteration(build_transition_model(p))
    return res.gain, res.policy


@dataclass(frozen=True)
class CompareRow:
    agent: str
    seed: int
    final_avg_reward: float
    final_regret: float
    first_match_step: int | None
    final_match: bool


def multi_seed_compare(p: QueueParams, kinds: Sequence[str], cfg: LearnerConfig | None, T: int,
                       seeds: Sequence[int], record: Sequence[int] | None = None,
                       keep_runs: bool = False):
    """Run every agent kind on every seed against the exact baseline.

    Returns ``(rows, summary)`` -- one :class:`CompareRow` per (agent, seed)
    in input order, and per-agent mean/min/max of the final average reward and
    regret plus the first-match steps.  With ``keep_runs`` a third element maps
    ``(agent, seed)`` to the full :class:`RunMetrics`.
    """
    if len(seeds) == 0:
        raise ValueError("need at least one seed")
    cfg = cfg or LearnerConfig()
    g_star, policy = exact_reference(p)
    rows, runs = [], {}
    for kind in kinds:
        for seed in seeds:
            m = run_experiment(p, kind, replace(cfg, seed=int(seed)), T, g_star, record,
                               exact_policy=policy)
            rows.append(CompareRow(kind, int(seed), m.final_avg_reward, m.final_regret,
                                   m.first_match_step, bool(m.match[-1])))
            if keep_runs:
                runs[(kind, int(seed))] = m
    summary = {}
    for kind in dict.fromkeys(kinds):
        mine = [r for r in rows if r.agent == kind]
        avg = np.array([r.final_avg_reward for r in mine])
        reg = np.array([r.final_regret for r in mine])
        summary[kind] = {
            "mean_final_avg_reward": float(avg.mean()), "min_final_avg_reward": float(avg.min()),
            "max_final_avg_reward": float(avg.max()), "mean_final_regret": float(reg.mean()),
            "min_final_regret": float(reg.min()), "max_final_regret": float(reg.max()),
            "first_match_steps": [r.first_match_step for r in mine],
            "final_matches": sum(r.final_match for r in mine),
        }
    if keep_runs:
        return rows, summary, runs
    return rows, summary


@dataclass
class AlphaPoint:
    alpha: float
    exact_gain: float
    exact_policy: tuple[int, ...]
    learned_policy: np.ndarray | None
    run: RunMetrics | None


def alpha_sweep(p: QueueParams, alphas: Sequence[float], kind: str | None = "qgreedyucb",
                cfg: LearnerConfig | None = None, T: int = 0) -> list[AlphaPoint]:
    """Exact solution (and optionally a learner run) for each arrival probability.

    With ``kind=None`` or ``T=0`` only the exact part is computed.
    """
    if len(alphas) == 0:
        raise ValueError("alphas must be nonempty")
    out = []
    for alpha in alphas:
        pa = p.with_alpha(alpha)
        g, pol = exact_reference(pa)
        run = None
        if kind is not None and T > 0:
            run = run_experiment(pa, kind, cfg, T, g, exact_policy=pol)
        out.append(AlphaPoint(float(alpha), g, pol, None if run is None else run.final_policy, run))
    return out


def policy_nondecreasing_in_alpha(points: Sequence[AlphaPoint]) -> bool:
    """Pointwise comparison of exact policies across increasing alpha."""
    pts = sorted(points, key=lambda x: x.alpha)
    return all(all(a <= b for a, b in zip(x.exact_policy, y.exact_policy))
               for x, y in zip(pts, pts[1:]))
