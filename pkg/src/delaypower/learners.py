"""Tabular average-reward learners.

Three agents share one interface (``select(s)`` then ``observe(s, a, r, s')``):

* :class:`QGreedyUCBAgent` -- relative Q-learning whose target carries a
  count-based confidence bonus, acting greedily on the running minimum of
  each Q-value.
* :class:`QLearningAgent` -- the same relative update without bonus, with
  epsilon-greedy exploration.
* :class:`ARLAgent` -- average-payoff (R-learning style) agent that keeps a
  scalar estimate ``rho`` of the average reward.  This follows the usual
  textbook statement of the baseline; it is a reconstruction, not a port.

All randomness is read from a :class:`~delaypower.streams.UniformStream`.
Every ``select`` call consumes exactly two uniforms ``(u_explore, u_pick)``
so that agents of any kind stay aligned on a shared seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mdp import QueueParams, action_bounds
from .streams import UniformStream

AGENT_KINDS = ("qgreedyucb", "qlearning", "arl")


@dataclass(frozen=True)
class LearnerConfig:
    sigma: float = 1.0
    delta: float = 0.01
    epsilon: float = 0.01
    phi: float = 1.0
    theta: float = 1.0
    ref_state: int = 0
    seed: int = 0

    def problems(self) -> list[str]:
        out = []
        if not self.sigma > 0:
            out.append(f"sigma must be > 0 (got {self.sigma!r})")
        if not 0 < self.delta < 1:
            out.append(f"delta must lie in (0,1) (got {self.delta!r})")
        if not 0 <= self.epsilon <= 1:
            out.append(f"epsilon must lie in [0,1] (got {self.epsilon!r})")
        if not self.phi > 0:
            out.append(f"phi must be > 0 (got {self.phi!r})")
        if not self.theta >= 0:
            out.append(f"theta must be >= 0 (got {self.theta!r})")
        return out


def bonus(sigma: float, delta: float, S: int, A: int, k: int, t: int) -> float:
    """Confidence bonus ``sigma * sqrt(ln(S*A*k*t/delta) / k)``."""
    if k < 1 or t < 1:
        raise ValueError(f"bonus needs k >= 1 and t >= 1 (got k={k}, t={t})")
    return sigma * math.sqrt(math.log(S * A * k * t / delta) / k)


def step_size(phi: float, theta: float, k: int) -> float:
    return phi / (k + theta)


@dataclass(frozen=True)
class ActionSpace:
    """Per-state feasible action intervals ``[lo[s], hi[s]]``."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def from_params(cls, p: QueueParams) -> "ActionSpace":
        bounds = np.array([action_bounds(p, q) for q in range(p.n_states)], dtype=np.int64)
        return cls(bounds[:, 0].copy(), bounds[:, 1].copy())

    @property
    def n_states(self) -> int:
        return len(self.lo)

    @property
    def n_actions(self) -> int:
        return int(self.hi.max()) + 1

    def actions(self, s: int) -> range:
        return range(int(self.lo[s]), int(self.hi[s]) + 1)

    def row(self, table: np.ndarray, s: int) -> np.ndarray:
        return table[s, self.lo[s]:self.hi[s] + 1]

    def row_max(self, table: np.ndarray, s: int) -> float:
        return float(self.row(table, s).max())


@dataclass
class QTables:
    Q: np.ndarray
    Qhat: np.ndarray
    N: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, S: int, A: int) -> "QTables":
        return cls(np.zeros((S, A)), np.zeros((S, A)), np.zeros((S, A), dtype=np.int64), 0)

    def copy(self) -> "QTables":
        return QTables(self.Q.copy(), self.Qhat.copy(), self.N.copy(), self.t)


def _pick_max(row: np.ndarray, lo: int, u: float) -> int:
    ties = np.flatnonzero(row == row.max())
    return lo + int(ties[int(u * len(ties))])


def qgreedyucb_select(tables: QTables, s: int, feasible: range, rng: UniformStream) -> int:
    """Greedy action on the historical-minimum table, ties broken uniformly."""
    rng.next()  # exploration draw, unused by this agent
    u = rng.next()
    return _pick_max(tables.Qhat[s, feasible.start:feasible.stop], feasible.start, u)


def qgreedyucb_observe(tables: QTables, s: int, a: int, r: float, s_next: int,
                       cfg: LearnerConfig, space: ActionSpace) -> QTables:
    tables.N[s, a] += 1
    k = int(tables.N[s, a])
    t = tables.t + 1
    gamma = step_size(cfg.phi, cfg.theta, k)
    b = bonus(cfg.sigma, cfg.delta, space.n_states, space.n_actions, k, t)
    target = r + space.row_max(tables.Q, s_next) - space.row_max(tables.Q, cfg.ref_state) + b
    tables.Q[s, a] = (1.0 - gamma) * tables.Q[s, a] + gamma * target
    tables.Qhat[s, a] = min(tables.Qhat[s, a], tables.Q[s, a])
    tables.t = t
    return tables


def extract_policy(tables: QTables | np.ndarray, space: ActionSpace | QueueParams) -> np.ndarray:
    """Uniform distribution over the maximisers of ``Q`` in every state.

    Returns an ``(S, A)`` array whose rows sum to one; infeasible actions get
    probability zero.
    """
    if isinstance(space, QueueParams):
        space = ActionSpace.from_params(space)
    Q = tables.Q if isinstance(tables, QTables) else np.asarray(tables)
    pol = np.zeros(Q.shape)
    for s in range(space.n_states):
        row = space.row(Q, s)
        best = np.flatnonzero(row == row.max()) + space.lo[s]
        pol[s, best] = 1.0 / len(best)
    return pol


def greedy_sets(tables: QTables | np.ndarray, space: ActionSpace) -> list[frozenset[int]]:
    pol = extract_policy(tables, space)
    return [frozenset(np.flatnonzero(row).tolist()) for row in pol]


def matches_policy(tables: QTables | np.ndarray, space: ActionSpace, policy) -> bool:
    """True when every state's greedy set is exactly ``{policy[s]}``."""
    return all(g == {int(a)} for g, a in zip(greedy_sets(tables, space), policy))


@dataclass
class Agent:
    """Common state and bookkeeping for the tabular agents."""

    params: QueueParams
    cfg: LearnerConfig = field(default_factory=LearnerConfig)
    rng: UniformStream | None = None

    kind = "base"

    def __post_init__(self):
        self.space = ActionSpace.from_params(self.params)
        self.tables = QTables.zeros(self.params.n_states, self.params.n_actions)
        if self.rng is None:
            self.rng = UniformStream(self.cfg.seed)
        self.explored = False

    def select(self, s: int) -> int:
        raise NotImplementedError

    def observe(self, s: int, a: int, r: float, s_next: int) -> None:
        raise NotImplementedError

    def policy(self) -> np.ndarray:
        return extract_policy(self.tables, self.space)

    def _epsilon_greedy(self, s: int, table: np.ndarray) -> int:
        u_explore = self.rng.next()
        u = self.rng.next()
        feasible = self.space.actions(s)
        self.explored = u_explore < self.cfg.epsilon
        if self.explored:
            return feasible.start + int(u * len(feasible))
        return _pick_max(table[s, feasible.start:feasible.stop], feasible.start, u)


class QGreedyUCBAgent(Agent):
    kind = "qgreedyucb"

    def select(self, s: int) -> int:
        return qgreedyucb_select(self.tables, s, self.space.actions(s), self.rng)

    def observe(self, s: int, a: int, r: float, s_next: int) -> None:
        qgreedyucb_observe(self.tables, s, a, r, s_next, self.cfg, self.space)


class QLearningAgent(Agent):
    """Relative Q-learning with epsilon-greedy exploration and no bonus."""

    kind = "qlearning"

    def select(self, s: int) -> int:
        return self._epsilon_greedy(s, self.tables.Q)

    def observe(self, s: int, a: int, r: float, s_next: int) -> None:
        tab = self.tables
        tab.N[s, a] += 1
        gamma = step_size(self.cfg.phi, self.cfg.theta, int(tab.N[s, a]))
        target = r + self.space.row_max(tab.Q, s_next) - self.space.row_max(tab.Q, self.cfg.ref_state)
        tab.Q[s, a] = (1.0 - gamma) * tab.Q[s, a] + gamma * target
        tab.t += 1


class ARLAgent(Agent):
    """Average-payoff learner.

    ``Q(s,a) += gamma_k (r - rho + max Q(s') - Q(s,a))`` every step; on
    non-exploratory steps ``rho += beta_n (r + max Q(s') - max Q(s) - rho)``
    with ``beta_n = 1/(n+1)``, ``n`` counting greedy steps (this one included).
    The ``rho`` update reads Q after this step's Q update.
    """

    kind = "arl"

    def __post_init__(self):
        super().__post_init__()
        self.rho = 0.0
        self.n_greedy = 0

    def select(self, s: int) -> int:
        return self._epsilon_greedy(s, self.tables.Q)

    def observe(self, s: int, a: int, r: float, s_next: int) -> None:
        tab = self.tables
        tab.N[s, a] += 1
        gamma = step_size(self.cfg.phi, self.cfg.theta, int(tab.N[s, a]))
        next_max = self.space.row_max(tab.Q, s_next)
        tab.Q[s, a] = tab.Q[s, a] + gamma * (r - self.rho + next_max - tab.Q[s, a])
        if not self.explored:
            self.n_greedy += 1
            beta = 1.0 / (self.n_greedy + 1)
            next_max = self.space.row_max(tab.Q, s_next)
            self.rho = self.rho + beta * (r + next_max - self.space.row_max(tab.Q, s) - self.rho)
        tab.t += 1


class FixedPolicyAgent(Agent):
    """Plays a given deterministic policy; keeps visit counts only."""

    kind = "fixed"

    def __init__(self, params: QueueParams, policy, cfg: LearnerConfig | None = None,
                 rng: UniformStream | None = None):
        self.fixed = np.asarray(policy, dtype=np.int64)
        super().__init__(params, cfg or LearnerConfig(), rng)

    def select(self, s: int) -> int:
        self.rng.next()
        self.rng.next()
        return int(self.fixed[s])

    def observe(self, s: int, a: int, r: float, s_next: int) -> None:
        self.tables.N[s, a] += 1
        self.tables.t += 1

    def policy(self) -> np.ndarray:
        pol = np.zeros((self.params.n_states, self.params.n_actions))
        pol[np.arange(len(self.fixed)), self.fixed] = 1.0
        return pol


_AGENTS = {cls.kind: cls for cls in (QGreedyUCBAgent, QLearningAgent, ARLAgent)}


def make_agent(kind: str, params: QueueParams, cfg: LearnerConfig | None = None,
               rng: UniformStream | None = None, policy=None) -> Agent:
    cfg = cfg or LearnerConfig()
    if kind == "fixed":
        if policy is None:
            raise ValueError("the fixed agent needs a policy")
        return FixedPolicyAgent(params, policy, cfg, rng)
    try:
        cls = _AGENTS[kind]
    except KeyError:
        raise ValueError(f"unknown agent kind {kind!r}; expected one of {AGENT_KINDS}") from None
    return cls(params, cfg, rng)
