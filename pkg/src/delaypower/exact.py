"""Model-based ground truth for the scheduling MDP.

Relative value iteration gives the optimal gain and a deterministic optimal
policy; stationary distributions give exact ``(D, E)`` of any deterministic
policy.  On top of those sit monotone-policy enumeration, the delay-power
frontier, lambda sweeps and a frontier-mixing solver for the power-constrained
problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .mdp import QueueParams, TransitionModel, build_transition_model, check_params, feasible_actions

# actions whose one-step lookahead is within this of the best count as ties;
# ties resolve to the smallest (cheapest) action
_ARGMAX_TOL = 1e-9


class NoConvergenceError(RuntimeError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"relative value iteration did not converge after "
                         f"{iterations} iterations (span residual {residual:.3e})")


class SingularChainError(RuntimeError):
    pass


class InfeasibleConstraintError(ValueError):
    pass


class InfeasiblePolicyError(ValueError):
    pass


@dataclass(frozen=True)
class SolveResult:
    gain: float
    bias: np.ndarray
    policy: tuple[int, ...]
    iterations: int
    residual: float


@dataclass(frozen=True)
class PolicyEval:
    stationary: np.ndarray
    D: float
    E: float
    gain: float


@dataclass(frozen=True)
class TradeoffPoint:
    D: float
    E: float
    policy_id: int


def _greedy(values: np.ndarray, model: TransitionModel) -> np.ndarray:
    policy = np.empty(model.n_states, dtype=np.int64)
    for s in range(model.n_states):
        row = values[s, model.lo[s]:model.hi[s] + 1]
        best = row.max()
        policy[s] = model.lo[s] + int(np.flatnonzero(row >= best - _ARGMAX_TOL)[0])
    return policy


def _lookahead(model: TransitionModel, h: np.ndarray) -> np.ndarray:
    # R(s,a) + sum_s' P(s'|s,a) h(s'); infeasible cells pushed far below
    values = model.rewards + model.kernel @ h
    return np.where(model.feasible, values, -np.inf)


def relative_value_iteration(model: TransitionModel, ref_state: int = 0, tol: float = 1e-10,
                             max_iter: int = 1_000_000) -> SolveResult:
    """Average-reward relative value iteration.

    Each sweep computes ``v(s) = max_a [R(s,a) + sum_s' P h(s')]`` and sets
    ``h = v - v(ref_state)``.  Stops when the span of ``h_new - h_old`` is at
    most ``tol``; the subtracted ``v(ref_state)`` is then the gain.
    """
    if not 0 <= ref_state < model.n_states:
        raise ValueError(f"ref_state {ref_state} outside the state space")
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = np.zeros(model.n_states)
    residual = np.inf
    gain = 0.0
    for it in range(1, max_iter + 1):
        v = _lookahead(model, h).max(axis=1)
        gain = v[ref_state]
        h_new = v - gain
        diff = h_new - h
        residual = float(diff.max() - diff.min())
        h = h_new
        if residual <= tol:
            policy = _greedy(_lookahead(model, h), model)
            return SolveResult(float(gain), h, tuple(int(a) for a in policy), it, residual)
    raise NoConvergenceError(max_iter, residual)


def solve(p: QueueParams, **kwargs) -> SolveResult:
    return relative_value_iteration(build_transition_model(p), **kwargs)


def _check_policy(model: TransitionModel, pi: Sequence[int]) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.int64)
    if pi.shape != (model.n_states,):
        raise InfeasiblePolicyError(f"policy needs {model.n_states} entries, got {pi.shape}")
    bad = [s for s in range(model.n_states) if not model.lo[s] <= pi[s] <= model.hi[s]]
    if bad:
        raise InfeasiblePolicyError(f"infeasible actions at states {bad}")
    return pi


def policy_chain(model: TransitionModel, pi: Sequence[int]) -> np.ndarray:
    pi = _check_policy(model, pi)
    return model.kernel[np.arange(model.n_states), pi].copy()


def stationary_distribution(chain: np.ndarray, start: int = 0) -> np.ndarray:
    """Long-run state distribution of a chain started in ``start``.

    Transient states get zero mass.  If several closed classes are reachable
    from ``start`` the result weights each class's stationary law by its
    absorption probability, i.e. the Cesaro limit of ``P^n[start]``.
    """
    P = np.asarray(chain, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n) or np.any(P < 0) or not np.allclose(P.sum(axis=1), 1.0, atol=1e-12):
        raise ValueError("chain must be a square row-stochastic matrix")

    n_comp, labels = connected_components(P > 0, directed=True, connection="strong")
    closed = []
    for c in range(n_comp):
        members = labels == c
        if P[np.ix_(members, ~members)].sum() == 0.0:
            closed.append(c)

    recurrent = np.isin(labels, closed)
    transient = ~recurrent
    # absorption probabilities into each closed class, from every transient state
    if recurrent[start]:
        weights = {labels[start]: 1.0}
    else:
        T = np.flatnonzero(transient)
        Q = P[np.ix_(T, T)]
        idx = int(np.flatnonzero(T == start)[0])
        try:
            fundamental_row = np.linalg.solve((np.eye(len(T)) - Q).T, np.eye(len(T))[idx])
        except np.linalg.LinAlgError as exc:
            raise SingularChainError(str(exc)) from exc
        weights = {}
        for c in closed:
            into = P[np.ix_(T, labels == c)].sum(axis=1)
            w = float(fundamental_row @ into)
            if w > 0:
                weights[c] = w

    pi = np.zeros(n)
    for c, w in weights.items():
        members = np.flatnonzero(labels == c)
        sub = P[np.ix_(members, members)]
        k = len(members)
        # pi (I - P) = 0 with one balance equation replaced by normalisation
        A = (np.eye(k) - sub).T
        A[-1, :] = 1.0
        rhs = np.zeros(k)
        rhs[-1] = 1.0
        try:
            local = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularChainError(str(exc)) from exc
        pi[members] += w * np.clip(local, 0.0, None)
    total = pi.sum()
    if not np.isfinite(total) or total <= 0:
        raise SingularChainError("stationary solve produced no probability mass")
    return pi / total


def evaluate_policy(model: TransitionModel, pi: Sequence[int]) -> PolicyEval:
    p = model.params
    pi = _check_policy(model, pi)
    stat = stationary_distribution(policy_chain(model, pi))
    q = np.arange(model.n_states)
    D = float(stat @ q) / (p.alpha * p.M)
    E = float(stat @ (pi.astype(float) ** 2))
    return PolicyEval(stat, D, E, -(D + p.lam * E))


def enumerate_monotone_policies(p: QueueParams) -> list[tuple[int, ...]]:
    """All feasible deterministic policies with ``c(q)`` nondecreasing in ``q``.

    Returned in lexicographic order of the action vector.
    """
    check_params(p, strict=False)
    sets = [list(feasible_actions(p, q)) for q in range(p.n_states)]
    out: list[tuple[int, ...]] = []
    prefix: list[int] = []

    def extend(q: int, floor: int) -> None:
        if q == len(sets):
            out.append(tuple(prefix))
            return
        for c in sets[q]:
            if c >= floor:
                prefix.append(c)
                extend(q + 1, c)
                prefix.pop()

    extend(0, 0)
    return out


def count_monotone_policies(p: QueueParams) -> int:
    """Number of policies :func:`enumerate_monotone_policies` would return."""
    check_params(p, strict=False)
    # ways[c] = number of valid prefixes ending in action c
    ways = {c: 1 for c in feasible_actions(p, 0)}
    for q in range(1, p.n_states):
        ways = {c: sum(n for prev, n in ways.items() if prev <= c) for c in feasible_actions(p, q)}
    return sum(ways.values())


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def tradeoff_frontier(points: Sequence[TradeoffPoint], tol: float = 1e-12) -> list[TradeoffPoint]:
    """Lower-left convex frontier of ``(D, E)`` points.

    Vertices come back sorted by increasing ``D`` with strictly decreasing
    ``E``.  Collinear interior points are dropped; among coincident points
    the smallest ``policy_id`` is kept.
    """
    if not points:
        raise ValueError("need at least one point")
    pts = sorted(points, key=lambda t: (t.D, t.E, t.policy_id))
    hull: list[TradeoffPoint] = []
    for pt in pts:
        if hull and hull[-1].D == pt.D and hull[-1].E <= pt.E:
            continue
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            scale = max(1.0, abs(a.D), abs(a.E), abs(pt.D), abs(pt.E)) ** 2
            if _cross((a.D, a.E), (b.D, b.E), (pt.D, pt.E)) <= tol * scale:
                hull.pop()
            else:
                break
        hull.append(pt)
    # lower hull runs from min-D to max-D; keep the decreasing part only
    best_e = min(range(len(hull)), key=lambda i: (hull[i].E, hull[i].D))
    return hull[:best_e + 1]


def frontier_energy(frontier: Sequence[TradeoffPoint], D: float) -> float:
    """Piecewise-linear frontier value ``E(D)``; flat beyond the last vertex."""
    if D <= frontier[0].D:
        return frontier[0].E if D == frontier[0].D else np.inf
    for a, b in zip(frontier, frontier[1:]):
        if D <= b.D:
            w = (D - a.D) / (b.D - a.D)
            return a.E + w * (b.E - a.E)
    return frontier[-1].E


def distance_to_frontier(frontier: Sequence[TradeoffPoint], D: float, E: float) -> float:
    """Euclidean distance from ``(D, E)`` to the frontier polyline."""
    pts = np.array([(v.D, v.E) for v in frontier])
    x = np.array([D, E])
    if len(pts) == 1:
        return float(np.linalg.norm(x - pts[0]))
    best = np.inf
    for a, b in zip(pts, pts[1:]):
        seg = b - a
        t = np.clip((x - a) @ seg / (seg @ seg), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(x - (a + t * seg))))
    return best


def policy_points(p: QueueParams, policies: Sequence[Sequence[int]] | None = None):
    """Evaluate ``policies`` (default: all monotone ones) into trade-off points."""
    model = build_transition_model(p)
    if policies is None:
        policies = enumerate_monotone_policies(p)
    evals = [evaluate_policy(model, pi) for pi in policies]
    points = [TradeoffPoint(ev.D, ev.E, i) for i, ev in enumerate(evals)]
    return list(policies), evals, points


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    result: SolveResult
    evaluation: PolicyEval


def sweep_lambda(p: QueueParams, lambdas: Sequence[float], **rvi_kwargs) -> list[SweepPoint]:
    """Solve the Lagrangian problem for each multiplier in ``lambdas``.

    ``p.lam`` is ignored.  Results come back in the order given.
    """
    if len(lambdas) == 0:
        raise ValueError("lambdas must be nonempty")
    if any(lam < 0 for lam in lambdas):
        raise ValueError("lambdas must be >= 0")
    out = []
    for lam in lambdas:
        model = build_transition_model(p.with_lambda(lam))
        res = relative_value_iteration(model, **rvi_kwargs)
        out.append(SweepPoint(float(lam), res, evaluate_policy(model, res.policy)))
    return out


@dataclass(frozen=True)
class Mixture:
    """Time-sharing of at most two frontier policies."""

    weights: dict[int, float]
    D: float
    E: float


def constraint_solve(frontier: Sequence[TradeoffPoint], E_th: float) -> Mixture:
    """Minimum-delay point on the frontier with average power at most ``E_th``.

    Realised by time-sharing the two adjacent frontier policies that bracket
    ``E_th`` (or a single vertex when the bound is slack or hits it exactly).
    """
    if not frontier:
        raise ValueError("frontier is empty")
    first = frontier[0]
    if E_th >= first.E:
        return Mixture({first.policy_id: 1.0}, first.D, first.E)
    if E_th < frontier[-1].E:
        raise InfeasibleConstraintError(
            f"E_th={E_th} is below the minimum achievable power {frontier[-1].E}")
    for v1, v2 in zip(frontier, frontier[1:]):
        if E_th == v2.E:
            return Mixture({v2.policy_id: 1.0}, v2.D, v2.E)
        if v2.E < E_th < v1.E:
            w = (E_th - v2.E) / (v1.E - v2.E)
            D = w * v1.D + (1.0 - w) * v2.D
            return Mixture({v1.policy_id: w, v2.policy_id: 1.0 - w}, D, E_th)
    raise AssertionError("frontier is not sorted by decreasing E")


def h_operator(model: TransitionModel, Q: np.ndarray, bonus: np.ndarray | float = 0.0) -> np.ndarray:
    """``(HQ)(s,a) = sum_s' P(s'|s,a) (R(s,a) + max_a' Q(s',a') + b(s,a))``.

    Defined on feasible cells; infeasible cells of the result are zero and
    infeasible cells of ``Q`` are never read.
    """
    Q = np.asarray(Q, dtype=float)
    vmax = np.array([Q[s, model.lo[s]:model.hi[s] + 1].max() for s in range(model.n_states)])
    inner = model.kernel @ vmax
    out = model.kernel.sum(axis=2) * (model.rewards + np.broadcast_to(bonus, model.rewards.shape)) + inner
    return np.where(model.feasible, out, 0.0)
