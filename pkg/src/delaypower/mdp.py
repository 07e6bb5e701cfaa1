"""Single-queue, single-server transmission scheduling MDP.

State is the queue length ``q`` in ``{0, ..., B}``, the action is the number
of packets ``c`` sent this slot.  Each slot a batch of ``M`` packets arrives
with probability ``alpha``.  The per-slot reward is the negated Lagrangian
cost ``-(q / (alpha * M) + lambda * c**2)``.

Feasible actions keep the buffer from under/overflowing:
``max(0, q - B + M) <= c <= min(q, C)``.  When that interval is empty (only
possible for ``q > B - M + C``) the action set falls back to ``{C}`` and the
next state is clamped at ``B``; the packets that do not fit are counted as
dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class ParameterError(ValueError):
    """Raised when a :class:`QueueParams` instance violates its invariants."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class InfeasibleActionError(ValueError):
    pass


@dataclass(frozen=True)
class QueueParams:
    B: int
    M: int
    C: int
    alpha: float
    lam: float = 1.0

    @property
    def n_states(self) -> int:
        return self.B + 1

    @property
    def n_actions(self) -> int:
        return self.C + 1

    def with_lambda(self, lam: float) -> "QueueParams":
        return replace(self, lam=float(lam))

    def with_alpha(self, alpha: float) -> "QueueParams":
        return replace(self, alpha=float(alpha))


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def validate_params(p: QueueParams, strict: bool = True) -> list[str]:
    """Return every violated invariant of ``p`` (empty list when valid).

    ``strict=False`` admits the degenerate ``B == M`` case: every state still
    has a feasible action, so the chain is well defined even though the
    learning problem requires ``B > M``.
    """
    problems = []
    for name in ("B", "M", "C"):
        v = getattr(p, name)
        if not _is_int(v) or v < 1:
            problems.append(f"{name} must be a positive integer (got {v!r})")
    if _is_int(p.B) and _is_int(p.M):
        if p.B < 2:
            problems.append(f"B must be at least 2 (got {p.B})")
        if p.B < p.M or (strict and p.B == p.M):
            problems.append(f"B must exceed M (got B={p.B}, M={p.M})")
    if not (0.0 < p.alpha < 1.0):
        problems.append(f"alpha out of (0,1) (got {p.alpha!r})")
    if not (p.lam >= 0.0):
        problems.append(f"lambda must be >= 0 (got {p.lam!r})")
    return problems


def check_params(p: QueueParams, strict: bool = True) -> None:
    problems = validate_params(p, strict)
    if problems:
        raise ParameterError(problems)


def action_bounds(p: QueueParams, q: int) -> tuple[int, int]:
    """Inclusive ``(lo, hi)`` bounds of the feasible action interval at ``q``."""
    lo = max(0, q - p.B + p.M)
    hi = min(q, p.C)
    if lo > hi:
        return p.C, p.C
    return lo, hi


def feasible_actions(p: QueueParams, q: int) -> range:
    if not 0 <= q <= p.B:
        raise ValueError(f"state {q} outside 0..{p.B}")
    lo, hi = action_bounds(p, q)
    return range(lo, hi + 1)


def is_fallback_state(p: QueueParams, q: int) -> bool:
    return max(0, q - p.B + p.M) > min(q, p.C)


def _check_action(p: QueueParams, q: int, c: int) -> None:
    if c not in feasible_actions(p, q):
        raise InfeasibleActionError(f"action {c} is not feasible in state {q}")


def next_state(p: QueueParams, q: int, c: int, tau: int) -> tuple[int, int]:
    """Apply one slot of queue dynamics; returns ``(q_next, dropped)``."""
    _check_action(p, q, c)
    raw = q - c + p.M * int(tau)
    return min(raw, p.B), max(raw - p.B, 0)


def transition_distribution(p: QueueParams, q: int, c: int) -> dict[int, float]:
    _check_action(p, q, c)
    up = min(q - c + p.M, p.B)
    down = q - c
    out = {up: p.alpha}
    out[down] = out.get(down, 0.0) + (1.0 - p.alpha)
    return out


def delay(p: QueueParams, q) -> float:
    # Little's law: queue length divided by the arrival rate in packets/slot
    return q / (p.alpha * p.M)


def energy(c):
    return c * c


def immediate_reward(p: QueueParams, q: int, c: int) -> float:
    _check_action(p, q, c)
    return -(delay(p, q) + p.lam * energy(c))


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """Dense tables for exact computations.

    ``kernel[s, a, s']`` and ``rewards[s, a]`` are only meaningful where
    ``feasible[s, a]`` is true; other cells hold zeros.  ``lo``/``hi`` give
    the contiguous feasible action interval of each state.
    """

    params: QueueParams
    kernel: np.ndarray
    rewards: np.ndarray
    feasible: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    fallback: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_actions(self) -> int:
        return self.kernel.shape[1]

    def actions(self, s: int) -> range:
        return range(int(self.lo[s]), int(self.hi[s]) + 1)


def build_transition_model(p: QueueParams) -> TransitionModel:
    check_params(p, strict=False)
    S, A = p.n_states, p.n_actions
    kernel = np.zeros((S, A, S))
    rewards = np.zeros((S, A))
    feasible = np.zeros((S, A), dtype=bool)
    lo = np.zeros(S, dtype=np.int64)
    hi = np.zeros(S, dtype=np.int64)
    fallback = np.zeros(S, dtype=bool)
    for q in range(S):
        lo[q], hi[q] = action_bounds(p, q)
        fallback[q] = is_fallback_state(p, q)
        for c in range(lo[q], hi[q] + 1):
            feasible[q, c] = True
            for q_next, prob in transition_distribution(p, q, c).items():
                kernel[q, c, q_next] += prob
            rewards[q, c] = immediate_reward(p, q, c)
    for arr in (kernel, rewards, feasible, lo, hi, fallback):
        arr.setflags(write=False)
    return TransitionModel(p, kernel, rewards, feasible, lo, hi, fallback)
