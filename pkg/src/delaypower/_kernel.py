"""Compiled training loop.

Mirrors ``learners`` and ``sim.env_step`` operation for operation (same draw
order, same floating-point expression order) so that a compiled run is
bit-identical to the pure-Python one.  Only used through
:func:`delaypower.sim.run_experiment`.
"""

import math

import numpy as np
from numba import njit

KIND_CODES = {"qgreedyucb": 0, "qlearning": 1, "arl": 2, "fixed": 3}


@njit(cache=True)
def _row_max(table, s, lo, hi):
    best = table[s, lo[s]]
    for a in range(lo[s] + 1, hi[s] + 1):
        if table[s, a] > best:
            best = table[s, a]
    return best


@njit(cache=True)
def _pick_max(table, s, lo, hi, u):
    best = _row_max(table, s, lo, hi)
    n = 0
    for a in range(lo[s], hi[s] + 1):
        if table[s, a] == best:
            n += 1
    j = int(u * n)
    for a in range(lo[s], hi[s] + 1):
        if table[s, a] == best:
            if j == 0:
                return a
            j -= 1
    return hi[s]


@njit(cache=True)
def _matches(Q, lo, hi, policy):
    for s in range(Q.shape[0]):
        target = policy[s]
        v = Q[s, target]
        for a in range(lo[s], hi[s] + 1):
            if a != target and Q[s, a] >= v:
                return False
    return True


@njit(cache=True)
def run_chunk(kind, Q, Qhat, N, ints, floats, lo, hi, R, B, M, alpha,
              sigma, delta, epsilon, phi, theta, ref, fixed,
              env_u, agent_u, record_t, out_cum, out_match, exact, has_exact):
    """Advance one chunk of ``len(env_u)`` steps.

    ``ints`` = [q, t, n_greedy, dropped_total, rec_idx];
    ``floats`` = [cum_reward, rho].
    """
    S = Q.shape[0]
    A = Q.shape[1]
    q = ints[0]
    t = ints[1]
    n_greedy = ints[2]
    dropped_total = ints[3]
    rec = ints[4]
    cum = floats[0]
    rho = floats[1]
    n_rec = record_t.shape[0]
    for i in range(env_u.shape[0]):
        u_explore = agent_u[2 * i]
        u_pick = agent_u[2 * i + 1]
        explored = False
        if kind == 0:
            a = _pick_max(Qhat, q, lo, hi, u_pick)
        elif kind == 3:
            a = fixed[q]
        else:
            explored = u_explore < epsilon
            if explored:
                a = lo[q] + int(u_pick * (hi[q] - lo[q] + 1))
            else:
                a = _pick_max(Q, q, lo, hi, u_pick)

        r = R[q, a]
        tau = 1 if env_u[i] < alpha else 0
        raw = q - a + M * tau
        q_next = raw if raw < B else B
        if raw > B:
            dropped_total += raw - B

        N[q, a] += 1
        k = N[q, a]
        if kind == 0:
            gamma = phi / (k + theta)
            b = sigma * math.sqrt(math.log(S * A * k * (t + 1) / delta) / k)
            target = r + _row_max(Q, q_next, lo, hi) - _row_max(Q, ref, lo, hi) + b
            Q[q, a] = (1.0 - gamma) * Q[q, a] + gamma * target
            if Q[q, a] < Qhat[q, a]:
                Qhat[q, a] = Q[q, a]
        elif kind == 1:
            gamma = phi / (k + theta)
            target = r + _row_max(Q, q_next, lo, hi) - _row_max(Q, ref, lo, hi)
            Q[q, a] = (1.0 - gamma) * Q[q, a] + gamma * target
        elif kind == 2:
            gamma = phi / (k + theta)
            next_max = _row_max(Q, q_next, lo, hi)
            Q[q, a] = Q[q, a] + gamma * (r - rho + next_max - Q[q, a])
            if not explored:
                n_greedy += 1
                beta = 1.0 / (n_greedy + 1)
                next_max = _row_max(Q, q_next, lo, hi)
                rho = rho + beta * (r + next_max - _row_max(Q, q, lo, hi) - rho)

        t += 1
        cum += r
        q = q_next
        if rec < n_rec and t == record_t[rec]:
            out_cum[rec] = cum
            if has_exact:
                out_match[rec] = _matches(Q, lo, hi, exact)
            rec += 1

    ints[0] = q
    ints[1] = t
    ints[2] = n_greedy
    ints[3] = dropped_total
    ints[4] = rec
    floats[0] = cum
    floats[1] = rho
