"""CSV and metadata writers.

All files are comma separated with ``\\n`` line endings and a header row.
Floats are written with ``repr`` so they read back bit-for-bit.  Every file is
written to a temporary sibling first and renamed into place.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

POLICY_COLUMNS = ("state", "action")
TRADEOFF_COLUMNS = ("policy_id", "D", "E", "on_frontier")
SWEEP_COLUMNS = ("lambda", "gain", "D", "E", "policy")
ALPHA_SWEEP_COLUMNS = ("alpha", "gain", "D", "E", "policy")
METRICS_COLUMNS = ("t", "cum_reward", "avg_reward", "regret")
COMPARE_COLUMNS = ("agent", "seed", "final_avg_reward", "final_regret", "first_match_step")
QTABLE_COLUMNS = ("state", "action", "Q", "Qhat", "N")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def join_policy(policy: Iterable[int]) -> str:
    return ";".join(str(int(a)) for a in policy)


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return atomic_write_text(path, buf.getvalue())


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_policy(path, policy: Sequence[int]) -> Path:
    return write_csv(path, POLICY_COLUMNS, enumerate(int(a) for a in policy))


def deterministic_from_stochastic(pol: np.ndarray) -> list[int]:
    """Smallest action carrying positive probability in each state."""
    return [int(np.flatnonzero(row > 0)[0]) for row in pol]


def write_tradeoff(path, points, frontier) -> Path:
    on = {v.policy_id for v in frontier}
    rows = sorted(points, key=lambda t: (t.D, t.policy_id))
    return write_csv(path, TRADEOFF_COLUMNS, ((t.policy_id, t.D, t.E, t.policy_id in on) for t in rows))


def write_sweep(path, sweep) -> Path:
    return write_csv(path, SWEEP_COLUMNS, (
        (pt.lam, pt.result.gain, pt.evaluation.D, pt.evaluation.E, join_policy(pt.result.policy))
        for pt in sweep))


def write_metrics(path, metrics) -> Path:
    regret = metrics.regret if metrics.regret is not None else [None] * len(metrics.t)
    return write_csv(path, METRICS_COLUMNS, zip(metrics.t, metrics.cum_reward, metrics.avg_reward, regret))


def write_compare(path, rows) -> Path:
    return write_csv(path, COMPARE_COLUMNS, (
        (r.agent, r.seed, r.final_avg_reward, r.final_regret,
         "never" if r.first_match_step is None else r.first_match_step) for r in rows))


def write_qtable(path, tables, space) -> Path:
    rows = []
    for s in range(space.n_states):
        for a in space.actions(s):
            rows.append((s, a, tables.Q[s, a], tables.Qhat[s, a], tables.N[s, a]))
    return write_csv(path, QTABLE_COLUMNS, rows)


def write_metadata(path, items: dict) -> Path:
    """Key-value sidecar, one ``key = value`` per line in insertion order."""
    lines = [f"{k} = {fmt(v) if not isinstance(v, (list, tuple)) else ','.join(fmt(x) for x in v)}"
             for k, v in items.items()]
    return atomic_write_text(path, "\n".join(lines) + "\n")
