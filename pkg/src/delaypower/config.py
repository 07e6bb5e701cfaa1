"""Run configuration and its ``key = value`` text format.

One setting per line, ``#`` starts a comment, list values are comma
separated.  ``emit`` writes every key in a fixed order, so
``parse(emit(cfg)) == cfg`` holds for any valid configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .learners import AGENT_KINDS, LearnerConfig
from .mdp import QueueParams, validate_params


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    B: int = 10
    M: int = 5
    C: int = 4
    alpha: float = 0.4
    lam: float = 1.0
    sigma: float = 1.0
    delta: float = 0.01
    epsilon: float = 0.01
    phi: float = 1.0
    theta: float = 1.0
    ref_state: int = 0
    horizon: int = 1_000_000
    seeds: tuple[int, ...] = (0,)
    agents: tuple[str, ...] = ("qgreedyucb",)
    out: str = "out"
    lambdas: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 5.0)
    alphas: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7)
    sweep: str = "lambda"
    cap: int = 1_000_000
    tol: float = 1e-10
    max_iter: int = 1_000_000
    e_th: float | None = None

    def queue_params(self) -> QueueParams:
        return QueueParams(self.B, self.M, self.C, self.alpha, self.lam)

    def learner_config(self, seed: int | None = None) -> LearnerConfig:
        return LearnerConfig(self.sigma, self.delta, self.epsilon, self.phi, self.theta,
                             self.ref_state, (self.seeds[0] if self.seeds else 0) if seed is None else seed)

    def as_dict(self) -> dict:
        return {_KEY_OF.get(f.name, f.name): getattr(self, f.name) for f in fields(self)}


# file/flag spelling differs where the field name would be a Python keyword
_KEY_OF = {"lam": "lambda"}
_FIELD_OF = {v: k for k, v in _KEY_OF.items()}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(name: str, raw: str):
    kind = _TYPES[name]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float | None":
            return None if raw in ("", "none", "None") else float(raw)
        if kind == "str":
            return raw
        items = [x.strip() for x in raw.split(",") if x.strip()]
        if kind == "tuple[int, ...]":
            return tuple(int(x) for x in items)
        if kind == "tuple[float, ...]":
            return tuple(float(x) for x in items)
        if kind == "tuple[str, ...]":
            return tuple(items)
    except ValueError as exc:
        raise ConfigError(f"bad value for {_KEY_OF.get(name, name)}: {raw!r} ({exc})") from None
    raise AssertionError(kind)


def parse(text: str) -> RunConfig:
    values, unknown = {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (x.strip() for x in line.split("=", 1))
        name = _FIELD_OF.get(key, key)
        if name not in _TYPES:
            unknown.append(key)
            continue
        values[name] = _convert(name, raw)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return RunConfig(**values)


def _emit_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(_emit_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit(cfg: RunConfig) -> str:
    return "".join(f"{k} = {_emit_value(v)}\n" for k, v in cfg.as_dict().items())


def load(path: str | Path) -> RunConfig:
    return parse(Path(path).read_text())


def override(cfg: RunConfig, **changes) -> RunConfig:
    """Apply non-``None`` overrides given by field or file-key name."""
    clean = {}
    for key, value in changes.items():
        if value is None:
            continue
        name = _FIELD_OF.get(key, key)
        if name not in _TYPES:
            raise ConfigError(f"unknown config keys: {key}")
        clean[name] = value
    return replace(cfg, **clean)


def problems(cfg: RunConfig, strict: bool = True) -> list[str]:
    out = validate_params(cfg.queue_params(), strict) + cfg.learner_config().problems()
    bad = [a for a in cfg.agents if a not in AGENT_KINDS]
    if bad:
        out.append(f"unknown agent kind(s) {bad}; expected {list(AGENT_KINDS)}")
    if not 0 <= cfg.ref_state <= cfg.B:
        out.append(f"ref_state must lie in 0..B (got {cfg.ref_state})")
    if cfg.sweep not in ("lambda", "alpha"):
        out.append(f"sweep must be 'lambda' or 'alpha' (got {cfg.sweep!r})")
    return out
