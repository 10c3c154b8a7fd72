"""JSON experiment configuration: parsing, validation and serialization.

Schema (unknown keys are rejected at every level)::

    {
      "model": {
        "n_channels": 2, "minislots": 2, "beta": 0.9, "horizon": 6,
        "p": 0.9, "r": 0.1,            # or "delta": 0.8 (symmetric p, r)
        "u": 1, "c_idle": 1, "c_busy": 2
      },
      "initial": {"phases": ["idle", "idle"], "ages": [10, 5], "beliefs": [0.4, 0.7]},
      "policy": "optimal",             # optimal | greedy | random
      "mode": "original",              # original | genie
      "simulation": {"trajectories": 100000, "seed": 0},
      "output": null                   # optional result path
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from typing import Optional

from .fading import FadingParams
from .model import Mode, ModelConfig, SystemState
from .occupancy import OccupancyParams, Phase
from .policy import PolicyKind, PolicySpec


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


MODEL_KEYS = {"n_channels", "minislots", "beta", "horizon", "p", "r", "delta", "u", "c_idle", "c_busy"}
INITIAL_KEYS = {"phases", "ages", "beliefs"}
SIM_KEYS = {"trajectories", "seed"}
TOP_KEYS = {"model", "initial", "policy", "mode", "simulation", "output"}


@dataclass(frozen=True)
class ExperimentConfig:
    n_channels: int
    minislots: int
    beta: float
    horizon: int
    p: float
    r: float
    u: int
    c_idle: float
    c_busy: float
    phases: tuple[str, ...]
    ages: tuple[int, ...]
    beliefs: tuple[float, ...]
    policy: str = "optimal"
    mode: str = "original"
    trajectories: int = 100_000
    seed: int = 0
    output: Optional[str] = None

    def __post_init__(self):
        validate(self)

    def model(self) -> ModelConfig:
        return ModelConfig(
            n_channels=self.n_channels,
            minislots=self.minislots,
            beta=self.beta,
            horizon=self.horizon,
            fading=FadingParams(self.p, self.r),
            occupancy=OccupancyParams(self.u, self.c_idle, self.c_busy),
        )

    def initial_state(self) -> SystemState:
        phases = [Phase.IDLE if ph == "idle" else Phase.BUSY for ph in self.phases]
        return SystemState.build(phases, self.ages, self.beliefs, self.horizon)

    def policy_spec(self) -> PolicySpec:
        return PolicySpec(PolicyKind(self.policy), Mode(self.mode))

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "model": {k: d[k] for k in ("n_channels", "minislots", "beta", "horizon",
                                        "p", "r", "u", "c_idle", "c_busy")},
            "initial": {"phases": list(self.phases), "ages": list(self.ages),
                        "beliefs": list(self.beliefs)},
            "policy": self.policy,
            "mode": self.mode,
            "simulation": {"trajectories": self.trajectories, "seed": self.seed},
            "output": self.output,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float, Decimal)) and not isinstance(v, bool)


def validate(c: ExperimentConfig) -> None:
    def need(cond, name, msg):
        if not cond:
            raise ConfigError(name, msg)

    need(_is_int(c.n_channels) and c.n_channels >= 1, "model.n_channels", "must be an integer >= 1")
    need(_is_int(c.minislots) and c.minislots >= 1, "model.minislots", "must be an integer >= 1")
    need(_is_int(c.horizon) and c.horizon >= 1, "model.horizon", "must be an integer >= 1")
    need(_is_num(c.beta) and 0 < c.beta < 1, "model.beta", "must lie in (0, 1)")
    need(_is_num(c.p) and 0 < c.p < 1, "model.p", "must lie in (0, 1)")
    need(_is_num(c.r) and 0 < c.r < 1, "model.r", "must lie in (0, 1)")
    need(c.r <= c.p, "model.r", "fading must be positively correlated (r <= p)")
    need(_is_int(c.u) and c.u >= 1, "model.u", "must be an integer >= 1")
    need(_is_num(c.c_idle) and c.c_idle > 0, "model.c_idle", "must be positive")
    need(_is_num(c.c_busy) and c.c_busy > 0, "model.c_busy", "must be positive")
    for name in ("phases", "ages", "beliefs"):
        need(len(getattr(c, name)) == c.n_channels, f"initial.{name}",
             f"needs exactly n_channels={c.n_channels} entries")
    need(all(ph in ("idle", "busy") for ph in c.phases), "initial.phases",
         "entries must be 'idle' or 'busy'")
    need(all(_is_int(x) and x >= 0 for x in c.ages), "initial.ages",
         "entries must be integers >= 0")
    need(all(_is_num(b) and 0 < b < 1 for b in c.beliefs), "initial.beliefs",
         "entries must lie in (0, 1)")
    need(c.policy in {k.value for k in PolicyKind}, "policy",
         "must be one of optimal, greedy, random")
    need(c.mode in {m.value for m in Mode}, "mode", "must be 'original' or 'genie'")
    need(_is_int(c.trajectories) and c.trajectories >= 1, "simulation.trajectories",
         "must be an integer >= 1")
    need(_is_int(c.seed) and 0 <= c.seed < 2**64, "simulation.seed",
         "must be an integer in [0, 2**64)")
    need(c.output is None or isinstance(c.output, str), "output", "must be a path string")


def _section(doc, name, keys, required=True):
    sec = doc.get(name)
    if sec is None:
        if required:
            raise ConfigError(name, "missing section")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(name, "must be an object")
    extra = set(sec) - keys
    if extra:
        raise ConfigError(f"{name}.{sorted(extra)[0]}", "unknown key")
    return sec


def _get(sec, prefix, key, default=None, required=True):
    if key not in sec:
        if required:
            raise ConfigError(f"{prefix}.{key}", "missing")
        return default
    return sec[key]


def _float(v, name):
    if not _is_num(v):
        raise ConfigError(name, "must be a number")
    return float(v)


def from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    extra = set(doc) - TOP_KEYS
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown key")
    model = _section(doc, "model", MODEL_KEYS)
    initial = _section(doc, "initial", INITIAL_KEYS)
    sim = _section(doc, "simulation", SIM_KEYS, required=False)

    if "delta" in model:
        if "p" in model or "r" in model:
            raise ConfigError("model.delta", "give either delta or p and r, not both")
        delta = model["delta"]
        if not _is_num(delta) or not 0 <= delta < 1:
            raise ConfigError("model.delta", "must lie in [0, 1)")
        delta = Decimal(str(delta))
        p, r = (1 + delta) / 2, (1 - delta) / 2
    else:
        p, r = _get(model, "model", "p"), _get(model, "model", "r")

    def seq(key):
        v = _get(initial, "initial", key)
        if not isinstance(v, list):
            raise ConfigError(f"initial.{key}", "must be a list")
        return v

    return ExperimentConfig(
        n_channels=_get(model, "model", "n_channels"),
        minislots=_get(model, "model", "minislots"),
        beta=_float(_get(model, "model", "beta"), "model.beta"),
        horizon=_get(model, "model", "horizon"),
        p=_float(p, "model.p"),
        r=_float(r, "model.r"),
        u=_get(model, "model", "u"),
        c_idle=_float(_get(model, "model", "c_idle"), "model.c_idle"),
        c_busy=_float(_get(model, "model", "c_busy"), "model.c_busy"),
        phases=tuple(seq("phases")),
        ages=tuple(seq("ages")),
        beliefs=tuple(_float(b, "initial.beliefs") for b in seq("beliefs")),
        policy=doc.get("policy", "optimal"),
        mode=doc.get("mode", "original"),
        trajectories=_get(sim, "simulation", "trajectories", 100_000, required=False),
        seed=_get(sim, "simulation", "seed", 0, required=False),
        output=doc.get("output"),
    )


def loads(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", str(exc)) from None
    return from_dict(doc)


def load(path) -> ExperimentConfig:
    return loads(Path(path).read_text())
