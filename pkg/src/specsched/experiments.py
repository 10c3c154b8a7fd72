"""Policy comparison tables and conditional idle probability curves."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import Decimal

from .fading import FadingParams
from .model import Mode, ModelConfig, SystemState
from .occupancy import OccupancyParams, Phase, conditional_idle_curve, insignificance_threshold
from .policy import PolicyKind, PolicySpec, evaluate_policy, solve_cached

TABLE1_DELTAS = (0.8, 0.4, 0.2, 0.1)
TABLE2_US = (1, 3, 5)

# two channels, two mini-slots per control slot, six control slots
BASE = dict(n_channels=2, minislots=2, beta=0.9, horizon=6)
TABLE1_INITIAL = dict(ages=(10, 5), beliefs=(0.4, 0.7))
TABLE2_INITIAL = dict(ages=(0, 1), beliefs=(0.4, 0.7))


@dataclass(frozen=True)
class ComparisonRow:
    sweep: float
    v_genie: float
    v_ori: float
    v_random: float

    @property
    def d_ga_ori(self) -> float:
        return self.v_genie - self.v_ori

    @property
    def pct_ga_ori(self) -> float:
        return 100.0 * self.d_ga_ori / self.v_genie

    @property
    def d_ori_rnd(self) -> float:
        return self.v_ori - self.v_random

    @property
    def pct_ori_rnd(self) -> float:
        return 100.0 * self.d_ori_rnd / self.v_ori

    def values(self) -> list[float]:
        return [self.sweep, self.d_ga_ori, self.pct_ga_ori, self.d_ori_rnd,
                self.pct_ori_rnd, self.v_genie, self.v_ori, self.v_random]


def symmetric_fading(delta: float) -> FadingParams:
    """``p - r = delta`` with ``p + r = 1``."""
    d = Decimal(str(delta))
    return FadingParams(float((1 + d) / 2), float((1 - d) / 2))


def both_idle(ages, beliefs, horizon) -> SystemState:
    return SystemState.build([Phase.IDLE] * len(ages), ages, beliefs, horizon)


def comparison_row(cfg: ModelConfig, initial: SystemState, sweep: float) -> ComparisonRow:
    v_genie = solve_cached(cfg, initial, Mode.GENIE)[0]
    v_ori = solve_cached(cfg, initial, Mode.ORIGINAL)[0]
    v_random = evaluate_policy(PolicySpec(PolicyKind.RANDOMIZED, Mode.ORIGINAL), cfg, initial)
    return ComparisonRow(sweep, float(v_genie), float(v_ori), float(v_random))


def table1_config(delta: float) -> ModelConfig:
    return ModelConfig(**BASE, fading=symmetric_fading(delta),
                       occupancy=OccupancyParams(1, 1.0, 2.0))


def table2_config(u: int) -> ModelConfig:
    return ModelConfig(**BASE, fading=FadingParams(0.9, 0.1),
                       occupancy=OccupancyParams(u, 1.0, 2.0))


def table1_rows(deltas=TABLE1_DELTAS) -> list[ComparisonRow]:
    initial = both_idle(**TABLE1_INITIAL, horizon=BASE["horizon"])
    return [comparison_row(table1_config(d), initial, d) for d in deltas]


def table2_rows(us=TABLE2_US) -> list[ComparisonRow]:
    initial = both_idle(**TABLE2_INITIAL, horizon=BASE["horizon"])
    return [comparison_row(table2_config(u), initial, u) for u in us]


def fmt(v: float) -> str:
    return f"{v:.6g}"


def rows_to_csv(rows: list[ComparisonRow], sweep_name: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow([sweep_name, "d_ga_ori", "pct_ga_ori", "d_ori_rnd", "pct_ori_rnd",
                "v_genie", "v_ori", "v_random"])
    for row in rows:
        w.writerow([fmt(v) for v in row.values()])
    return buf.getvalue()


def idle_curves(us, c_idle: float, x_max: int, c_busy: float = 1.0):
    """Per ``u``: the idle-history curve for x = 1..x_max and its threshold."""
    if x_max < 2:
        raise ValueError("x_max must be >= 2")
    out = {}
    for u in us:
        params = OccupancyParams(u, c_idle, c_busy)
        series = conditional_idle_curve(params, Phase.IDLE, x_max)
        out[u] = (series, insignificance_threshold([v for _, v in series]))
    return out


def curves_to_csv(curves) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["u", "x", "p_idle", "x0"])
    for u, (series, x0) in curves.items():
        for x, v in series:
            w.writerow([u, x, fmt(v), x0])
    return buf.getvalue()
